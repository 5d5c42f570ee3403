//! Kernel spec strings: `family(name=value,...)`, `poly1`, or
//! `mixture:path` pointing at a scale-mixture file.

use std::path::Path;

use schoensdr::kernels::kernel_from_mixture;
use schoensdr::{KernelCandidate, RadialKernel, ScaleMixture};

use crate::exit::{read_input, CliError};

pub enum ParsedKernel {
    Radial(RadialKernel),
    Poly1,
}

pub fn parse_kernel_spec(spec: &str) -> Result<ParsedKernel, CliError> {
    let spec = spec.trim();
    if spec.eq_ignore_ascii_case("poly1") {
        return Ok(ParsedKernel::Poly1);
    }
    if let Some(path) = spec.strip_prefix("mixture:") {
        let text = read_input(Path::new(path))?;
        let (mixture, renormalized) = ScaleMixture::parse(&text)?;
        if renormalized {
            log::warn!("{path}: mixture weights renormalized to sum to 1");
        }
        return Ok(ParsedKernel::Radial(kernel_from_mixture(mixture)));
    }
    spec.parse::<RadialKernel>()
        .map(ParsedKernel::Radial)
        .map_err(|e| CliError::Usage(format!("cannot parse kernel spec `{spec}`: {e}")))
}

pub fn radial_kernel(spec: &str) -> Result<RadialKernel, CliError> {
    match parse_kernel_spec(spec)? {
        ParsedKernel::Radial(k) => Ok(k),
        ParsedKernel::Poly1 => Err(CliError::Usage("poly1 is not a radial kernel".into())),
    }
}

pub fn candidate(spec: &str) -> Result<KernelCandidate, CliError> {
    match parse_kernel_spec(spec)? {
        ParsedKernel::Poly1 => Ok(KernelCandidate::polynomial_order_one()),
        ParsedKernel::Radial(k) => Ok(KernelCandidate::from_radial(k)?),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grammar() {
        assert!(matches!(
            parse_kernel_spec("gaussian(rho=1)"),
            Ok(ParsedKernel::Radial(_))
        ));
        assert!(matches!(
            parse_kernel_spec(" POLY1 "),
            Ok(ParsedKernel::Poly1)
        ));
        assert_eq!(
            parse_kernel_spec("bogus").err().unwrap().code(),
            crate::exit::USAGE
        );
        assert_eq!(
            parse_kernel_spec("mixture:/no/such/file")
                .err()
                .unwrap()
                .code(),
            crate::exit::NO_INPUT
        );
        assert!(radial_kernel("poly1").is_err());
    }

    #[test]
    fn mixture_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.txt");
        std::fs::write(&path, "# two atoms\n1 0.5\n2 0.5\n").unwrap();
        let k = radial_kernel(&format!("mixture:{}", path.display())).unwrap();
        let want = 0.5 * ((-1.0f64).exp() + (-4.0f64).exp());
        assert!((k.eval(&[0.0], &[1.0]).unwrap() - want).abs() < 1e-15);
    }
}
