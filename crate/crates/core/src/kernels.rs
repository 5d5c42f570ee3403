//! Radial kernel families, Gaussian scale mixtures, sphere characteristic
//! functions and Gram-matrix assembly.
//!
//! Every profile here takes the *squared* distance `s = ‖z - z̃‖²`. With that
//! convention a single-atom mixture at scale `r` is exactly the Gaussian
//! kernel with `ρ = 1/r²`.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::numerics::{bessel_j, bessel_k, gamma_fn, BESSEL_J_SERIES_LIMIT};

/// Discrete mixing distribution over Gaussian scales: `(r, weight)` atoms.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaleMixture {
    atoms: Vec<(f64, f64)>,
}

impl ScaleMixture {
    /// Weights must already sum to one (within 1e-12).
    pub fn new(atoms: Vec<(f64, f64)>) -> Result<Self> {
        Self::check_atoms(&atoms)?;
        let total: f64 = atoms.iter().map(|a| a.1).sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::Parameter(format!(
                "mixture weights sum to {total}, not 1"
            )));
        }
        Ok(ScaleMixture { atoms })
    }

    /// Rescale weights to sum to one. The flag reports whether the input
    /// sum was off by more than 1e-9.
    pub fn normalized(atoms: Vec<(f64, f64)>) -> Result<(Self, bool)> {
        Self::check_atoms(&atoms)?;
        let total: f64 = atoms.iter().map(|a| a.1).sum();
        let warned = (total - 1.0).abs() > 1e-9;
        let atoms = atoms.into_iter().map(|(r, w)| (r, w / total)).collect();
        Ok((ScaleMixture { atoms }, warned))
    }

    fn check_atoms(atoms: &[(f64, f64)]) -> Result<()> {
        if atoms.is_empty() {
            return Err(Error::Parameter("mixture needs at least one atom".into()));
        }
        for (i, &(r, w)) in atoms.iter().enumerate() {
            if !(r >= 0.0) || !r.is_finite() {
                return Err(Error::Parameter(format!(
                    "atom scale {r} must be finite and >= 0"
                )));
            }
            if !(w > 0.0) || !w.is_finite() {
                return Err(Error::Parameter(format!(
                    "atom weight {w} must be positive"
                )));
            }
            if atoms[..i].iter().any(|a| a.0 == r) {
                return Err(Error::Parameter(format!("duplicate atom scale {r}")));
            }
        }
        Ok(())
    }

    pub fn atoms(&self) -> &[(f64, f64)] {
        &self.atoms
    }

    /// Σ wᵢ exp(-rᵢ² t), t ≥ 0.
    pub fn psi(&self, t: f64) -> Result<f64> {
        if !(t >= 0.0) {
            return Err(Error::Domain(format!("psi requires t >= 0, got {t}")));
        }
        Ok(self.psi_unchecked(t))
    }

    fn psi_unchecked(&self, t: f64) -> f64 {
        self.atoms
            .iter()
            .map(|&(r, w)| w * (-r * r * t).exp())
            .sum()
    }

    /// Parse the plain-text mixture format: one `r w` pair per line, `#`
    /// starts a comment. Returns the mixture and whether weights had to be
    /// renormalized by more than 1e-9.
    pub fn parse(text: &str) -> Result<(Self, bool)> {
        let mut atoms = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            let parse_err = |message: String| Error::Parse {
                line: idx + 1,
                message,
            };
            if fields.len() != 2 {
                return Err(parse_err(format!("expected `r w`, got `{line}`")));
            }
            let r: f64 = fields[0]
                .parse()
                .map_err(|_| parse_err(format!("bad scale `{}`", fields[0])))?;
            let w: f64 = fields[1]
                .parse()
                .map_err(|_| parse_err(format!("bad weight `{}`", fields[1])))?;
            atoms.push((r, w));
        }
        let (mixture, warned) = Self::normalized(atoms)?;
        if warned {
            log::warn!("mixture weights did not sum to 1; renormalized");
        }
        Ok((mixture, warned))
    }
}

pub fn psi_from_mixture(m: &ScaleMixture, t: f64) -> Result<f64> {
    m.psi(t)
}

/// A radially symmetric kernel `K(z, z̃) = φ(‖z - z̃‖²)` with `φ(0) = 1`.
#[derive(Debug, Clone, PartialEq)]
pub enum RadialKernel {
    Gaussian { rho: f64 },
    Matern { c: f64, nu: f64 },
    GeneralizedCauchy { c: f64, tau: f64, alpha: f64 },
    PoweredExponential { c: f64, alpha: f64 },
    Mixture(ScaleMixture),
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::Parameter(format!(
            "{name} must be positive, got {v}"
        )))
    }
}

fn shape_exponent(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha <= 2.0 {
        Ok(())
    } else {
        Err(Error::Parameter(format!(
            "alpha must lie in (0, 2], got {alpha}"
        )))
    }
}

impl RadialKernel {
    pub fn gaussian(rho: f64) -> Result<Self> {
        let k = RadialKernel::Gaussian { rho };
        k.validate().map(|_| k)
    }

    pub fn matern(c: f64, nu: f64) -> Result<Self> {
        let k = RadialKernel::Matern { c, nu };
        k.validate().map(|_| k)
    }

    pub fn generalized_cauchy(c: f64, tau: f64, alpha: f64) -> Result<Self> {
        let k = RadialKernel::GeneralizedCauchy { c, tau, alpha };
        k.validate().map(|_| k)
    }

    pub fn powered_exponential(c: f64, alpha: f64) -> Result<Self> {
        let k = RadialKernel::PoweredExponential { c, alpha };
        k.validate().map(|_| k)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            RadialKernel::Gaussian { rho } => positive("rho", rho),
            RadialKernel::Matern { c, nu } => {
                positive("c", c)?;
                positive("nu", nu)
            }
            RadialKernel::GeneralizedCauchy { c, tau, alpha } => {
                positive("c", c)?;
                positive("tau", tau)?;
                shape_exponent(alpha)
            }
            RadialKernel::PoweredExponential { c, alpha } => {
                positive("c", c)?;
                shape_exponent(alpha)
            }
            RadialKernel::Mixture(_) => Ok(()),
        }
    }

    pub fn family_name(&self) -> &'static str {
        match self {
            RadialKernel::Gaussian { .. } => "gaussian",
            RadialKernel::Matern { .. } => "matern",
            RadialKernel::GeneralizedCauchy { .. } => "cauchy",
            RadialKernel::PoweredExponential { .. } => "powexp",
            RadialKernel::Mixture(_) => "mixture",
        }
    }

    /// Radial profile on squared distance. Assumes valid parameters.
    pub fn profile(&self, s: f64) -> f64 {
        match self {
            RadialKernel::Gaussian { rho } => (-s / rho).exp(),
            RadialKernel::PoweredExponential { c, alpha } => (-(s.sqrt() / c).powf(*alpha)).exp(),
            RadialKernel::GeneralizedCauchy { c, tau, alpha } => {
                (1.0 + (s.sqrt() / c).powf(*alpha)).powf(-tau / alpha)
            }
            RadialKernel::Matern { c, nu } => matern_profile(s, *c, *nu),
            RadialKernel::Mixture(m) => m.psi_unchecked(s),
        }
    }

    pub fn eval(&self, z: &[f64], zt: &[f64]) -> Result<f64> {
        if z.len() != zt.len() {
            return Err(Error::Shape(format!(
                "kernel arguments have dimensions {} and {}",
                z.len(),
                zt.len()
            )));
        }
        self.validate()?;
        Ok(self.profile(squared_distance(z, zt)))
    }
}

fn matern_profile(s: f64, c: f64, nu: f64) -> f64 {
    if s == 0.0 {
        return 1.0;
    }
    let h = s.sqrt() / c;
    if h > 700.0 {
        return 0.0;
    }
    // Validated parameters keep these in-domain.
    let k = bessel_k(nu, h).unwrap_or(f64::INFINITY);
    let g = gamma_fn(nu).unwrap_or(f64::INFINITY);
    let v = 2f64.powf(1.0 - nu) / g * h.powf(nu) * k;
    if v.is_finite() {
        v.min(1.0)
    } else {
        // h^ν K_ν(h) overflowed on the way to its finite limit at h → 0.
        1.0
    }
}

pub fn eval_kernel(k: &RadialKernel, z: &[f64], zt: &[f64]) -> Result<f64> {
    k.eval(z, zt)
}

pub fn kernel_from_mixture(m: ScaleMixture) -> RadialKernel {
    RadialKernel::Mixture(m)
}

pub fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

impl fmt::Display for RadialKernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RadialKernel::Gaussian { rho } => write!(f, "gaussian(rho={rho})"),
            RadialKernel::Matern { c, nu } => write!(f, "matern(c={c},nu={nu})"),
            RadialKernel::GeneralizedCauchy { c, tau, alpha } => {
                write!(f, "cauchy(c={c},tau={tau},alpha={alpha})")
            }
            RadialKernel::PoweredExponential { c, alpha } => {
                write!(f, "powexp(c={c},alpha={alpha})")
            }
            RadialKernel::Mixture(m) => {
                let atoms: Vec<String> =
                    m.atoms().iter().map(|(r, w)| format!("{r}:{w}")).collect();
                write!(f, "mixture(atoms={})", atoms.join(";"))
            }
        }
    }
}

impl FromStr for RadialKernel {
    type Err = Error;

    /// Grammar: `family(name=value,...)`.
    fn from_str(spec: &str) -> Result<Self> {
        let bad = |message: String| Error::Parse { line: 1, message };
        let spec = spec.trim();
        let open = spec
            .find('(')
            .ok_or_else(|| bad(format!("expected `family(...)`, got `{spec}`")))?;
        if !spec.ends_with(')') {
            return Err(bad(format!("missing `)` in `{spec}`")));
        }
        let family = spec[..open].trim().to_ascii_lowercase();
        let body = &spec[open + 1..spec.len() - 1];
        let mut params: Vec<(String, String)> = Vec::new();
        for item in body.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let (k, v) = item
                .split_once('=')
                .ok_or_else(|| bad(format!("expected name=value, got `{item}`")))?;
            params.push((k.trim().to_ascii_lowercase(), v.trim().to_string()));
        }
        let take = |name: &str| -> Result<f64> {
            let raw = params
                .iter()
                .find(|(k, _)| k == name)
                .map(|(_, v)| v)
                .ok_or_else(|| bad(format!("{family} requires `{name}`")))?;
            raw.parse()
                .map_err(|_| bad(format!("`{name}` is not a number: `{raw}`")))
        };
        let allowed: &[&str] = match family.as_str() {
            "gaussian" | "rbf" => &["rho"],
            "matern" => &["c", "nu"],
            "cauchy" | "gencauchy" | "generalized_cauchy" => &["c", "tau", "alpha"],
            "powexp" | "powered_exponential" => &["c", "alpha"],
            "mixture" => &["atoms"],
            other => return Err(bad(format!("unknown kernel family `{other}`"))),
        };
        if let Some((k, _)) = params.iter().find(|(k, _)| !allowed.contains(&k.as_str())) {
            return Err(bad(format!("unknown parameter `{k}` for {family}")));
        }
        match family.as_str() {
            "gaussian" | "rbf" => RadialKernel::gaussian(take("rho")?),
            "matern" => RadialKernel::matern(take("c")?, take("nu")?),
            "cauchy" | "gencauchy" | "generalized_cauchy" => {
                RadialKernel::generalized_cauchy(take("c")?, take("tau")?, take("alpha")?)
            }
            "powexp" | "powered_exponential" => {
                RadialKernel::powered_exponential(take("c")?, take("alpha")?)
            }
            _ => {
                let raw = params
                    .iter()
                    .find(|(k, _)| k == "atoms")
                    .map(|(_, v)| v.as_str())
                    .ok_or_else(|| bad("mixture requires `atoms`".into()))?;
                let mut atoms = Vec::new();
                for pair in raw.split(';').map(str::trim).filter(|s| !s.is_empty()) {
                    let (r, w) = pair
                        .split_once(':')
                        .ok_or_else(|| bad(format!("atom `{pair}` is not r:w")))?;
                    let r: f64 = r
                        .trim()
                        .parse()
                        .map_err(|_| bad(format!("bad scale in `{pair}`")))?;
                    let w: f64 = w
                        .trim()
                        .parse()
                        .map_err(|_| bad(format!("bad weight in `{pair}`")))?;
                    atoms.push((r, w));
                }
                let (m, _) = ScaleMixture::normalized(atoms)?;
                Ok(RadialKernel::Mixture(m))
            }
        }
    }
}

/// Characteristic function of the uniform distribution on the unit sphere
/// in Rᵖ: `Γ(p/2) (2/t)^{(p-2)/2} J_{(p-2)/2}(t)`, equal to 1 at t = 0.
pub fn omega_p(p: usize, t: f64) -> Result<f64> {
    if p < 1 {
        return Err(Error::Domain("omega_p requires p >= 1".into()));
    }
    if !(t >= 0.0) {
        return Err(Error::Domain(format!("omega_p requires t >= 0, got {t}")));
    }
    if t == 0.0 {
        return Ok(1.0);
    }
    let alpha = (p as f64 - 2.0) / 2.0;
    if t <= BESSEL_J_SERIES_LIMIT {
        // Same series with Γ(α+1) folded in: Σ (-t²/4)^m / (m! (α+1)_m).
        let q = -0.25 * t * t;
        let mut term = 1.0;
        let mut sum = 1.0;
        let mut m = 0.0;
        loop {
            m += 1.0;
            term *= q / (m * (m + alpha));
            sum += term;
            if m > 0.5 * t && term.abs() <= 1e-17 * sum.abs().max(1e-300) {
                break;
            }
            if m > 500.0 {
                break;
            }
        }
        return Ok(sum);
    }
    let j = bessel_j(alpha, t)?;
    Ok(gamma_fn(p as f64 / 2.0)? * (2.0 / t).powf(alpha) * j)
}

/// Characteristic function at `w` of the scale mixture of uniform spheres:
/// Σ wᵢ ω_p(rᵢ ‖w‖).
pub fn elliptic_cf(m: &ScaleMixture, p: usize, w: &[f64]) -> Result<f64> {
    if p < 1 {
        return Err(Error::Domain("elliptic_cf requires p >= 1".into()));
    }
    if w.len() != p {
        return Err(Error::Shape(format!(
            "w has dimension {}, expected {p}",
            w.len()
        )));
    }
    let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm == 0.0 {
        return Ok(1.0);
    }
    m.atoms()
        .iter()
        .map(|&(r, weight)| omega_p(p, r * norm).map(|o| weight * o))
        .sum()
}

/// Symmetric n×n kernel matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct GramMatrix {
    pub values: DMatrix<f64>,
    pub centered: bool,
    pub source: String,
}

impl GramMatrix {
    pub fn n(&self) -> usize {
        self.values.nrows()
    }

    pub fn from_matrix(values: DMatrix<f64>, source: impl Into<String>) -> Result<Self> {
        if !values.is_square() {
            return Err(Error::Shape(format!(
                "Gram matrix must be square, got {}x{}",
                values.nrows(),
                values.ncols()
            )));
        }
        Ok(GramMatrix {
            values,
            centered: false,
            source: source.into(),
        })
    }
}

fn rows_of(x: &DMatrix<f64>) -> Vec<Vec<f64>> {
    x.row_iter().map(|r| r.iter().copied().collect()).collect()
}

/// Pairwise kernel evaluations on the rows of `x`.
pub fn gram(k: &RadialKernel, x: &DMatrix<f64>) -> Result<GramMatrix> {
    let n = x.nrows();
    if n == 0 || x.ncols() == 0 {
        return Err(Error::Shape("gram requires a non-empty data matrix".into()));
    }
    k.validate()?;
    let rows = rows_of(x);
    let upper: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            (i..n)
                .map(|j| k.profile(squared_distance(&rows[i], &rows[j])))
                .collect()
        })
        .collect();
    let mut values = DMatrix::zeros(n, n);
    for (i, row) in upper.iter().enumerate() {
        for (off, &v) in row.iter().enumerate() {
            let j = i + off;
            values[(i, j)] = v;
            values[(j, i)] = v;
        }
    }
    Ok(GramMatrix {
        values,
        centered: false,
        source: k.to_string(),
    })
}

/// `K[i, j] = k(a_i, b_j)` for rows of `a` (m×p) and `b` (n×p).
pub fn cross_gram(k: &RadialKernel, a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if a.ncols() != b.ncols() {
        return Err(Error::Shape(format!(
            "cross kernel dimensions differ: {} vs {}",
            a.ncols(),
            b.ncols()
        )));
    }
    k.validate()?;
    let (ra, rb) = (rows_of(a), rows_of(b));
    let rows: Vec<Vec<f64>> = ra
        .par_iter()
        .map(|x| {
            rb.iter()
                .map(|y| k.profile(squared_distance(x, y)))
                .collect()
        })
        .collect();
    Ok(DMatrix::from_fn(a.nrows(), b.nrows(), |i, j| rows[i][j]))
}

/// `Q M Q` with `Q = I - 11ᵀ/n`.
pub fn double_center(m: &DMatrix<f64>) -> DMatrix<f64> {
    let n = m.nrows();
    let nf = n as f64;
    let row_means: Vec<f64> = m.row_iter().map(|r| r.sum() / nf).collect();
    let col_means: Vec<f64> = m.column_iter().map(|c| c.sum() / nf).collect();
    let grand = row_means.iter().sum::<f64>() / nf;
    DMatrix::from_fn(n, n, |i, j| m[(i, j)] - row_means[i] - col_means[j] + grand)
}

/// Double-center an uncentered Gram matrix. Already-centered input comes
/// back unchanged with the warning flag set.
pub fn center_gram(g: &GramMatrix) -> (GramMatrix, bool) {
    if g.centered {
        log::warn!("center_gram called on an already-centered matrix; left unchanged");
        return (g.clone(), true);
    }
    let values = double_center(&g.values);
    (
        GramMatrix {
            values,
            centered: true,
            source: g.source.clone(),
        },
        false,
    )
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bandwidth {
    pub gamma: f64,
    pub sigma2: f64,
}

impl Bandwidth {
    /// The Gaussian kernel `exp(-γ s)`, i.e. `ρ = 1/γ`.
    pub fn kernel(&self) -> RadialKernel {
        RadialKernel::Gaussian {
            rho: 1.0 / self.gamma,
        }
    }
}

/// σ̂² = mean of ‖dᵢ - dⱼ‖² over unordered pairs, γ̂ = 1/(2σ̂²).
pub fn bandwidth_heuristic(d: &DMatrix<f64>) -> Result<Bandwidth> {
    let n = d.nrows();
    if n < 2 {
        return Err(Error::Shape(
            "bandwidth heuristic needs at least two rows".into(),
        ));
    }
    let first = d.row(0);
    if d.row_iter().all(|r| r == first) {
        return Err(Error::DegenerateData(
            "all rows identical; mean squared distance is 0".into(),
        ));
    }
    // Σ_{i<j} ‖dᵢ - dⱼ‖² = n Σᵢ ‖dᵢ - d̄‖²
    let nf = n as f64;
    let scatter: f64 = d
        .column_iter()
        .map(|c| {
            let mean = c.sum() / nf;
            c.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>()
        })
        .sum();
    let pairs = nf * (nf - 1.0) / 2.0;
    let sigma2 = nf * scatter / pairs;
    Ok(Bandwidth {
        gamma: 1.0 / (2.0 * sigma2),
        sigma2,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::min_eig_ratio;
    use crate::numerics::{check_complete_monotone, linspace, ScalarFn, CM_STEP, CM_TOL};
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;
    use std::f64::consts::PI;

    fn normal_matrix(rng: &mut ChaCha8Rng, n: usize, p: usize) -> DMatrix<f64> {
        DMatrix::from_fn(n, p, |_, _| rng.sample(StandardNormal))
    }

    #[test]
    fn gaussian_direct_substitution() {
        let k = RadialKernel::gaussian(2.0).unwrap();
        let v = k.eval(&[0.0, 0.0], &[1.0, 1.0]).unwrap();
        assert_relative_eq!(v, (-1.0f64).exp(), max_relative = 1e-15);
    }

    #[test]
    fn every_family_is_one_on_the_diagonal() {
        let z = [0.3, -1.2, 4.0];
        for k in table_kernels() {
            assert_eq!(k.eval(&z, &z).unwrap(), 1.0, "{k}");
        }
    }

    #[test]
    fn matern_half_is_exponential() {
        let k = RadialKernel::matern(1.0, 0.5).unwrap();
        let v = k.eval(&[0.0], &[1.0]).unwrap();
        assert!((v - 0.3678794).abs() < 1e-7);
        assert_relative_eq!(v, (-1.0f64).exp(), max_relative = 1e-12);
    }

    #[test]
    fn matern_three_halves_reference() {
        // 2^{1-ν}/Γ(ν) h^ν K_ν(h) at ν = 1.5, h = 0.7 (scipy)
        let k = RadialKernel::matern(1.0, 1.5).unwrap();
        assert_relative_eq!(k.profile(0.49), 0.8441950164453962, max_relative = 1e-9);
        // closed form (1 + h) e^{-h}
        assert_relative_eq!(k.profile(0.49), 1.7 * (-0.7f64).exp(), max_relative = 1e-9);
    }

    #[test]
    fn matern_near_zero_is_continuous() {
        let k = RadialKernel::matern(1.0, 2.5).unwrap();
        assert!((k.profile(1e-20) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn eval_errors() {
        let k = RadialKernel::gaussian(1.0).unwrap();
        assert!(matches!(k.eval(&[0.0], &[0.0, 1.0]), Err(Error::Shape(_))));
        let bad = RadialKernel::PoweredExponential { c: 1.0, alpha: 2.5 };
        assert!(matches!(bad.eval(&[0.0], &[1.0]), Err(Error::Parameter(_))));
        assert!(RadialKernel::gaussian(0.0).is_err());
        assert!(RadialKernel::generalized_cauchy(1.0, 1.0, 0.0).is_err());
        assert!(RadialKernel::matern(-1.0, 1.0).is_err());
    }

    #[test]
    fn psi_examples() {
        let one = ScaleMixture::new(vec![(1.0, 1.0)]).unwrap();
        assert_relative_eq!(one.psi(1.0).unwrap(), (-1.0f64).exp(), max_relative = 1e-15);
        let two = ScaleMixture::new(vec![(1.0, 0.5), (2.0, 0.5)]).unwrap();
        assert_eq!(two.psi(0.0).unwrap(), 1.0);
        let want = 0.5 * ((-1.0f64).exp() + (-4.0f64).exp());
        assert_relative_eq!(two.psi(1.0).unwrap(), want, max_relative = 1e-15);
        assert!((want - 0.1930975).abs() < 1e-7);
        assert!(matches!(two.psi(-0.1), Err(Error::Domain(_))));
    }

    #[test]
    fn mixture_validation() {
        assert!(ScaleMixture::new(vec![]).is_err());
        assert!(ScaleMixture::new(vec![(1.0, 0.4), (1.0, 0.6)]).is_err());
        assert!(ScaleMixture::new(vec![(1.0, 0.4), (2.0, 0.5)]).is_err());
        assert!(ScaleMixture::new(vec![(-1.0, 1.0)]).is_err());
    }

    #[test]
    fn mixture_file_parsing() {
        let text = "# two atoms\n1.0 1\n2.0 1   # heavier tail\n\n";
        let (m, warned) = ScaleMixture::parse(text).unwrap();
        assert!(warned);
        assert_eq!(m.atoms(), &[(1.0, 0.5), (2.0, 0.5)]);
        let (_, warned) = ScaleMixture::parse("1 0.25\n3 0.75\n").unwrap();
        assert!(!warned);
        let err = ScaleMixture::parse("1 0.5\noops\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
    }

    #[test]
    fn single_atom_mixture_is_gaussian() {
        let rho: f64 = 2.7;
        let mix = kernel_from_mixture(ScaleMixture::new(vec![(1.0 / rho.sqrt(), 1.0)]).unwrap());
        let gauss = RadialKernel::gaussian(rho).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut worst = 0.0f64;
        for _ in 0..100 {
            let a: Vec<f64> = (0..4).map(|_| rng.sample(StandardNormal)).collect();
            let b: Vec<f64> = (0..4).map(|_| rng.sample(StandardNormal)).collect();
            worst = worst.max((mix.eval(&a, &b).unwrap() - gauss.eval(&a, &b).unwrap()).abs());
        }
        assert!(worst <= 1e-14, "sup-norm {worst}");
    }

    #[test]
    fn mixture_gram_is_psd() {
        let m = ScaleMixture::new(vec![(0.3, 0.7), (1.4, 0.3)]).unwrap();
        let k = kernel_from_mixture(m);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let x = normal_matrix(&mut rng, 30, 5);
        let g = gram(&k, &x).unwrap();
        assert!(min_eig_ratio(&g.values) >= -1e-8);
    }

    #[test]
    fn mixture_profile_is_completely_monotone_and_decreasing() {
        let m = ScaleMixture::new(vec![(0.5, 0.2), (1.0, 0.5), (2.0, 0.3)]).unwrap();
        let grid = linspace(0.1, 10.0, 100);
        let f = ScalarFn::new(|t: f64| m.psi(t).unwrap());
        assert!(
            check_complete_monotone(&f, &grid, 6, CM_STEP, CM_TOL)
                .unwrap()
                .passed
        );
        let vals: Vec<f64> = grid.iter().map(|&t| m.psi(t).unwrap()).collect();
        assert!(vals.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn omega_closed_forms() {
        for p in [1, 2, 3, 7, 50] {
            assert_eq!(omega_p(p, 0.0).unwrap(), 1.0);
        }
        for t in [0.5, 1.0, 2.0] {
            assert!((omega_p(1, t).unwrap() - t.cos()).abs() < 1e-10);
        }
        assert!(omega_p(3, PI).unwrap().abs() < 1e-12);
        for t in linspace(0.01, 10.0, 200) {
            assert!((omega_p(1, t).unwrap() - t.cos()).abs() <= 1e-8);
            assert!((omega_p(3, t).unwrap() - t.sin() / t).abs() <= 1e-8);
        }
        assert!(omega_p(0, 1.0).is_err());
    }

    #[test]
    fn omega_matches_bessel_form_and_is_bounded() {
        for p in [2usize, 4, 5, 10] {
            let alpha = (p as f64 - 2.0) / 2.0;
            for t in linspace(0.5, 40.0, 40) {
                let direct = gamma_fn(p as f64 / 2.0).unwrap()
                    * (2.0 / t).powf(alpha)
                    * bessel_j(alpha, t).unwrap();
                let w = omega_p(p, t).unwrap();
                assert!((w - direct).abs() < 1e-8, "p={p} t={t}");
                assert!(w.abs() <= 1.0 + 1e-12);
            }
        }
    }

    #[test]
    fn elliptic_cf_examples() {
        let m = ScaleMixture::new(vec![(1.0, 1.0)]).unwrap();
        assert_eq!(elliptic_cf(&m, 3, &[0.0, 0.0, 0.0]).unwrap(), 1.0);
        let w = [PI / 3f64.sqrt(); 3];
        assert!(elliptic_cf(&m, 3, &w).unwrap().abs() < 1e-12);
        assert!(elliptic_cf(&m, 3, &[1.0]).is_err());
    }

    #[test]
    fn elliptic_cf_matches_monte_carlo_on_circle() {
        let m = ScaleMixture::new(vec![(1.0, 1.0)]).unwrap();
        let dir = 0.37f64;
        let w = [1.7 * dir.cos(), 1.7 * dir.sin()];
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let draws = 1_000_000;
        let mc: f64 = (0..draws)
            .map(|_| {
                let theta = rng.random_range(0.0..2.0 * PI);
                (w[0] * theta.cos() + w[1] * theta.sin()).cos()
            })
            .sum::<f64>()
            / draws as f64;
        let cf = elliptic_cf(&m, 2, &w).unwrap();
        assert!((cf - mc).abs() < 2e-3, "cf {cf} mc {mc}");
    }

    #[test]
    fn gram_examples() {
        let k = RadialKernel::gaussian(1.0).unwrap();
        let x = DMatrix::from_row_slice(2, 1, &[0.0, 1.0]);
        let g = gram(&k, &x).unwrap();
        let e = (-1.0f64).exp();
        assert_eq!(g.values, DMatrix::from_row_slice(2, 2, &[1.0, e, e, 1.0]));
        assert!(!g.centered);

        let same = DMatrix::from_row_slice(3, 2, &[1.0, 2.0, 1.0, 2.0, 1.0, 2.0]);
        assert_eq!(
            gram(&k, &same).unwrap().values,
            DMatrix::from_element(3, 3, 1.0)
        );

        assert!(matches!(
            gram(&k, &DMatrix::zeros(0, 3)),
            Err(Error::Shape(_))
        ));
    }

    #[test]
    fn gram_with_heuristic_bandwidth_is_psd() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x = normal_matrix(&mut rng, 40, 10);
        let k = bandwidth_heuristic(&x).unwrap().kernel();
        let g = gram(&k, &x).unwrap();
        assert!(min_eig_ratio(&g.values) >= -1e-8);
        assert!((g.values.clone() - g.values.transpose()).abs().max() <= 1e-12);
        assert!(g.values.diagonal().iter().all(|&d| d == 1.0));
    }

    #[test]
    fn center_examples() {
        let ones = GramMatrix::from_matrix(DMatrix::from_element(3, 3, 1.0), "ones").unwrap();
        let (c, warned) = center_gram(&ones);
        assert!(!warned && c.centered);
        assert!(c.values.abs().max() < 1e-15);

        let a = 0.3;
        let g =
            GramMatrix::from_matrix(DMatrix::from_row_slice(2, 2, &[1.0, a, a, 1.0]), "g").unwrap();
        let (c, _) = center_gram(&g);
        let h = (1.0 - a) / 2.0;
        let want = DMatrix::from_row_slice(2, 2, &[h, -h, -h, h]);
        assert!((c.values - want).abs().max() < 1e-15);

        let (again, warned) = center_gram(&center_gram(&g).0);
        assert!(warned);
        assert_eq!(again.values, center_gram(&g).0.values);
    }

    #[test]
    fn double_centering_is_idempotent_with_zero_sums() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let x = normal_matrix(&mut rng, 25, 3);
        let g = gram(&RadialKernel::matern(1.3, 1.5).unwrap(), &x).unwrap();
        let once = double_center(&g.values);
        let twice = double_center(&once);
        assert!((&once - &twice).abs().max() <= 1e-12);
        for i in 0..25 {
            assert!(once.row(i).sum().abs() <= 1e-10);
            assert!(once.column(i).sum().abs() <= 1e-10);
        }
    }

    #[test]
    fn bandwidth_examples() {
        let two = DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 2.0, 0.0]);
        let b = bandwidth_heuristic(&two).unwrap();
        assert_relative_eq!(b.sigma2, 4.0, max_relative = 1e-14);
        assert_relative_eq!(b.gamma, 0.125, max_relative = 1e-14);

        let three = DMatrix::from_column_slice(3, 1, &[0.0, 1.0, 2.0]);
        let b = bandwidth_heuristic(&three).unwrap();
        assert_relative_eq!(b.sigma2, 2.0, max_relative = 1e-14);
        assert_relative_eq!(b.gamma, 0.25, max_relative = 1e-14);

        let same = DMatrix::from_element(4, 2, 0.1);
        assert!(matches!(
            bandwidth_heuristic(&same),
            Err(Error::DegenerateData(_))
        ));
    }

    #[test]
    fn bandwidth_matches_pair_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let x = normal_matrix(&mut rng, 17, 4);
        let rows = rows_of(&x);
        let mut total = 0.0;
        let mut count = 0.0;
        for i in 0..17 {
            for j in (i + 1)..17 {
                total += squared_distance(&rows[i], &rows[j]);
                count += 1.0;
            }
        }
        let b = bandwidth_heuristic(&x).unwrap();
        assert_relative_eq!(b.sigma2, total / count, max_relative = 1e-12);
        let scaled = bandwidth_heuristic(&(x * 3.0)).unwrap();
        assert_relative_eq!(scaled.sigma2, 9.0 * b.sigma2, max_relative = 1e-12);
        assert_relative_eq!(scaled.gamma, b.gamma / 9.0, max_relative = 1e-12);
    }

    #[test]
    fn spec_strings_round_trip() {
        for k in table_kernels() {
            let parsed: RadialKernel = k.to_string().parse().unwrap();
            assert_eq!(parsed, k);
        }
        assert!("gaussian(rho=1".parse::<RadialKernel>().is_err());
        assert!("gaussian(sigma=1)".parse::<RadialKernel>().is_err());
        assert!("bogus(rho=1)".parse::<RadialKernel>().is_err());
        assert!("matern(c=1)".parse::<RadialKernel>().is_err());
    }

    fn table_kernels() -> Vec<RadialKernel> {
        vec![
            RadialKernel::gaussian(1.5).unwrap(),
            RadialKernel::matern(0.8, 2.5).unwrap(),
            RadialKernel::generalized_cauchy(1.2, 0.7, 1.5).unwrap(),
            RadialKernel::powered_exponential(2.0, 1.0).unwrap(),
            kernel_from_mixture(ScaleMixture::new(vec![(0.5, 0.25), (1.5, 0.75)]).unwrap()),
        ]
    }
}
