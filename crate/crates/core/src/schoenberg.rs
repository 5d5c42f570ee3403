//! Numerical screening of kernels for membership in the class of radial
//! kernels that stay positive definite in every dimension.
//!
//! A kernel passes when (a) its value depends only on the distance between
//! its arguments, (b) Gram matrices stay PSD along a ladder of dimensions,
//! and (c) its radial profile, read off along a line, passes the
//! complete-monotonicity screen. Each check can falsify membership; none of
//! them proves it.

use std::collections::BTreeMap;
use std::fmt;
use std::fmt::Write as _;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::kernels::{gram, RadialKernel};
use crate::linalg::min_eig_ratio;
use crate::numerics::{
    check_complete_monotone, linspace, MonotonicityReport, ScalarFn, CM_STEP, CM_TOL,
};

/// Worst acceptable `λmin / λmax` before a Gram matrix counts as indefinite.
pub const PSD_TOL: f64 = 1e-8;
pub const DEFAULT_DIMS: [usize; 5] = [1, 2, 5, 10, 50];

type Evaluator = Arc<dyn Fn(&[f64], &[f64]) -> f64 + Send + Sync>;
type Profile = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A bivariate kernel under test, usable in any dimension.
#[derive(Clone)]
pub struct KernelCandidate {
    name: String,
    eval: Evaluator,
    profile: Option<Profile>,
}

impl KernelCandidate {
    pub fn new(
        name: impl Into<String>,
        eval: impl Fn(&[f64], &[f64]) -> f64 + Send + Sync + 'static,
    ) -> Self {
        KernelCandidate {
            name: name.into(),
            eval: Arc::new(eval),
            profile: None,
        }
    }

    /// Declare the radial profile on squared distance.
    pub fn with_profile(mut self, profile: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        self.profile = Some(Arc::new(profile));
        self
    }

    pub fn from_radial(k: RadialKernel) -> Result<Self> {
        k.validate()?;
        let name = k.to_string();
        let for_eval = k.clone();
        Ok(
            KernelCandidate::new(name, move |a, b| for_eval.eval(a, b).unwrap_or(f64::NAN))
                .with_profile(move |s| k.profile(s)),
        )
    }

    /// `⟨z, z̃⟩ + 1`, the order-one polynomial kernel.
    pub fn polynomial_order_one() -> Self {
        KernelCandidate::new("poly1", |a, b| {
            a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>() + 1.0
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn eval(&self, z: &[f64], zt: &[f64]) -> Result<f64> {
        let v = (self.eval)(z, zt);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::KernelEvaluation {
                z: z.to_vec(),
                zt: zt.to_vec(),
            })
        }
    }

    /// Declared profile, or the one recovered along the first axis in R¹.
    pub fn radial_profile(&self) -> impl Fn(f64) -> f64 + '_ {
        move |s: f64| match &self.profile {
            Some(p) => p(s),
            None => (self.eval)(&[0.0], &[s.sqrt()]),
        }
    }

    fn gram(&self, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        let n = x.nrows();
        let rows: Vec<Vec<f64>> = x.row_iter().map(|r| r.iter().copied().collect()).collect();
        let mut g = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let v = self.eval(&rows[i], &rows[j])?;
                g[(i, j)] = v;
                g[(j, i)] = v;
            }
        }
        Ok(g)
    }
}

impl fmt::Debug for KernelCandidate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("KernelCandidate")
            .field("name", &self.name)
            .field("declared_profile", &self.profile.is_some())
            .finish()
    }
}

/// Two point pairs at equal distance whose kernel values differ.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialityWitness {
    pub pair_a: (Vec<f64>, Vec<f64>),
    pub pair_b: (Vec<f64>, Vec<f64>),
    pub value_a: f64,
    pub value_b: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RadialityOutcome {
    pub radial: bool,
    pub witness: Option<RadialityWitness>,
}

fn differs(a: f64, b: f64) -> bool {
    (a - b).abs() > 1e-8 * a.abs().max(1.0)
}

/// Haar-distributed orthogonal matrix from the QR factorization of a
/// Gaussian matrix (column signs fixed by the diagonal of R).
pub fn random_orthogonal<R: Rng + ?Sized>(p: usize, rng: &mut R) -> DMatrix<f64> {
    let g = DMatrix::from_fn(p, p, |_, _| rng.sample::<f64, _>(StandardNormal));
    let qr = g.qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..p {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q
}

fn normal_vec<R: Rng + ?Sized>(p: usize, rng: &mut R) -> DVector<f64> {
    DVector::from_fn(p, |_, _| rng.sample(StandardNormal))
}

/// Compare kernel values on base pairs against rotated and translated copies.
pub fn radiality_probe<R: Rng + ?Sized>(
    k: &KernelCandidate,
    dims: &[usize],
    pairs_per_dim: usize,
    rng: &mut R,
) -> Result<RadialityOutcome> {
    if pairs_per_dim < 10 {
        return Err(Error::Parameter(format!(
            "pairs_per_dim must be >= 10, got {pairs_per_dim}"
        )));
    }
    for &p in dims {
        for _ in 0..pairs_per_dim {
            let a = normal_vec(p, rng);
            let b = normal_vec(p, rng);
            let q = random_orthogonal(p, rng);
            let shift = normal_vec(p, rng) * 2.0;
            let a2 = &q * &a + &shift;
            let b2 = &q * &b + &shift;
            let (a, b, a2, b2) = (a.as_slice(), b.as_slice(), a2.as_slice(), b2.as_slice());
            let base = k.eval(a, b)?;
            let swapped = k.eval(b, a)?;
            if (base - swapped).abs() > 1e-12 {
                return Ok(RadialityOutcome {
                    radial: false,
                    witness: Some(RadialityWitness {
                        pair_a: (a.to_vec(), b.to_vec()),
                        pair_b: (b.to_vec(), a.to_vec()),
                        value_a: base,
                        value_b: swapped,
                    }),
                });
            }
            let moved = k.eval(a2, b2)?;
            if differs(base, moved) {
                return Ok(RadialityOutcome {
                    radial: false,
                    witness: Some(RadialityWitness {
                        pair_a: (a.to_vec(), b.to_vec()),
                        pair_b: (a2.to_vec(), b2.to_vec()),
                        value_a: base,
                        value_b: moved,
                    }),
                });
            }
        }
    }
    Ok(RadialityOutcome {
        radial: true,
        witness: None,
    })
}

/// Worst `λmin / λmax` of Gram matrices on standard-normal point sets, per
/// dimension.
pub fn psd_sweep<R: Rng + ?Sized>(
    k: &KernelCandidate,
    dims: &[usize],
    n: usize,
    draws: usize,
    rng: &mut R,
) -> Result<BTreeMap<usize, f64>> {
    if n < 2 || draws < 1 {
        return Err(Error::Parameter(format!(
            "psd_sweep needs n >= 2 and draws >= 1 (n={n}, draws={draws})"
        )));
    }
    let mut out = BTreeMap::new();
    for &p in dims {
        let mut worst = f64::INFINITY;
        for _ in 0..draws {
            let x = DMatrix::from_fn(n, p, |_, _| rng.sample(StandardNormal));
            worst = worst.min(min_eig_ratio(&k.gram(&x)?));
        }
        out.insert(p, worst);
    }
    Ok(out)
}

/// Zero-padding `R^{p_low}` into `R^{p_high}` must leave the Gram matrix
/// unchanged, and both must be PSD.
pub fn nesting_check<R: Rng + ?Sized>(
    k: &RadialKernel,
    p_low: usize,
    p_high: usize,
    n: usize,
    rng: &mut R,
) -> Result<bool> {
    if p_low < 1 || p_low >= p_high {
        return Err(Error::Parameter(format!(
            "need 1 <= p_low < p_high, got {p_low}, {p_high}"
        )));
    }
    let low = DMatrix::from_fn(n, p_low, |_, _| rng.sample(StandardNormal));
    let high = pad_columns(&low, p_high);
    let g_low = gram(k, &low)?.values;
    let g_high = gram(k, &high)?.values;
    let equal = (&g_low - &g_high).abs().max() <= 1e-12;
    Ok(equal && min_eig_ratio(&g_low) >= -PSD_TOL && min_eig_ratio(&g_high) >= -PSD_TOL)
}

pub fn pad_columns(x: &DMatrix<f64>, p: usize) -> DMatrix<f64> {
    DMatrix::from_fn(
        x.nrows(),
        p,
        |i, j| if j < x.ncols() { x[(i, j)] } else { 0.0 },
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Member,
    NotRadial,
    NotPSD,
    ProfileFails,
    Inconclusive,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Verdict::Member => "Member",
            Verdict::NotRadial => "NotRadial",
            Verdict::NotPSD => "NotPSD",
            Verdict::ProfileFails => "ProfileFails",
            Verdict::Inconclusive => "Inconclusive",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CertifyConfig {
    pub dims: Vec<usize>,
    pub n: usize,
    pub draws: usize,
    pub pairs_per_dim: usize,
    pub cm_order: usize,
    pub cm_grid: Vec<f64>,
    pub seed: u64,
}

impl Default for CertifyConfig {
    fn default() -> Self {
        CertifyConfig {
            dims: DEFAULT_DIMS.to_vec(),
            n: 40,
            draws: 3,
            pairs_per_dim: 20,
            cm_order: 6,
            cm_grid: linspace(0.1, 10.0, 100),
            seed: 20_130_221,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MembershipReport {
    pub kernel: String,
    pub radial: bool,
    pub witness: Option<RadialityWitness>,
    pub psd_by_dimension: BTreeMap<usize, f64>,
    pub profile_cm: Option<MonotonicityReport>,
    pub verdict: Verdict,
    pub seed: u64,
    /// Why the verdict is `Inconclusive`, if it is.
    pub note: Option<String>,
}

/// Radiality probe, then PSD sweep, then complete-monotonicity screen of
/// the radial profile. Evaluation failures yield `Inconclusive`.
pub fn certify_membership(k: &KernelCandidate, config: &CertifyConfig) -> MembershipReport {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut report = MembershipReport {
        kernel: k.name().to_string(),
        radial: false,
        witness: None,
        psd_by_dimension: BTreeMap::new(),
        profile_cm: None,
        verdict: Verdict::Inconclusive,
        seed: config.seed,
        note: None,
    };
    match radiality_probe(k, &config.dims, config.pairs_per_dim, &mut rng) {
        Ok(outcome) => {
            report.radial = outcome.radial;
            report.witness = outcome.witness;
        }
        Err(e) => {
            report.note = Some(e.to_string());
            return report;
        }
    }
    match psd_sweep(k, &config.dims, config.n, config.draws, &mut rng) {
        Ok(map) => report.psd_by_dimension = map,
        Err(e) => {
            report.note = Some(e.to_string());
            return report;
        }
    }
    if report.radial {
        let profile = k.radial_profile();
        let f = ScalarFn::new(profile);
        match check_complete_monotone(&f, &config.cm_grid, config.cm_order, CM_STEP, CM_TOL) {
            Ok(cm) => report.profile_cm = Some(cm),
            Err(e) => report.note = Some(e.to_string()),
        }
    }
    report.verdict = compose_verdict(&report);
    report
}

fn compose_verdict(r: &MembershipReport) -> Verdict {
    if !r.radial {
        return Verdict::NotRadial;
    }
    if r.psd_by_dimension.values().any(|&ratio| ratio < -PSD_TOL) {
        return Verdict::NotPSD;
    }
    match &r.profile_cm {
        Some(cm) if cm.passed => Verdict::Member,
        Some(_) => Verdict::ProfileFails,
        None => Verdict::Inconclusive,
    }
}

fn fmt_vec(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{x}")).collect();
    format!("[{}]", parts.join(","))
}

impl MembershipReport {
    /// Human-readable block.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "kernel:   {}", self.kernel);
        let _ = writeln!(s, "verdict:  {}", self.verdict);
        let _ = writeln!(s, "radial:   {}", if self.radial { "yes" } else { "no" });
        if let Some(w) = &self.witness {
            let _ = writeln!(
                s,
                "  witness: K{} = {} but K{} = {}",
                pair_text(&w.pair_a),
                w.value_a,
                pair_text(&w.pair_b),
                w.value_b
            );
        }
        let _ = writeln!(s, "psd (min/max eigenvalue ratio by dimension):");
        for (p, ratio) in &self.psd_by_dimension {
            let flag = if *ratio < -PSD_TOL { "  FAIL" } else { "" };
            let _ = writeln!(s, "  p = {p:>3}: {ratio:+.3e}{flag}");
        }
        match &self.profile_cm {
            Some(cm) => {
                let _ = writeln!(
                    s,
                    "profile complete monotonicity (order {}): {} ({} violations)",
                    cm.max_order_checked,
                    if cm.passed { "passed" } else { "failed" },
                    cm.violations.len()
                );
                if let Some(v) = cm.violations.first() {
                    let _ = writeln!(
                        s,
                        "  first violation: order {} at s = {} ({:+.3e})",
                        v.order, v.point, v.signed_value
                    );
                }
            }
            None => {
                let _ = writeln!(s, "profile complete monotonicity: not checked");
            }
        }
        if let Some(note) = &self.note {
            let _ = writeln!(s, "note: {note}");
        }
        let _ = writeln!(s, "seed: {}", self.seed);
        s
    }

    /// One `key=value` per line.
    pub fn to_key_values(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "kernel={}", self.kernel);
        let _ = writeln!(s, "verdict={}", self.verdict);
        let _ = writeln!(s, "radial={}", self.radial);
        if let Some(w) = &self.witness {
            let _ = writeln!(s, "witness.a.z={}", fmt_vec(&w.pair_a.0));
            let _ = writeln!(s, "witness.a.zt={}", fmt_vec(&w.pair_a.1));
            let _ = writeln!(s, "witness.a.value={}", w.value_a);
            let _ = writeln!(s, "witness.b.z={}", fmt_vec(&w.pair_b.0));
            let _ = writeln!(s, "witness.b.zt={}", fmt_vec(&w.pair_b.1));
            let _ = writeln!(s, "witness.b.value={}", w.value_b);
        }
        for (p, ratio) in &self.psd_by_dimension {
            let _ = writeln!(s, "psd.p{p}={ratio}");
        }
        match &self.profile_cm {
            Some(cm) => {
                let _ = writeln!(
                    s,
                    "profile_cm={}",
                    if cm.passed { "passed" } else { "failed" }
                );
                let _ = writeln!(s, "profile_cm.max_order={}", cm.max_order_checked);
                let _ = writeln!(s, "profile_cm.violations={}", cm.violations.len());
            }
            None => {
                let _ = writeln!(s, "profile_cm=absent");
            }
        }
        if let Some(note) = &self.note {
            let _ = writeln!(s, "note={note}");
        }
        let _ = writeln!(s, "seed={}", self.seed);
        s
    }
}

fn pair_text(pair: &(Vec<f64>, Vec<f64>)) -> String {
    format!("({}, {})", fmt_vec(&pair.0), fmt_vec(&pair.1))
}
