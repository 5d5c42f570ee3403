//! Simulation settings, Spearman metrics and the replication engine.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::kernels::{bandwidth_heuristic, Bandwidth};
use crate::sdr::{
    default_gcv_grid, fit_gsir_prepared, fit_kcca_prepared, fit_ksir_prepared, fit_sir,
    select_from_curves, GcvCurve, KernelPrep, SdrKind, SdrModel, KSIR_VAR_THRESHOLD,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CovariateLaw {
    /// N(0, I).
    V1,
    /// Equal mixture of N(1, I) and N(-1, I).
    V2,
    /// N(0, 0.6 I + 0.4 11ᵀ).
    V3,
}

impl CovariateLaw {
    pub const ALL: [CovariateLaw; 3] = [CovariateLaw::V1, CovariateLaw::V2, CovariateLaw::V3];

    /// Roman numeral label used in result tables.
    pub fn roman(self) -> &'static str {
        match self {
            CovariateLaw::V1 => "i",
            CovariateLaw::V2 => "ii",
            CovariateLaw::V3 => "iii",
        }
    }
}

impl fmt::Display for CovariateLaw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.roman())
    }
}

impl FromStr for CovariateLaw {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "v1" | "i" | "1" => Ok(CovariateLaw::V1),
            "v2" | "ii" | "2" => Ok(CovariateLaw::V2),
            "v3" | "iii" | "3" => Ok(CovariateLaw::V3),
            other => Err(Error::Parameter(format!("unknown covariate law `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CovariateSpec {
    pub law: CovariateLaw,
    pub p: usize,
}

impl CovariateSpec {
    pub fn new(law: CovariateLaw, p: usize) -> Self {
        CovariateSpec { law, p }
    }
}

/// Lower Cholesky factor of 0.6 I + 0.4 11ᵀ.
fn v3_factor(p: usize) -> DMatrix<f64> {
    let cov = DMatrix::from_fn(p, p, |i, j| if i == j { 1.0 } else { 0.4 });
    cov.cholesky()
        .expect("0.6 I + 0.4 11ᵀ is positive definite")
        .l()
}

pub fn gen_covariates<R: Rng + ?Sized>(
    spec: &CovariateSpec,
    n: usize,
    rng: &mut R,
) -> DMatrix<f64> {
    let p = spec.p;
    let mut z = DMatrix::from_fn(n, p, |_, _| rng.sample::<f64, _>(StandardNormal));
    match spec.law {
        CovariateLaw::V1 => z,
        CovariateLaw::V2 => {
            for mut row in z.row_iter_mut() {
                let shift = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
                row.add_scalar_mut(shift);
            }
            z
        }
        CovariateLaw::V3 => z * v3_factor(p).transpose(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Setting {
    /// sin(0.1π(X1 + X2)) + ε
    S1,
    /// X1 / (1 + exp(X2)) + ε
    S2,
}

impl Setting {
    pub const ALL: [Setting; 2] = [Setting::S1, Setting::S2];

    pub fn mean(self, x1: f64, x2: f64) -> f64 {
        match self {
            Setting::S1 => (0.1 * std::f64::consts::PI * (x1 + x2)).sin(),
            Setting::S2 => x1 / (1.0 + x2.exp()),
        }
    }

    pub fn number(self) -> u8 {
        match self {
            Setting::S1 => 1,
            Setting::S2 => 2,
        }
    }
}

impl fmt::Display for Setting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "S{}", self.number())
    }
}

impl FromStr for Setting {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "s1" | "1" | "setting1" => Ok(Setting::S1),
            "s2" | "2" | "setting2" => Ok(Setting::S2),
            other => Err(Error::Parameter(format!("unknown setting `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SettingSpec {
    pub setting: Setting,
    pub noise_sd: f64,
}

impl SettingSpec {
    pub fn new(setting: Setting) -> Self {
        SettingSpec {
            setting,
            noise_sd: 0.5,
        }
    }
}

/// Returns `(y, truth)` where `truth` is the noiseless mean.
pub fn gen_response<R: Rng + ?Sized>(
    spec: &SettingSpec,
    x: &DMatrix<f64>,
    rng: &mut R,
) -> Result<(Vec<f64>, Vec<f64>)> {
    if x.ncols() < 2 {
        return Err(Error::Shape(format!(
            "settings need p >= 2, got {}",
            x.ncols()
        )));
    }
    let truth: Vec<f64> = x
        .row_iter()
        .map(|r| spec.setting.mean(r[0], r[1]))
        .collect();
    let y = truth
        .iter()
        .map(|t| t + spec.noise_sd * rng.sample::<f64, _>(StandardNormal))
        .collect();
    Ok((y, truth))
}

/// Ranks starting at 1, ties receive their average rank.
pub fn average_ranks(v: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..v.len()).collect();
    order.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut ranks = vec![0.0; v.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && v[order[j + 1]] == v[order[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = avg;
        }
        i = j + 1;
    }
    ranks
}

/// Signed Spearman correlation.
pub fn spearman(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::Shape(format!(
            "lengths differ: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    if a.len() < 2 {
        return Err(Error::DegenerateData(
            "need at least two observations".into(),
        ));
    }
    if a.iter().chain(b).any(|v| !v.is_finite()) {
        return Err(Error::DegenerateData(
            "non-finite value in correlation input".into(),
        ));
    }
    let ra = DVector::from_vec(average_ranks(a));
    let rb = DVector::from_vec(average_ranks(b));
    let ca = ra.add_scalar(-ra.mean());
    let cb = rb.add_scalar(-rb.mean());
    let denom = (ca.norm_squared() * cb.norm_squared()).sqrt();
    if denom == 0.0 {
        return Err(Error::DegenerateData(
            "correlation undefined for constant input".into(),
        ));
    }
    Ok((ca.dot(&cb) / denom).clamp(-1.0, 1.0))
}

#[derive(Debug, Clone, PartialEq)]
pub enum Tuning {
    FixedZeta { zeta_x: f64, zeta_y: f64 },
    Gcv { grid: Vec<f64> },
}

impl Tuning {
    pub fn fixed(zeta: f64) -> Self {
        Tuning::FixedZeta {
            zeta_x: zeta,
            zeta_y: zeta,
        }
    }

    pub fn gcv_default() -> Self {
        Tuning::Gcv {
            grid: default_gcv_grid(30),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub setting: SettingSpec,
    pub covariates: CovariateSpec,
    pub n_train: usize,
    pub n_test: usize,
    pub n_reps: usize,
    pub methods: Vec<SdrKind>,
    pub tuning: Tuning,
    pub seed: u64,
    pub n_slices: usize,
    pub d: usize,
    pub var_threshold: f64,
}

impl ExperimentConfig {
    pub fn new(setting: Setting, law: CovariateLaw) -> Self {
        ExperimentConfig {
            setting: SettingSpec::new(setting),
            covariates: CovariateSpec::new(law, 10),
            n_train: 200,
            n_test: 200,
            n_reps: 100,
            methods: SdrKind::ALL.to_vec(),
            tuning: Tuning::fixed(0.2),
            seed: 0,
            n_slices: 10,
            d: 1,
            var_threshold: KSIR_VAR_THRESHOLD,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_reps < 1 {
            return Err(Error::Parameter("n_reps must be at least 1".into()));
        }
        if self.methods.is_empty() {
            return Err(Error::Parameter("no methods requested".into()));
        }
        if self.covariates.p < 2 {
            return Err(Error::Shape(format!(
                "p must be at least 2, got {}",
                self.covariates.p
            )));
        }
        if self.n_train < 2 * self.n_slices || self.n_test < 2 {
            return Err(Error::Parameter(format!(
                "n_train = {} too small for {} slices, or n_test = {} below 2",
                self.n_train, self.n_slices, self.n_test
            )));
        }
        if !(self.setting.noise_sd >= 0.0 && self.setting.noise_sd.is_finite()) {
            return Err(Error::Parameter(format!(
                "invalid noise sd {}",
                self.setting.noise_sd
            )));
        }
        match &self.tuning {
            Tuning::FixedZeta { zeta_x, zeta_y } => {
                for z in [zeta_x, zeta_y] {
                    if !(*z > 0.0 && *z <= 1.0) {
                        return Err(Error::Parameter(format!(
                            "zeta must lie in (0, 1], got {z}"
                        )));
                    }
                }
            }
            Tuning::Gcv { grid } => {
                if grid.is_empty() || grid.iter().any(|&z| !(z > 0.001 && z < 1.0)) {
                    return Err(Error::Parameter(
                        "GCV grid must be non-empty and inside (0.001, 1)".into(),
                    ));
                }
            }
        }
        Ok(())
    }

    /// Short label such as `S1-iii`.
    pub fn cell_label(&self) -> String {
        format!("{}-{}", self.setting.setting, self.covariates.law)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum MethodStatus {
    Ok { cor_truth: f64, cor_response: f64 },
    Failed(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct MethodOutcome {
    pub method: SdrKind,
    pub status: MethodStatus,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RepResult {
    pub rep: usize,
    pub outcomes: Vec<MethodOutcome>,
    pub bandwidth_x: Option<Bandwidth>,
    pub bandwidth_y: Option<Bandwidth>,
    /// (ζ_X, ζ_Y) actually used.
    pub zeta: Option<(f64, f64)>,
}

/// Seed for one (setting, covariate law) cell, so cells of one run draw
/// independent data while the same cell shares data across tuning modes.
pub fn cell_seed(base: u64, setting: Setting, law: CovariateLaw) -> u64 {
    let tag = 16 * setting as u64 + law as u64 + 1;
    let mut z = base.wrapping_add(tag.wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// RNG for one replication; `stream` 0 is training data, 1 is test data.
pub fn rep_rng(seed: u64, rep: usize, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(2 * rep as u64 + stream);
    rng
}

struct TrainedPreps {
    px: KernelPrep,
    py: KernelPrep,
    eta_x: f64,
    eta_y: f64,
    zeta: (f64, f64),
}

fn prepare_kernels(
    tuning: &Tuning,
    x: &DMatrix<f64>,
    y: &[f64],
    bx: &Bandwidth,
    by: &Bandwidth,
) -> Result<TrainedPreps> {
    let px = KernelPrep::new(x, &bx.kernel())?;
    let py = KernelPrep::from_response(y, &by.kernel())?;
    let zeta = match tuning {
        Tuning::FixedZeta { zeta_x, zeta_y } => (*zeta_x, *zeta_y),
        Tuning::Gcv { grid } => {
            let cx = GcvCurve::with_eigen(px.eig.clone(), &py.centered);
            let cy = GcvCurve::with_eigen(py.eig.clone(), &px.centered);
            let sel = select_from_curves(&cx, &cy, grid)?;
            (sel.zeta_x, sel.zeta_y)
        }
    };
    let eta_x = zeta.0 * px.lambda_max();
    let eta_y = zeta.1 * py.lambda_max();
    Ok(TrainedPreps {
        px,
        py,
        eta_x,
        eta_y,
        zeta,
    })
}

/// A single fit on supplied data, with the bandwidths and ζ pair it used.
#[derive(Debug, Clone)]
pub struct FitOutcome {
    pub model: SdrModel,
    pub bandwidth_x: Option<Bandwidth>,
    pub bandwidth_y: Option<Bandwidth>,
    pub zeta: Option<(f64, f64)>,
}

/// Fit one method with the simulation pipeline: heuristic Gaussian
/// bandwidths for both X and Y, then ridge parameters from `tuning`.
pub fn fit_method(
    method: SdrKind,
    x: &DMatrix<f64>,
    y: &[f64],
    tuning: &Tuning,
    n_slices: usize,
    d: usize,
    var_threshold: f64,
) -> Result<FitOutcome> {
    if x.nrows() != y.len() {
        return Err(Error::Shape(format!(
            "x has {} rows but y has {}",
            x.nrows(),
            y.len()
        )));
    }
    if method == SdrKind::Sir {
        return Ok(FitOutcome {
            model: fit_sir(x, y, n_slices, d)?,
            bandwidth_x: None,
            bandwidth_y: None,
            zeta: None,
        });
    }
    let bx = bandwidth_heuristic(x)?;
    let by = bandwidth_heuristic(&DMatrix::from_column_slice(y.len(), 1, y))?;
    let t = prepare_kernels(tuning, x, y, &bx, &by)?;
    let model = match method {
        SdrKind::Ksir => fit_ksir_prepared(&t.px, y, n_slices, d, var_threshold)?,
        SdrKind::Kcca => fit_kcca_prepared(&t.px, &t.py, t.eta_x, t.eta_y, d)?,
        _ => fit_gsir_prepared(&t.px, &t.py, t.eta_x, t.eta_y, d)?,
    };
    Ok(FitOutcome {
        model,
        bandwidth_x: Some(bx),
        bandwidth_y: Some(by),
        zeta: (method != SdrKind::Ksir).then_some(t.zeta),
    })
}

fn evaluate(
    model: &SdrModel,
    x_test: &DMatrix<f64>,
    truth: &[f64],
    y_test: &[f64],
) -> Result<(f64, f64)> {
    let pred = model.predict(x_test)?;
    let first: Vec<f64> = pred.column(0).iter().copied().collect();
    Ok((
        spearman(&first, truth)?.abs(),
        spearman(&first, y_test)?.abs(),
    ))
}

/// Generate one training and test set, fit every requested method with the
/// configured tuning and score it on the test set.
pub fn run_replication(cfg: &ExperimentConfig, rep: usize) -> RepResult {
    let mut train_rng = rep_rng(cfg.seed, rep, 0);
    let mut test_rng = rep_rng(cfg.seed, rep, 1);
    let x = gen_covariates(&cfg.covariates, cfg.n_train, &mut train_rng);
    let x_test = gen_covariates(&cfg.covariates, cfg.n_test, &mut test_rng);
    let fail_all = |cause: String| RepResult {
        rep,
        outcomes: cfg
            .methods
            .iter()
            .map(|&method| MethodOutcome {
                method,
                status: MethodStatus::Failed(cause.clone()),
            })
            .collect(),
        bandwidth_x: None,
        bandwidth_y: None,
        zeta: None,
    };
    let (y, (y_test, truth)) = match (
        gen_response(&cfg.setting, &x, &mut train_rng),
        gen_response(&cfg.setting, &x_test, &mut test_rng),
    ) {
        (Ok((y, _)), Ok(test)) => (y, test),
        (Err(e), _) | (_, Err(e)) => return fail_all(e.to_string()),
    };

    let needs_kernels = cfg.methods.iter().any(|m| *m != SdrKind::Sir);
    let mut bandwidths = (None, None);
    let mut preps: Option<std::result::Result<TrainedPreps, Error>> = None;
    if needs_kernels {
        let bw = bandwidth_heuristic(&x).and_then(|bx| {
            bandwidth_heuristic(&DMatrix::from_column_slice(y.len(), 1, &y)).map(|by| (bx, by))
        });
        match bw {
            Ok((bx, by)) => {
                preps = Some(prepare_kernels(&cfg.tuning, &x, &y, &bx, &by));
                bandwidths = (Some(bx), Some(by));
            }
            Err(e) => preps = Some(Err(e)),
        }
    }

    let outcomes = cfg
        .methods
        .iter()
        .map(|&method| {
            let model = match (method, &preps) {
                (SdrKind::Sir, _) => fit_sir(&x, &y, cfg.n_slices, cfg.d),
                (_, Some(Err(e))) => Err(e.clone()),
                (SdrKind::Ksir, Some(Ok(t))) => {
                    fit_ksir_prepared(&t.px, &y, cfg.n_slices, cfg.d, cfg.var_threshold)
                }
                (SdrKind::Kcca, Some(Ok(t))) => {
                    fit_kcca_prepared(&t.px, &t.py, t.eta_x, t.eta_y, cfg.d)
                }
                (SdrKind::Gsir, Some(Ok(t))) => {
                    fit_gsir_prepared(&t.px, &t.py, t.eta_x, t.eta_y, cfg.d)
                }
                (_, None) => {
                    unreachable!("kernel preparation runs whenever a kernel method is requested")
                }
            };
            let status = match model.and_then(|m| evaluate(&m, &x_test, &truth, &y_test)) {
                Ok((cor_truth, cor_response)) => MethodStatus::Ok {
                    cor_truth,
                    cor_response,
                },
                Err(e) => {
                    log::warn!("rep {rep}: {method} failed: {e}");
                    MethodStatus::Failed(e.to_string())
                }
            };
            MethodOutcome { method, status }
        })
        .collect();

    RepResult {
        rep,
        outcomes,
        bandwidth_x: bandwidths.0,
        bandwidth_y: bandwidths.1,
        zeta: preps.and_then(|p| p.ok()).map(|t| t.zeta),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricSummary {
    pub mean: f64,
    pub sd: f64,
}

impl MetricSummary {
    fn of(values: &[f64]) -> Self {
        let n = values.len() as f64;
        if values.iter().all(|&v| v == values[0]) {
            return MetricSummary {
                mean: values[0],
                sd: 0.0,
            };
        }
        let mean = values.iter().sum::<f64>() / n;
        let sd = if values.len() < 2 {
            0.0
        } else {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        };
        MetricSummary { mean, sd }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MethodSummary {
    pub method: SdrKind,
    pub cor_truth: MetricSummary,
    pub cor_response: MetricSummary,
    pub successes: usize,
    pub failures: usize,
    /// Set when fewer than two reps succeeded, so `sd` is reported as 0.
    pub degenerate_sd: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResult {
    pub methods: Vec<MethodSummary>,
    pub reps: Vec<RepResult>,
}

impl ExperimentResult {
    pub fn summary(&self, method: SdrKind) -> Option<&MethodSummary> {
        self.methods.iter().find(|m| m.method == method)
    }

    pub fn failed_reps(&self) -> usize {
        self.reps
            .iter()
            .filter(|r| {
                r.outcomes
                    .iter()
                    .any(|o| matches!(o.status, MethodStatus::Failed(_)))
            })
            .count()
    }
}

/// Per-method means and (n-1) standard deviations over successful reps.
/// Methods without any success are omitted; no success at all is an error.
pub fn aggregate(reps: Vec<RepResult>) -> Result<ExperimentResult> {
    let mut methods: Vec<SdrKind> = Vec::new();
    for o in reps.iter().flat_map(|r| &r.outcomes) {
        if !methods.contains(&o.method) {
            methods.push(o.method);
        }
    }
    let mut summaries = Vec::new();
    for method in methods {
        let mut truth = Vec::new();
        let mut response = Vec::new();
        let mut failures = 0;
        for o in reps
            .iter()
            .flat_map(|r| &r.outcomes)
            .filter(|o| o.method == method)
        {
            match o.status {
                MethodStatus::Ok {
                    cor_truth,
                    cor_response,
                } => {
                    truth.push(cor_truth);
                    response.push(cor_response);
                }
                MethodStatus::Failed(_) => failures += 1,
            }
        }
        if truth.is_empty() {
            continue;
        }
        summaries.push(MethodSummary {
            method,
            cor_truth: MetricSummary::of(&truth),
            cor_response: MetricSummary::of(&response),
            successes: truth.len(),
            failures,
            degenerate_sd: truth.len() < 2,
        });
    }
    if summaries.is_empty() {
        return Err(Error::EmptyResult);
    }
    Ok(ExperimentResult {
        methods: summaries,
        reps,
    })
}

/// Run every replication on the current rayon pool and aggregate.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    cfg.validate()?;
    let reps: Vec<RepResult> = (0..cfg.n_reps)
        .into_par_iter()
        .map(|r| run_replication(cfg, r))
        .collect();
    aggregate(reps)
}
