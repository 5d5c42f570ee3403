//! Kernel estimators. All three work with the doubly centered Gram matrix
//! of the training inputs and store dual coefficients, so a new point is
//! mapped through `k(x, xᵢ)`, the training centering, and the coefficients.

use nalgebra::{DMatrix, DVector};

use super::sir::{sir_core, EIG_FLOOR};
use super::{DualReduction, Reduction, SdrKind, SdrModel};
use crate::error::{Error, Result};
use crate::kernels::{double_center, gram, RadialKernel};
use crate::linalg::SortedEigen;

/// Centered Gram of one training sample with its spectrum, reusable across
/// estimators and GCV.
#[derive(Debug, Clone)]
pub struct KernelPrep {
    pub data: DMatrix<f64>,
    pub kernel: RadialKernel,
    /// Column means of the uncentered Gram.
    pub col_means: DVector<f64>,
    pub grand_mean: f64,
    pub centered: DMatrix<f64>,
    /// Spectrum of `centered` with roundoff negatives clipped to zero.
    pub eig: SortedEigen,
}

impl KernelPrep {
    pub fn new(data: &DMatrix<f64>, kernel: &RadialKernel) -> Result<Self> {
        let g = gram(kernel, data)?.values;
        let n = g.nrows() as f64;
        let col_means = DVector::from_iterator(g.ncols(), g.column_iter().map(|c| c.sum() / n));
        let grand_mean = col_means.sum() / n;
        let centered = double_center(&g);
        let mut eig = SortedEigen::new(&centered);
        let max = eig.max();
        if eig.min() < -1e-8 * max.max(f64::MIN_POSITIVE) {
            return Err(Error::Numerical(format!(
                "centered Gram has eigenvalue {:.3e} against maximum {:.3e}",
                eig.min(),
                max
            )));
        }
        for v in eig.values.iter_mut() {
            *v = v.max(0.0);
        }
        Ok(KernelPrep {
            data: data.clone(),
            kernel: kernel.clone(),
            col_means,
            grand_mean,
            centered,
            eig,
        })
    }

    /// Convenience for a response vector.
    pub fn from_response(y: &[f64], kernel: &RadialKernel) -> Result<Self> {
        Self::new(&DMatrix::from_column_slice(y.len(), 1, y), kernel)
    }

    pub fn n(&self) -> usize {
        self.centered.nrows()
    }

    pub fn lambda_max(&self) -> f64 {
        self.eig.max()
    }

    fn floor(&self) -> f64 {
        EIG_FLOOR * self.eig.max()
    }

    /// `K (K + ηI)^{-1}`.
    pub fn smoother(&self, eta: f64) -> DMatrix<f64> {
        self.eig.map(|l| l / (l + eta))
    }

    fn dual(&self, coef: DMatrix<f64>, offset: DVector<f64>) -> DualReduction {
        DualReduction {
            train: self.data.clone(),
            kernel: self.kernel.clone(),
            col_means: self.col_means.clone(),
            grand_mean: self.grand_mean,
            coef,
            offset,
        }
    }
}

fn check_ridge(name: &str, eta: f64) -> Result<()> {
    if eta > 0.0 && eta.is_finite() {
        Ok(())
    } else {
        Err(Error::Parameter(format!(
            "{name} must be positive, got {eta}"
        )))
    }
}

fn check_pair(px: &KernelPrep, py: &KernelPrep, d: usize) -> Result<()> {
    let n = px.n();
    if py.n() != n {
        return Err(Error::Shape(format!("x has {n} rows but y has {}", py.n())));
    }
    if d < 1 || d + 1 > n {
        return Err(Error::Parameter(format!(
            "d = {d} must lie in 1..={}",
            n.saturating_sub(1)
        )));
    }
    Ok(())
}

/// Default eigenvalue mass retained by KSIR.
pub const KSIR_VAR_THRESHOLD: f64 = 0.8;

/// Number of kernel principal components kept by KSIR: the fewest whose
/// eigenvalue mass reaches `var_threshold`, capped at n/4.
pub fn ksir_components(prep: &KernelPrep, var_threshold: f64) -> usize {
    let floor = prep.floor();
    let positive: Vec<f64> = prep
        .eig
        .values
        .iter()
        .copied()
        .take_while(|&l| l > floor)
        .collect();
    let total: f64 = positive.iter().sum();
    let mut acc = 0.0;
    let mut r = positive.len();
    for (i, l) in positive.iter().enumerate() {
        acc += l;
        if acc >= var_threshold * total {
            r = i + 1;
            break;
        }
    }
    r.min(prep.n() / 4).max(1).min(positive.len())
}

/// Kernel SIR: SIR on kernel principal component scores.
pub fn fit_ksir(
    x: &DMatrix<f64>,
    y: &[f64],
    kernel: &RadialKernel,
    h: usize,
    d: usize,
    var_threshold: f64,
) -> Result<SdrModel> {
    let prep = KernelPrep::new(x, kernel)?;
    fit_ksir_prepared(&prep, y, h, d, var_threshold)
}

pub fn fit_ksir_prepared(
    prep: &KernelPrep,
    y: &[f64],
    h: usize,
    d: usize,
    var_threshold: f64,
) -> Result<SdrModel> {
    if !(var_threshold > 0.0 && var_threshold <= 1.0) {
        return Err(Error::Parameter(format!(
            "var_threshold must lie in (0, 1], got {var_threshold}"
        )));
    }
    if y.len() != prep.n() {
        return Err(Error::Shape(format!(
            "x has {} rows but y has {}",
            prep.n(),
            y.len()
        )));
    }
    if d < 1 || d + 1 > h {
        return Err(Error::Parameter(format!(
            "d = {d} must lie in 1..={}",
            h.saturating_sub(1)
        )));
    }
    super::sir::slice_by_rank(y, h)?;
    let r = ksir_components(prep, var_threshold);
    if r < d {
        return Err(Error::RankDeficient(format!(
            "only {r} kernel components available for d = {d}"
        )));
    }
    // Score of x on component k: k̃(x)ᵀ u_k / sqrt(λ_k).
    let n = prep.n();
    let projection = DMatrix::from_fn(n, r, |i, k| {
        prep.eig.vectors[(i, k)] / prep.eig.values[k].sqrt()
    });
    let scores = &prep.centered * &projection;
    let fit = sir_core(&scores, y, h, d)?;
    let coef = &projection * &fit.basis;
    let offset = fit.basis.transpose() * &fit.mean;
    Ok(SdrModel {
        kind: SdrKind::Ksir,
        reduction: Reduction::Dual(prep.dual(coef, offset)),
        eigenvalues: fit.eigenvalues,
    })
}

/// Regularized kernel CCA.
pub fn fit_kcca(
    x: &DMatrix<f64>,
    y: &[f64],
    kx: &RadialKernel,
    ky: &RadialKernel,
    eta_x: f64,
    eta_y: f64,
    d: usize,
) -> Result<SdrModel> {
    check_ridge("eta_x", eta_x)?;
    check_ridge("eta_y", eta_y)?;
    let px = KernelPrep::new(x, kx)?;
    let py = KernelPrep::from_response(y, ky)?;
    fit_kcca_prepared(&px, &py, eta_x, eta_y, d)
}

/// Top eigenvectors `v` of `R_X^{1/2} R_Y R_X^{1/2}` with
/// `R = K (K + ηI)^{-1}`; training predictors are `R_X^{1/2} v = K_X α`.
pub fn fit_kcca_prepared(
    px: &KernelPrep,
    py: &KernelPrep,
    eta_x: f64,
    eta_y: f64,
    d: usize,
) -> Result<SdrModel> {
    check_ridge("eta_x", eta_x)?;
    check_ridge("eta_y", eta_y)?;
    check_pair(px, py, d)?;
    let rx_half = px.eig.map(|l| (l / (l + eta_x)).sqrt());
    let ry = py.smoother(eta_y);
    let op = &rx_half * ry * &rx_half;
    let eig = SortedEigen::new(&op);
    let floor = px.floor();
    let to_dual = px.eig.map(|l| {
        if l > floor {
            1.0 / (l * (l + eta_x)).sqrt()
        } else {
            0.0
        }
    });
    let coef = to_dual * eig.vectors.columns(0, d);
    Ok(SdrModel {
        kind: SdrKind::Kcca,
        reduction: Reduction::Dual(px.dual(coef, DVector::zeros(d))),
        eigenvalues: eig.values.iter().take(d).copied().collect(),
    })
}

/// Generalized SIR.
pub fn fit_gsir(
    x: &DMatrix<f64>,
    y: &[f64],
    kx: &RadialKernel,
    ky: &RadialKernel,
    eta_x: f64,
    eta_y: f64,
    d: usize,
) -> Result<SdrModel> {
    check_ridge("eta_x", eta_x)?;
    check_ridge("eta_y", eta_y)?;
    let px = KernelPrep::new(x, kx)?;
    let py = KernelPrep::from_response(y, ky)?;
    fit_gsir_prepared(&px, &py, eta_x, eta_y, d)
}

/// Top eigenvectors `v` of `(K_X + η_X I)^{-1} K_X S_Y K_X (K_X + η_X I)^{-1}`
/// with `S_Y = K_Y (K_Y + η_Y I)^{-1}`. Dual coefficients are
/// `α = (K_X + η_X I)^{-1} v`, so training predictors are `K_X α = R_X v`.
pub fn fit_gsir_prepared(
    px: &KernelPrep,
    py: &KernelPrep,
    eta_x: f64,
    eta_y: f64,
    d: usize,
) -> Result<SdrModel> {
    check_ridge("eta_x", eta_x)?;
    check_ridge("eta_y", eta_y)?;
    check_pair(px, py, d)?;
    // (K + ηI)^{-1} K = K (K + ηI)^{-1}: both sides share one eigenbasis.
    let rx = px.smoother(eta_x);
    let sy = py.smoother(eta_y);
    let m = &rx * sy * &rx;
    let eig = SortedEigen::new(&m);
    let coef = px.eig.map(|l| 1.0 / (l + eta_x)) * eig.vectors.columns(0, d);
    Ok(SdrModel {
        kind: SdrKind::Gsir,
        reduction: Reduction::Dual(px.dual(coef, DVector::zeros(d))),
        eigenvalues: eig.values.iter().take(d).copied().collect(),
    })
}
