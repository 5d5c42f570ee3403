use nalgebra::{DMatrix, DVector};

use super::{LinearReduction, Reduction, SdrKind, SdrModel};
use crate::error::{Error, Result};
use crate::linalg::{column_means, SortedEigen};

/// Relative eigenvalue floor for covariance and Gram inversions.
pub const EIG_FLOOR: f64 = 1e-10;

/// Split `0..n` into `h` slices of near-equal size by the rank of `y`.
pub fn slice_by_rank(y: &[f64], h: usize) -> Result<Vec<Vec<usize>>> {
    if h < 2 {
        return Err(Error::Parameter(format!("need at least 2 slices, got {h}")));
    }
    let n = y.len();
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::Slicing("response contains non-finite values".into()));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| y[a].total_cmp(&y[b]).then(a.cmp(&b)));
    let distinct = 1 + order.windows(2).filter(|w| y[w[0]] != y[w[1]]).count();
    if n == 0 || h > distinct {
        return Err(Error::Slicing(format!(
            "{h} slices requested but the response has {} distinct values",
            if n == 0 { 0 } else { distinct }
        )));
    }
    Ok((0..h)
        .map(|k| order[k * n / h..(k + 1) * n / h].to_vec())
        .collect())
}

/// Output of the slicing step in original coordinates.
#[derive(Debug, Clone)]
pub(crate) struct SirFit {
    pub mean: DVector<f64>,
    /// q×d, unit-norm columns.
    pub basis: DMatrix<f64>,
    pub eigenvalues: Vec<f64>,
}

/// Whiten `x`, slice on `y`, eigendecompose the weighted slice-mean outer
/// products and map the top directions back.
pub(crate) fn sir_core(x: &DMatrix<f64>, y: &[f64], h: usize, d: usize) -> Result<SirFit> {
    let (n, q) = x.shape();
    if y.len() != n {
        return Err(Error::Shape(format!(
            "x has {n} rows but y has {} entries",
            y.len()
        )));
    }
    if n <= q {
        return Err(Error::RankDeficient(format!(
            "need n > p, got n = {n}, p = {q}"
        )));
    }
    if d < 1 || d > q.min(h - 1) {
        return Err(Error::Parameter(format!(
            "d = {d} must lie in 1..={}",
            q.min(h.saturating_sub(1))
        )));
    }
    let slices = slice_by_rank(y, h)?;

    let mean = column_means(x);
    let mut centered = x.clone();
    for mut row in centered.row_iter_mut() {
        row -= mean.transpose();
    }
    let cov = centered.transpose() * &centered / n as f64;
    let eig = SortedEigen::new(&cov);
    let floor = EIG_FLOOR * eig.max();
    if eig.max() <= 0.0 || eig.min() < floor {
        return Err(Error::RankDeficient(format!(
            "covariance eigenvalue {:.3e} below floor {:.3e}",
            eig.min(),
            floor
        )));
    }
    let whiten = eig.map(|l| 1.0 / l.sqrt());
    let z = &centered * &whiten;

    let mut m = DMatrix::zeros(q, q);
    for slice in &slices {
        let nh = slice.len() as f64;
        let mut mh = DVector::zeros(q);
        for &i in slice {
            mh += z.row(i).transpose();
        }
        mh /= nh;
        m += &mh * mh.transpose() * (nh / n as f64);
    }
    let kernel_eig = SortedEigen::new(&m);
    let mut basis = &whiten * kernel_eig.vectors.columns(0, d);
    for mut col in basis.column_iter_mut() {
        let norm = col.norm();
        col /= norm;
    }
    Ok(SirFit {
        mean,
        basis,
        eigenvalues: kernel_eig.values.iter().take(d).copied().collect(),
    })
}

/// Sliced inverse regression with `h` equal-count slices.
pub fn fit_sir(x: &DMatrix<f64>, y: &[f64], h: usize, d: usize) -> Result<SdrModel> {
    let fit = sir_core(x, y, h, d)?;
    Ok(SdrModel {
        kind: SdrKind::Sir,
        reduction: Reduction::Linear(LinearReduction {
            mean: fit.mean,
            basis: fit.basis,
        }),
        eigenvalues: fit.eigenvalues,
    })
}
