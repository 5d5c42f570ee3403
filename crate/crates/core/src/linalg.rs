//! Small dense helpers shared by the estimators.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

/// Eigendecomposition of a symmetric matrix, eigenpairs sorted by
/// descending eigenvalue. The input is symmetrized first.
#[derive(Debug, Clone)]
pub struct SortedEigen {
    pub values: DVector<f64>,
    /// Columns are eigenvectors, aligned with `values`.
    pub vectors: DMatrix<f64>,
}

impl SortedEigen {
    pub fn new(m: &DMatrix<f64>) -> Self {
        let sym = symmetrize(m);
        let eig = SymmetricEigen::new(sym);
        let n = eig.eigenvalues.len();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
        let values = DVector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));
        let mut vectors = DMatrix::zeros(m.nrows(), n);
        for (dst, &src) in order.iter().enumerate() {
            vectors.set_column(dst, &eig.eigenvectors.column(src));
        }
        SortedEigen { values, vectors }
    }

    pub fn max(&self) -> f64 {
        self.values.get(0).copied().unwrap_or(0.0)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Rebuild `U diag(f(λ)) Uᵀ`.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> DMatrix<f64> {
        let scaled = DMatrix::from_fn(self.vectors.nrows(), self.vectors.ncols(), |i, j| {
            self.vectors[(i, j)] * f(self.values[j])
        });
        &scaled * self.vectors.transpose()
    }
}

pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Ratio of the smallest to the largest eigenvalue (the PSD screen statistic).
pub fn min_eig_ratio(m: &DMatrix<f64>) -> f64 {
    let eig = SortedEigen::new(m);
    let max = eig.max();
    if max <= 0.0 {
        // Nothing positive: report the raw minimum so callers see a failure.
        return if eig.min() < 0.0 { -1.0 } else { 0.0 };
    }
    eig.min() / max
}

pub fn column_means(x: &DMatrix<f64>) -> DVector<f64> {
    let n = x.nrows() as f64;
    DVector::from_iterator(x.ncols(), x.column_iter().map(|c| c.sum() / n))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sorted_descending_and_reconstructs() {
        let m = DMatrix::from_row_slice(3, 3, &[2.0, 1.0, 0.0, 1.0, 3.0, 0.5, 0.0, 0.5, 1.0]);
        let eig = SortedEigen::new(&m);
        assert!(eig.values[0] >= eig.values[1] && eig.values[1] >= eig.values[2]);
        let back = eig.map(|l| l);
        assert!((back - m).abs().max() < 1e-12);
    }

    #[test]
    fn ratio_detects_indefinite() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!((min_eig_ratio(&m) + 1.0 / 3.0).abs() < 1e-12);
    }
}
