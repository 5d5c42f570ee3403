//! Ridge parameters `η = ζ λmax(G)` and their selection by generalized
//! cross-validation.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::kernels::GramMatrix;
use crate::linalg::SortedEigen;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TuningParams {
    pub zeta_x: f64,
    pub zeta_y: f64,
    pub eta_x: f64,
    pub eta_y: f64,
    pub gamma_x: f64,
    pub gamma_y: f64,
    pub n_slices: usize,
}

fn check_zeta(zeta: f64) -> Result<()> {
    if zeta > 0.0 && zeta <= 1.0 {
        Ok(())
    } else {
        Err(Error::Parameter(format!(
            "zeta must lie in (0, 1], got {zeta}"
        )))
    }
}

/// η = ζ · λmax(G).
pub fn ridge_param(g: &GramMatrix, zeta: f64) -> Result<f64> {
    check_zeta(zeta)?;
    Ok(zeta * SortedEigen::new(&g.values).max())
}

/// Scores below this denominator are skipped.
const TRACE_FLOOR: f64 = 1e-12;
/// Scores within this relative distance count as tied.
const TIE_RTOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct GcvSelection {
    pub zeta_x: f64,
    pub zeta_y: f64,
    /// `None` where the trace denominator degenerated.
    pub scores_x: Vec<Option<f64>>,
    pub scores_y: Vec<Option<f64>>,
}

/// GCV of smoothing `target` with `source`:
/// ‖target - S target‖²_F / tr(I - S)², S = G(G + ζλmax I)^{-1}.
/// Evaluated in the eigenbasis of `source`, so each grid point is O(n).
pub struct GcvCurve {
    eig: SortedEigen,
    /// Squared row norms of Uᵀ·target.
    row_mass: Vec<f64>,
}

impl GcvCurve {
    pub fn new(source: &DMatrix<f64>, target: &DMatrix<f64>) -> Self {
        let eig = SortedEigen::new(source);
        Self::with_eigen(eig, target)
    }

    pub fn with_eigen(eig: SortedEigen, target: &DMatrix<f64>) -> Self {
        let rotated = eig.vectors.transpose() * target;
        let row_mass = rotated.row_iter().map(|r| r.norm_squared()).collect();
        GcvCurve { eig, row_mass }
    }

    pub fn score(&self, zeta: f64) -> Option<f64> {
        let eta = zeta * self.eig.max();
        let mut num = 0.0;
        let mut trace = 0.0;
        for (l, mass) in self.eig.values.iter().zip(&self.row_mass) {
            let keep = eta / (l + eta);
            num += keep * keep * mass;
            trace += keep;
        }
        if trace.abs() < TRACE_FLOOR || !num.is_finite() {
            None
        } else {
            Some(num / (trace * trace))
        }
    }
}

/// Grid argmin; ties go to the larger ζ.
pub fn argmin_prefer_larger(grid: &[f64], scores: &[Option<f64>]) -> Option<f64> {
    let mut best: Option<(f64, f64)> = None;
    for (&zeta, score) in grid.iter().zip(scores) {
        let Some(s) = *score else { continue };
        best = match best {
            None => Some((zeta, s)),
            Some((bz, bs)) => {
                let tied = (s - bs).abs() <= TIE_RTOL * bs.abs().max(s.abs());
                if (tied && zeta > bz) || (!tied && s < bs) {
                    Some((zeta, s))
                } else {
                    Some((bz, bs))
                }
            }
        };
    }
    best.map(|b| b.0)
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::Parameter("GCV grid is empty".into()));
    }
    grid.iter().try_for_each(|&z| check_zeta(z))
}

/// Choose (ζ_X, ζ_Y) minimizing GCV_X and GCV_Y over `grid`.
pub fn gcv_select(gx: &GramMatrix, gy: &GramMatrix, grid: &[f64]) -> Result<GcvSelection> {
    if gx.n() != gy.n() {
        return Err(Error::Shape(format!(
            "Gram sizes differ: {} vs {}",
            gx.n(),
            gy.n()
        )));
    }
    check_grid(grid)?;
    let cx = GcvCurve::new(&gx.values, &gy.values);
    let cy = GcvCurve::new(&gy.values, &gx.values);
    select_from_curves(&cx, &cy, grid)
}

pub fn select_from_curves(cx: &GcvCurve, cy: &GcvCurve, grid: &[f64]) -> Result<GcvSelection> {
    check_grid(grid)?;
    let scores_x: Vec<Option<f64>> = grid.iter().map(|&z| cx.score(z)).collect();
    let scores_y: Vec<Option<f64>> = grid.iter().map(|&z| cy.score(z)).collect();
    for (name, scores) in [("x", &scores_x), ("y", &scores_y)] {
        let skipped: Vec<f64> = grid
            .iter()
            .zip(scores.iter())
            .filter(|(_, s)| s.is_none())
            .map(|(z, _)| *z)
            .collect();
        if !skipped.is_empty() {
            log::warn!("GCV_{name}: degenerate smoother at zeta {skipped:?}; skipped");
        }
    }
    let degenerate = || Error::Numerical("every GCV grid point had a degenerate smoother".into());
    let zeta_x = argmin_prefer_larger(grid, &scores_x).ok_or_else(degenerate)?;
    let zeta_y = argmin_prefer_larger(grid, &scores_y).ok_or_else(degenerate)?;
    Ok(GcvSelection {
        zeta_x,
        zeta_y,
        scores_x,
        scores_y,
    })
}

/// `count` log-spaced points strictly inside (0.001, 1).
pub fn default_gcv_grid(count: usize) -> Vec<f64> {
    (1..=count)
        .map(|k| 10f64.powf(-3.0 + 3.0 * k as f64 / (count + 1) as f64))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gram(values: DMatrix<f64>) -> GramMatrix {
        GramMatrix::from_matrix(values, "test").unwrap()
    }

    #[test]
    fn ridge_examples() {
        let eye = gram(DMatrix::identity(5, 5));
        assert!((ridge_param(&eye, 0.2).unwrap() - 0.2).abs() < 1e-15);
        let diag = gram(DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 1.0]));
        assert!((ridge_param(&diag, 0.5).unwrap() - 1.0).abs() < 1e-15);
        let m = DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]);
        let a = ridge_param(&gram(m.clone()), 0.3).unwrap();
        let b = ridge_param(&gram(m * 3.0), 0.3).unwrap();
        assert!((b - 3.0 * a).abs() < 1e-12);
        assert!(ridge_param(&eye, 0.0).is_err());
        assert!(ridge_param(&eye, 1.5).is_err());
    }

    #[test]
    fn identity_grams_tie_to_largest_zeta() {
        let eye = gram(DMatrix::identity(6, 6));
        let grid = default_gcv_grid(30);
        let sel = gcv_select(&eye, &eye, &grid).unwrap();
        for s in sel.scores_x.iter().flatten() {
            assert!((s - 1.0 / 6.0).abs() < 1e-12);
        }
        assert_eq!(sel.zeta_x, *grid.last().unwrap());
        assert_eq!(sel.zeta_y, *grid.last().unwrap());
    }

    #[test]
    fn default_grid_is_interior_and_log_spaced() {
        let g = default_gcv_grid(30);
        assert_eq!(g.len(), 30);
        assert!(g.iter().all(|&z| z > 0.001 && z < 1.0));
        let ratios: Vec<f64> = g.windows(2).map(|w| w[1] / w[0]).collect();
        assert!(ratios.iter().all(|r| (r - ratios[0]).abs() < 1e-12));
    }

    #[test]
    fn grid_validation() {
        let eye = gram(DMatrix::identity(3, 3));
        assert!(gcv_select(&eye, &eye, &[]).is_err());
        assert!(gcv_select(&eye, &eye, &[0.5, 1.2]).is_err());
        let other = gram(DMatrix::identity(4, 4));
        assert!(matches!(
            gcv_select(&eye, &other, &[0.5]),
            Err(Error::Shape(_))
        ));
    }
}
