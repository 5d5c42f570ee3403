//! Shared inputs for the criterion benchmarks in `benches/`.

use nalgebra::DMatrix;
use schoensdr::sim::{gen_covariates, gen_response, rep_rng, CovariateSpec, SettingSpec};
use schoensdr::{CovariateLaw, Setting};

/// Setting 1 training data with `V1` covariates in ten dimensions.
pub fn setting_one(n: usize, seed: u64) -> (DMatrix<f64>, Vec<f64>) {
    let mut rng = rep_rng(seed, 0, 0);
    let x = gen_covariates(&CovariateSpec::new(CovariateLaw::V1, 10), n, &mut rng);
    let (y, _) = gen_response(&SettingSpec::new(Setting::S1), &x, &mut rng).expect("p = 10");
    (x, y)
}
