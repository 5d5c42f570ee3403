//! TOML experiment files for `simulate`.
//!
//! ```toml
//! [experiment]
//! setting = "S1"
//! covariates = "V3"
//! reps = 100
//! seed = 7
//!
//! [tuning]
//! mode = "gcv"
//! grid_points = 30
//! ```

use serde::{Deserialize, Serialize};

use schoensdr::sdr::{default_gcv_grid, KSIR_VAR_THRESHOLD};
use schoensdr::sim::{cell_seed, CovariateSpec, SettingSpec};
use schoensdr::{CovariateLaw, ExperimentConfig, SdrKind, Setting, Tuning};

use crate::exit::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentSection {
    pub setting: String,
    pub covariates: String,
    pub p: usize,
    pub n_train: usize,
    pub n_test: usize,
    pub reps: usize,
    pub seed: u64,
    pub methods: Vec<String>,
    pub slices: usize,
    pub d: usize,
    pub var_threshold: f64,
    pub noise_sd: f64,
}

impl Default for ExperimentSection {
    fn default() -> Self {
        ExperimentSection {
            setting: "S1".into(),
            covariates: "V1".into(),
            p: 10,
            n_train: 200,
            n_test: 200,
            reps: 100,
            seed: 0,
            methods: SdrKind::ALL.iter().map(|k| k.to_string()).collect(),
            slices: 10,
            d: 1,
            var_threshold: KSIR_VAR_THRESHOLD,
            noise_sd: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TuningSection {
    /// `fixed` or `gcv`.
    pub mode: String,
    pub zeta_x: f64,
    pub zeta_y: f64,
    pub grid_points: usize,
    /// Explicit grid; overrides `grid_points` when non-empty.
    pub grid: Vec<f64>,
}

impl Default for TuningSection {
    fn default() -> Self {
        TuningSection {
            mode: "fixed".into(),
            zeta_x: 0.2,
            zeta_y: 0.2,
            grid_points: 30,
            grid: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentFile {
    pub experiment: ExperimentSection,
    pub tuning: TuningSection,
}

fn usage(e: schoensdr::Error) -> CliError {
    CliError::Usage(e.to_string())
}

impl ExperimentFile {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Usage(format!("experiment config: {e}")))
    }

    pub fn tuning(&self) -> Result<Tuning, CliError> {
        match self.tuning.mode.to_ascii_lowercase().as_str() {
            "fixed" => Ok(Tuning::FixedZeta {
                zeta_x: self.tuning.zeta_x,
                zeta_y: self.tuning.zeta_y,
            }),
            "gcv" => Ok(Tuning::Gcv {
                grid: if self.tuning.grid.is_empty() {
                    default_gcv_grid(self.tuning.grid_points)
                } else {
                    self.tuning.grid.clone()
                },
            }),
            other => Err(CliError::Usage(format!(
                "tuning mode must be `fixed` or `gcv`, got `{other}`"
            ))),
        }
    }

    /// Resolved, validated experiment. The RNG seed is derived from the
    /// base seed and the cell.
    pub fn to_config(&self) -> Result<ExperimentConfig, CliError> {
        let e = &self.experiment;
        let setting: Setting = e.setting.parse().map_err(usage)?;
        let law: CovariateLaw = e.covariates.parse().map_err(usage)?;
        let methods = e
            .methods
            .iter()
            .map(|m| m.parse::<SdrKind>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(usage)?;
        let cfg = ExperimentConfig {
            setting: SettingSpec {
                setting,
                noise_sd: e.noise_sd,
            },
            covariates: CovariateSpec::new(law, e.p),
            n_train: e.n_train,
            n_test: e.n_test,
            n_reps: e.reps,
            methods,
            tuning: self.tuning()?,
            seed: cell_seed(e.seed, setting, law),
            n_slices: e.slices,
            d: e.d,
            var_threshold: e.var_threshold,
        };
        cfg.validate().map_err(usage)?;
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_table_two_pipeline() {
        let f = ExperimentFile::parse("").unwrap();
        let cfg = f.to_config().unwrap();
        let mut want = ExperimentConfig::new(Setting::S1, CovariateLaw::V1);
        want.seed = cell_seed(0, Setting::S1, CovariateLaw::V1);
        assert_eq!(cfg, want);
    }

    #[test]
    fn gcv_section() {
        let f = ExperimentFile::parse("[experiment]\nsetting = \"S2\"\ncovariates = \"iii\"\n[tuning]\nmode = \"gcv\"\ngrid_points = 5\n").unwrap();
        let cfg = f.to_config().unwrap();
        assert_eq!(cfg.cell_label(), "S2-iii");
        match cfg.tuning {
            Tuning::Gcv { grid } => assert_eq!(grid.len(), 5),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn rejects_bad_input() {
        assert!(ExperimentFile::parse("[experiment]\nbogus = 1\n").is_err());
        let f = ExperimentFile::parse("[tuning]\nmode = \"gcv\"\ngrid = [0.0005]\n").unwrap();
        assert!(f.to_config().is_err());
        let f = ExperimentFile::parse("[experiment]\nmethods = [\"SAVE\"]\n").unwrap();
        assert!(f.to_config().is_err());
    }

    #[test]
    fn round_trips_through_toml() {
        let f = ExperimentFile::default();
        let text = toml::to_string(&f).unwrap();
        assert_eq!(ExperimentFile::parse(&text).unwrap(), f);
    }
}
