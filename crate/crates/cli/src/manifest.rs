use std::path::Path;
use std::time::Instant;

use serde::Serialize;

use crate::data::write_bytes;
use crate::exit::CliError;

pub const MANIFEST_FILE: &str = "manifest.toml";

/// Conventions whose formulas admit more than one reading.
pub const FORMULA_NOTES: [&str; 5] = [
    "bandwidth: sigma2 = mean squared distance over unordered pairs, gamma = 1/(2 sigma2), kernel exp(-gamma s)",
    "ridge: eta = zeta * lambda_max of the doubly centered Gram",
    "gcv: both criteria evaluated on the doubly centered Grams",
    "gsir: dual coefficients (K + eta I)^-1 v for eigenvectors v",
    "ksir: kernel principal components reaching the variance threshold, at most n/4",
];

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub args: Vec<String>,
    pub seed: Option<u64>,
    pub threads: usize,
    pub notes: Vec<String>,
    pub config: toml::Table,
    pub outputs: Vec<String>,
    pub failed: Vec<String>,
    pub results: toml::Table,
    pub wall_clock_seconds: f64,
    #[serde(skip)]
    started: Option<Instant>,
}

impl RunManifest {
    pub fn start(command: &str, seed: Option<u64>) -> Self {
        RunManifest {
            tool: "schoensdr".to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            args: std::env::args().skip(1).collect(),
            seed,
            threads: rayon::current_num_threads(),
            notes: FORMULA_NOTES.iter().map(|s| s.to_string()).collect(),
            config: toml::Table::new(),
            outputs: Vec::new(),
            failed: Vec::new(),
            results: toml::Table::new(),
            wall_clock_seconds: 0.0,
            started: Some(Instant::now()),
        }
    }

    pub fn set_config<T: Serialize>(&mut self, config: &T) -> Result<(), CliError> {
        self.config =
            toml::Table::try_from(config).map_err(|e| CliError::Io(std::io::Error::other(e)))?;
        Ok(())
    }

    pub fn record(&mut self, key: &str, value: impl Into<toml::Value>) {
        self.results.insert(key.to_string(), value.into());
    }

    pub fn output(&mut self, name: &str) {
        self.outputs.push(name.to_string());
    }

    pub fn write(mut self, dir: &Path) -> Result<(), CliError> {
        if let Some(t) = self.started {
            self.wall_clock_seconds = t.elapsed().as_secs_f64();
        }
        let text = toml::to_string(&self).map_err(|e| CliError::Io(std::io::Error::other(e)))?;
        write_bytes(&dir.join(MANIFEST_FILE), text.as_bytes())
    }
}
