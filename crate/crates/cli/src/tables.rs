//! Six-cell reproduction runs and their CSV and markdown renderings.

use std::fmt::Write as _;

use schoensdr::sim::{cell_seed, run_experiment, MethodStatus};
use schoensdr::{CovariateLaw, ExperimentConfig, ExperimentResult, SdrKind, Setting, Tuning};

use crate::data::csv_io;
use crate::exit::CliError;

pub struct CellRun {
    pub config: ExperimentConfig,
    pub result: Result<ExperimentResult, schoensdr::Error>,
}

impl CellRun {
    pub fn label(&self) -> String {
        self.config.cell_label()
    }

    /// Failed replications or methods with no successful replication.
    pub fn is_partial(&self) -> bool {
        match &self.result {
            Err(_) => true,
            Ok(r) => {
                r.failed_reps() > 0 || self.config.methods.iter().any(|m| r.summary(*m).is_none())
            }
        }
    }
}

pub fn table_tuning(table: u8) -> Result<Tuning, CliError> {
    match table {
        2 => Ok(Tuning::fixed(0.2)),
        3 => Ok(Tuning::gcv_default()),
        other => Err(CliError::Usage(format!(
            "table must be 2 or 3, got {other}"
        ))),
    }
}

/// Configs for the six (setting, covariate) cells in table order.
pub fn table_configs(table: u8, reps: usize, seed: u64) -> Result<Vec<ExperimentConfig>, CliError> {
    let tuning = table_tuning(table)?;
    let mut out = Vec::new();
    for setting in Setting::ALL {
        for law in CovariateLaw::ALL {
            let mut cfg = ExperimentConfig::new(setting, law);
            cfg.n_reps = reps;
            cfg.tuning = tuning.clone();
            cfg.seed = cell_seed(seed, setting, law);
            cfg.validate().map_err(|e| CliError::Usage(e.to_string()))?;
            out.push(cfg);
        }
    }
    Ok(out)
}

pub fn run_cells(configs: Vec<ExperimentConfig>) -> Vec<CellRun> {
    configs
        .into_iter()
        .map(|config| {
            log::info!("running cell {}", config.cell_label());
            let result = run_experiment(&config);
            CellRun { config, result }
        })
        .collect()
}

pub fn run_table(table: u8, reps: usize, seed: u64) -> Result<Vec<CellRun>, CliError> {
    Ok(run_cells(table_configs(table, reps, seed)?))
}

/// Lookup of one aggregated entry.
pub fn entry(cells: &[CellRun], label: &str, method: SdrKind) -> Option<(f64, f64, f64, f64)> {
    let cell = cells.iter().find(|c| c.label() == label)?;
    let s = cell.result.as_ref().ok()?.summary(method)?;
    Some((
        s.cor_truth.mean,
        s.cor_truth.sd,
        s.cor_response.mean,
        s.cor_response.sd,
    ))
}

pub const METRICS: [&str; 2] = ["cor_truth", "cor_response"];

/// Columns `method, cell, metric, mean, sd`.
pub fn summary_csv(cells: &[CellRun]) -> Result<String, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["method", "cell", "metric", "mean", "sd"])
        .map_err(csv_io)?;
    for cell in cells {
        let Ok(result) = &cell.result else { continue };
        for method in &cell.config.methods {
            let Some(s) = result.summary(*method) else {
                continue;
            };
            for (metric, m) in METRICS.iter().zip([s.cor_truth, s.cor_response]) {
                w.write_record([
                    method.to_string(),
                    cell.label(),
                    metric.to_string(),
                    format!("{:.6}", m.mean),
                    format!("{:.6}", m.sd),
                ])
                .map_err(csv_io)?;
            }
        }
    }
    String::from_utf8(w.into_inner().map_err(|e| CliError::Io(e.into_error()))?)
        .map_err(|e| CliError::Io(std::io::Error::other(e)))
}

/// Columns `rep, method, cor_truth, cor_response, status`.
pub fn raw_csv(result: &ExperimentResult) -> Result<String, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["rep", "method", "cor_truth", "cor_response", "status"])
        .map_err(csv_io)?;
    for rep in &result.reps {
        for o in &rep.outcomes {
            let row = match &o.status {
                MethodStatus::Ok {
                    cor_truth,
                    cor_response,
                } => [
                    rep.rep.to_string(),
                    o.method.to_string(),
                    cor_truth.to_string(),
                    cor_response.to_string(),
                    "ok".into(),
                ],
                MethodStatus::Failed(cause) => [
                    rep.rep.to_string(),
                    o.method.to_string(),
                    String::new(),
                    String::new(),
                    format!("failed: {cause}"),
                ],
            };
            w.write_record(row).map_err(csv_io)?;
        }
    }
    String::from_utf8(w.into_inner().map_err(|e| CliError::Io(e.into_error()))?)
        .map_err(|e| CliError::Io(std::io::Error::other(e)))
}

/// Markdown table with one mean row and one parenthesized sd row per cell.
pub fn markdown(table: u8, cells: &[CellRun]) -> String {
    let methods = SdrKind::ALL;
    let mut s = String::new();
    let caption = match table {
        2 => "zeta_X = zeta_Y = 0.2",
        _ => "zeta_X, zeta_Y chosen by GCV",
    };
    let reps = cells.first().map_or(0, |c| c.config.n_reps);
    let _ = writeln!(
        s,
        "Table {table}: |Spearman| correlations, {caption}, {reps} replications\n"
    );
    let names: Vec<String> = methods.iter().map(|m| m.to_string()).collect();
    let _ = writeln!(s, "| | | {} | {} |", names.join(" | "), names.join(" | "));
    let _ = writeln!(s, "|---|---|{}", "---|".repeat(2 * methods.len()));
    let _ = writeln!(
        s,
        "| | | Cor. with true predictor{} | Cor. with response{} |",
        " |".repeat(methods.len() - 1),
        " |".repeat(methods.len() - 1)
    );
    for cell in cells {
        let first = cell.config.covariates.law == CovariateLaw::V1;
        let lead = if first {
            format!("| Setting {} |", cell.config.setting.setting.number())
        } else {
            "| |".to_string()
        };
        let mut means = Vec::new();
        let mut sds = Vec::new();
        for metric in 0..2 {
            for m in methods {
                match entry(cells, &cell.label(), m) {
                    Some(e) => {
                        let (mean, sd) = if metric == 0 { (e.0, e.1) } else { (e.2, e.3) };
                        means.push(format!("{mean:.3}"));
                        sds.push(format!("({sd:.3})"));
                    }
                    None => {
                        means.push("n/a".into());
                        sds.push(String::new());
                    }
                }
            }
        }
        let _ = writeln!(
            s,
            "{lead} ({}) | {} |",
            cell.config.covariates.law,
            means.join(" | ")
        );
        let _ = writeln!(s, "| | | {} |", sds.join(" | "));
    }
    s
}
