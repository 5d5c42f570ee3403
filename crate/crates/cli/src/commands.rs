use std::path::Path;

use nalgebra::DMatrix;

use schoensdr::schoenberg::{certify_membership, CertifyConfig};
use schoensdr::sim::{fit_method, run_experiment};
use schoensdr::{SdrKind, SdrModel, Tuning, Verdict};

use crate::args::{FitArgs, KernelCheckArgs, PredictArgs, ReproduceArgs, SimulateArgs, TuningMode};
use crate::config::ExperimentFile;
use crate::data::{read_dataset, read_predictors, write_bytes, write_matrix_csv};
use crate::exit::{read_input, CliError, NOT_MEMBER, PARTIAL, SUCCESS};
use crate::kernel_spec::candidate;
use crate::manifest::RunManifest;
use crate::tables::{markdown, raw_csv, run_table, summary_csv, CellRun};

fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir)?;
    Ok(())
}

fn emit(manifest: &mut RunManifest, dir: &Path, name: &str, bytes: &[u8]) -> Result<(), CliError> {
    write_bytes(&dir.join(name), bytes)?;
    manifest.output(name);
    Ok(())
}

fn table_of(pairs: &[(&str, toml::Value)]) -> toml::Table {
    pairs
        .iter()
        .map(|(k, v)| (k.to_string(), v.clone()))
        .collect()
}

fn int(v: usize) -> toml::Value {
    toml::Value::Integer(v as i64)
}

fn tuning_value(t: &Tuning) -> toml::Value {
    match t {
        Tuning::FixedZeta { zeta_x, zeta_y } => toml::Value::Table(table_of(&[
            ("mode", "fixed".into()),
            ("zeta_x", (*zeta_x).into()),
            ("zeta_y", (*zeta_y).into()),
        ])),
        Tuning::Gcv { grid } => toml::Value::Table(table_of(&[
            ("mode", "gcv".into()),
            (
                "grid",
                toml::Value::Array(grid.iter().map(|&g| g.into()).collect()),
            ),
        ])),
    }
}

/// Records cells that failed outright or had failing replications.
fn note_failures(manifest: &mut RunManifest, cells: &[CellRun]) {
    for cell in cells {
        match &cell.result {
            Err(e) => manifest.failed.push(format!("{}: {e}", cell.label())),
            Ok(r) if cell.is_partial() => {
                let missing: Vec<String> = cell
                    .config
                    .methods
                    .iter()
                    .filter(|m| r.summary(**m).is_none())
                    .map(|m| m.to_string())
                    .collect();
                let mut line = format!("{}: {} failed replications", cell.label(), r.failed_reps());
                if !missing.is_empty() {
                    line.push_str(&format!(", no successful fit for {}", missing.join(", ")));
                }
                manifest.failed.push(line);
            }
            Ok(_) => {}
        }
    }
}

pub fn reproduce(a: &ReproduceArgs) -> Result<i32, CliError> {
    let dir = &a.common.out;
    ensure_dir(dir)?;
    let mut manifest = RunManifest::start("reproduce", Some(a.common.seed));
    let cells = run_table(a.table, a.reps, a.common.seed)?;
    let first = &cells[0].config;
    manifest.config = table_of(&[
        ("table", int(a.table as usize)),
        ("reps", int(a.reps)),
        ("n_train", int(first.n_train)),
        ("n_test", int(first.n_test)),
        ("p", int(first.covariates.p)),
        ("noise_sd", first.setting.noise_sd.into()),
        ("slices", int(first.n_slices)),
        ("d", int(first.d)),
        ("var_threshold", first.var_threshold.into()),
        ("tuning", tuning_value(&first.tuning)),
        (
            "cell_seeds",
            toml::Value::Table(
                cells
                    .iter()
                    .map(|c| (c.label(), toml::Value::Integer(c.config.seed as i64)))
                    .collect(),
            ),
        ),
    ]);

    let stem = format!("table{}", a.table);
    emit(
        &mut manifest,
        dir,
        &format!("{stem}.csv"),
        summary_csv(&cells)?.as_bytes(),
    )?;
    emit(
        &mut manifest,
        dir,
        &format!("{stem}.md"),
        markdown(a.table, &cells).as_bytes(),
    )?;
    for cell in &cells {
        if let Ok(r) = &cell.result {
            emit(
                &mut manifest,
                dir,
                &format!("{stem}_{}_reps.csv", cell.label()),
                raw_csv(r)?.as_bytes(),
            )?;
        }
    }
    note_failures(&mut manifest, &cells);
    let code = if manifest.failed.is_empty() {
        SUCCESS
    } else {
        PARTIAL
    };
    for line in &manifest.failed {
        log::warn!("{line}");
    }
    print!("{}", markdown(a.table, &cells));
    manifest.write(dir)?;
    Ok(code)
}

pub fn kernel_check(a: &KernelCheckArgs) -> Result<i32, CliError> {
    let started = RunManifest::start("kernel-check", Some(a.common.seed));
    let k = candidate(&a.spec)?;
    let mut cfg = CertifyConfig {
        seed: a.common.seed,
        ..CertifyConfig::default()
    };
    if let Some(dims) = &a.dims {
        if dims.is_empty() || dims.contains(&0) {
            return Err(CliError::Usage(
                "--dims must list positive dimensions".into(),
            ));
        }
        cfg.dims = dims.clone();
    }
    if let Some(n) = a.n {
        cfg.n = n;
    }
    if let Some(draws) = a.draws {
        cfg.draws = draws;
    }
    if let Some(order) = a.cm_order {
        cfg.cm_order = order;
    }
    if cfg.n < 2 || cfg.draws == 0 {
        return Err(CliError::Usage(
            "--n must be at least 2 and --draws at least 1".into(),
        ));
    }
    let report = certify_membership(&k, &cfg);
    print!("{}", report.to_text());

    let dir = &a.common.out;
    ensure_dir(dir)?;
    let mut manifest = started;
    manifest.config = table_of(&[
        ("spec", a.spec.clone().into()),
        (
            "dims",
            toml::Value::Array(cfg.dims.iter().map(|&p| int(p)).collect()),
        ),
        ("n", int(cfg.n)),
        ("draws", int(cfg.draws)),
        ("pairs_per_dim", int(cfg.pairs_per_dim)),
        ("cm_order", int(cfg.cm_order)),
    ]);
    emit(
        &mut manifest,
        dir,
        "kernel_check.txt",
        report.to_key_values().as_bytes(),
    )?;
    manifest.record("verdict", report.verdict.to_string());
    manifest.write(dir)?;
    Ok(if report.verdict == Verdict::Member {
        SUCCESS
    } else {
        NOT_MEMBER
    })
}

fn predictor_header(d: usize) -> Vec<String> {
    (1..=d).map(|j| format!("pred{j}")).collect()
}

pub fn fit(a: &FitArgs) -> Result<i32, CliError> {
    let mut manifest = RunManifest::start("fit", None);
    let data = read_dataset(&a.data)?;
    let method: SdrKind = a.method.into();
    let tuning = match a.tuning {
        TuningMode::Fixed => Tuning::fixed(a.zeta),
        TuningMode::Gcv => Tuning::gcv_default(),
    };
    let outcome = fit_method(
        method,
        &data.x,
        &data.y,
        &tuning,
        a.slices,
        a.d,
        a.var_threshold,
    )?;
    let predictors = outcome.model.predict(&data.x)?;

    let dir = &a.common.out;
    ensure_dir(dir)?;
    manifest.config = table_of(&[
        ("data", a.data.display().to_string().into()),
        (
            "columns",
            toml::Value::Array(data.columns.iter().map(|c| c.clone().into()).collect()),
        ),
        ("method", method.to_string().into()),
        ("tuning", tuning_value(&tuning)),
        ("slices", int(a.slices)),
        ("d", int(a.d)),
        ("var_threshold", a.var_threshold.into()),
    ]);
    emit(
        &mut manifest,
        dir,
        "model.txt",
        outcome.model.to_text().as_bytes(),
    )?;
    write_matrix_csv(
        &dir.join("predictors.csv"),
        &predictor_header(outcome.model.d()),
        &predictors,
    )?;
    manifest.output("predictors.csv");
    manifest.record(
        "eigenvalues",
        toml::Value::Array(
            outcome
                .model
                .eigenvalues
                .iter()
                .map(|&v| v.into())
                .collect(),
        ),
    );
    if let Some((zx, zy)) = outcome.zeta {
        manifest.record("zeta_x", zx);
        manifest.record("zeta_y", zy);
    }
    if let Some(b) = outcome.bandwidth_x {
        manifest.record("gamma_x", b.gamma);
    }
    if let Some(b) = outcome.bandwidth_y {
        manifest.record("gamma_y", b.gamma);
    }
    manifest.write(dir)?;
    println!(
        "{method}: wrote model.txt and predictors.csv to {}",
        dir.display()
    );
    Ok(SUCCESS)
}

pub fn predict(a: &PredictArgs) -> Result<i32, CliError> {
    let mut manifest = RunManifest::start("predict", None);
    let model = SdrModel::from_text(&read_input(&a.model)?)?;
    let x: DMatrix<f64> = read_predictors(&a.data)?;
    let pred = model
        .predict(&x)
        .map_err(|e| CliError::Data(e.to_string()))?;
    let dir = &a.common.out;
    ensure_dir(dir)?;
    manifest.config = table_of(&[
        ("model", a.model.display().to_string().into()),
        ("data", a.data.display().to_string().into()),
        ("method", model.kind.to_string().into()),
    ]);
    write_matrix_csv(
        &dir.join("predictions.csv"),
        &predictor_header(model.d()),
        &pred,
    )?;
    manifest.output("predictions.csv");
    manifest.write(dir)?;
    Ok(SUCCESS)
}

pub fn simulate(a: &SimulateArgs) -> Result<i32, CliError> {
    let started = RunManifest::start("simulate", a.seed);
    let mut file = match &a.config {
        Some(path) => ExperimentFile::parse(&read_input(path)?)?,
        None => ExperimentFile::default(),
    };
    if let Some(s) = &a.setting {
        file.experiment.setting = s.clone();
    }
    if let Some(c) = &a.covariates {
        file.experiment.covariates = c.clone();
    }
    if let Some(t) = a.tuning {
        file.tuning.mode = match t {
            TuningMode::Fixed => "fixed",
            TuningMode::Gcv => "gcv",
        }
        .into();
    }
    if let Some(r) = a.reps {
        file.experiment.reps = r;
    }
    if let Some(s) = a.seed {
        file.experiment.seed = s;
    }
    let config = file.to_config()?;

    let dir = &a.out;
    ensure_dir(dir)?;
    let mut manifest = started;
    manifest.seed = Some(file.experiment.seed);
    manifest.set_config(&file)?;
    manifest.record("cell_seed", config.seed as i64);
    let cell = CellRun {
        result: run_experiment(&config),
        config,
    };
    let cells = std::slice::from_ref(&cell);
    emit(
        &mut manifest,
        dir,
        "simulate.csv",
        summary_csv(cells)?.as_bytes(),
    )?;
    if let Ok(r) = &cell.result {
        emit(
            &mut manifest,
            dir,
            "simulate_reps.csv",
            raw_csv(r)?.as_bytes(),
        )?;
        let zetas: Vec<toml::Value> = r
            .reps
            .iter()
            .filter_map(|rep| rep.zeta)
            .map(|(x, y)| toml::Value::Array(vec![x.into(), y.into()]))
            .collect();
        if !zetas.is_empty() {
            manifest.record("zeta_per_rep", toml::Value::Array(zetas));
        }
    }
    note_failures(&mut manifest, cells);
    let code = if manifest.failed.is_empty() {
        SUCCESS
    } else {
        PARTIAL
    };
    print!("{}", summary_csv(cells)?);
    manifest.write(dir)?;
    Ok(code)
}
