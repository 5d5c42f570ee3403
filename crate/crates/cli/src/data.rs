//! CSV input and output.

use std::io::Write;
use std::path::Path;

use nalgebra::DMatrix;

use crate::exit::{read_input, CliError};

/// Numeric table with a header row; the last column is the response.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub columns: Vec<String>,
    pub x: DMatrix<f64>,
    pub y: Vec<f64>,
}

/// Header row plus numeric rows.
pub fn parse_table(text: &str) -> Result<(Vec<String>, DMatrix<f64>), CliError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let columns: Vec<String> = reader
        .headers()
        .map_err(|e| CliError::Data(format!("line 1: {e}")))?
        .iter()
        .map(str::to_string)
        .collect();
    let mut values = Vec::new();
    let mut rows = 0;
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            CliError::Data(format!("line {line}: {e}"))
        })?;
        let line = record.position().map_or(0, |p| p.line());
        for (j, field) in record.iter().enumerate() {
            let v: f64 = field.parse().map_err(|_| {
                CliError::Data(format!(
                    "line {line}: column `{}` is not a number: `{field}`",
                    columns[j]
                ))
            })?;
            if !v.is_finite() {
                return Err(CliError::Data(format!(
                    "line {line}: non-finite value in column `{}`",
                    columns[j]
                )));
            }
            values.push(v);
        }
        rows += 1;
    }
    if rows == 0 {
        return Err(CliError::Data("no data rows".into()));
    }
    let m = DMatrix::from_row_slice(rows, columns.len(), &values);
    Ok((columns, m))
}

pub fn parse_dataset(text: &str) -> Result<Dataset, CliError> {
    let (columns, all) = parse_table(text)?;
    let p = columns.len();
    if p < 2 {
        return Err(CliError::Data(
            "line 1: need at least one predictor column and a response column".into(),
        ));
    }
    Ok(Dataset {
        columns,
        x: all.columns(0, p - 1).into_owned(),
        y: all.column(p - 1).iter().copied().collect(),
    })
}

pub fn read_dataset(path: &Path) -> Result<Dataset, CliError> {
    parse_dataset(&read_input(path)?)
}

/// Predictor-only CSV: every column is a predictor.
pub fn read_predictors(path: &Path) -> Result<DMatrix<f64>, CliError> {
    Ok(parse_table(&read_input(path)?)?.1)
}

pub fn write_matrix_csv(path: &Path, header: &[String], m: &DMatrix<f64>) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).map_err(csv_io)?;
    for row in m.row_iter() {
        w.write_record(row.iter().map(|v| v.to_string()))
            .map_err(csv_io)?;
    }
    write_bytes(
        path,
        &w.into_inner().map_err(|e| CliError::Io(e.into_error()))?,
    )
}

pub fn write_dataset_csv(path: &Path, x: &DMatrix<f64>, y: &[f64]) -> Result<(), CliError> {
    let mut header: Vec<String> = (1..=x.ncols()).map(|j| format!("x{j}")).collect();
    header.push("y".into());
    let mut full = x.clone().insert_column(x.ncols(), 0.0);
    full.column_mut(x.ncols()).copy_from_slice(y);
    write_matrix_csv(path, &header, &full)
}

pub fn csv_io(e: csv::Error) -> CliError {
    CliError::Io(std::io::Error::other(e))
}

pub fn write_bytes(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let mut f = std::fs::File::create(path)?;
    f.write_all(bytes)?;
    Ok(())
}
