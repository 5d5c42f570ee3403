use thiserror::Error;

/// Errors produced by the numerical routines, kernels and estimators.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("shape error: {0}")]
    Shape(String),
    #[error("parameter error: {0}")]
    Parameter(String),
    #[error("non-finite evaluation at x = {point}")]
    Evaluation { point: f64 },
    #[error("kernel evaluation failed at z = {z:?}, z~ = {zt:?}")]
    KernelEvaluation { z: Vec<f64>, zt: Vec<f64> },
    #[error("degenerate data: {0}")]
    DegenerateData(String),
    #[error("rank deficiency: {0}")]
    RankDeficient(String),
    #[error("slicing error: {0}")]
    Slicing(String),
    #[error("numerical error: {0}")]
    Numerical(String),
    #[error("no successful replications to aggregate")]
    EmptyResult,
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;
