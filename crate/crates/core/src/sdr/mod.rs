//! Sufficient dimension reduction estimators.
//!
//! [`fit_sir`] estimates a linear basis. [`fit_ksir`], [`fit_kcca`] and
//! [`fit_gsir`] estimate nonlinear predictors `f(x) = Σ αᵢ k̃(x, xᵢ)` where
//! `k̃` is the kernel centered against the training sample. Every fitted
//! model is immutable and maps new points with [`SdrModel::predict`].

mod kernel;
mod sir;
mod tuning;

use std::fmt;
use std::fmt::Write as _;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};

pub use kernel::{
    fit_gsir, fit_gsir_prepared, fit_kcca, fit_kcca_prepared, fit_ksir, fit_ksir_prepared,
    ksir_components, KernelPrep, KSIR_VAR_THRESHOLD,
};
pub use sir::{fit_sir, slice_by_rank, EIG_FLOOR};
pub use tuning::{
    argmin_prefer_larger, default_gcv_grid, gcv_select, ridge_param, select_from_curves, GcvCurve,
    GcvSelection, TuningParams,
};

use crate::error::{Error, Result};
use crate::kernels::{cross_gram, RadialKernel};

pub const MODEL_FORMAT_VERSION: u32 = 1;
const MODEL_MAGIC: &str = "schoensdr-model";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SdrKind {
    Sir,
    Ksir,
    Kcca,
    Gsir,
}

impl SdrKind {
    pub const ALL: [SdrKind; 4] = [SdrKind::Sir, SdrKind::Kcca, SdrKind::Ksir, SdrKind::Gsir];

    pub fn as_str(self) -> &'static str {
        match self {
            SdrKind::Sir => "SIR",
            SdrKind::Ksir => "KSIR",
            SdrKind::Kcca => "KCCA",
            SdrKind::Gsir => "GSIR",
        }
    }
}

impl fmt::Display for SdrKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SdrKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "sir" => Ok(SdrKind::Sir),
            "ksir" => Ok(SdrKind::Ksir),
            "kcca" => Ok(SdrKind::Kcca),
            "gsir" => Ok(SdrKind::Gsir),
            other => Err(Error::Parameter(format!("unknown method `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearReduction {
    pub mean: DVector<f64>,
    /// p×d basis with unit-norm columns.
    pub basis: DMatrix<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DualReduction {
    pub train: DMatrix<f64>,
    pub kernel: RadialKernel,
    pub col_means: DVector<f64>,
    pub grand_mean: f64,
    /// n×d dual coefficients.
    pub coef: DMatrix<f64>,
    pub offset: DVector<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Reduction {
    Linear(LinearReduction),
    Dual(DualReduction),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SdrModel {
    pub kind: SdrKind,
    pub reduction: Reduction,
    /// Leading eigenvalues, descending.
    pub eigenvalues: Vec<f64>,
}

impl SdrModel {
    pub fn d(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn input_dim(&self) -> usize {
        match &self.reduction {
            Reduction::Linear(l) => l.mean.len(),
            Reduction::Dual(d) => d.train.ncols(),
        }
    }

    pub fn linear(&self) -> Option<&LinearReduction> {
        match &self.reduction {
            Reduction::Linear(l) => Some(l),
            Reduction::Dual(_) => None,
        }
    }

    pub fn dual(&self) -> Option<&DualReduction> {
        match &self.reduction {
            Reduction::Dual(d) => Some(d),
            Reduction::Linear(_) => None,
        }
    }

    /// m×d matrix of sufficient predictors for the rows of `x_new`.
    pub fn predict(&self, x_new: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        if x_new.ncols() != self.input_dim() {
            return Err(Error::Shape(format!(
                "model expects {} columns, got {}",
                self.input_dim(),
                x_new.ncols()
            )));
        }
        match &self.reduction {
            Reduction::Linear(l) => {
                let mut centered = x_new.clone();
                for mut row in centered.row_iter_mut() {
                    row -= l.mean.transpose();
                }
                Ok(centered * &l.basis)
            }
            Reduction::Dual(dual) => {
                let mut c = cross_gram(&dual.kernel, x_new, &dual.train)?;
                let n = dual.train.nrows() as f64;
                for mut row in c.row_iter_mut() {
                    let row_mean = row.sum() / n;
                    for (j, v) in row.iter_mut().enumerate() {
                        *v += dual.grand_mean - dual.col_means[j] - row_mean;
                    }
                }
                let mut out = c * &dual.coef;
                for mut row in out.row_iter_mut() {
                    row -= dual.offset.transpose();
                }
                Ok(out)
            }
        }
    }

    /// Versioned plain-text serialization.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{MODEL_MAGIC} {MODEL_FORMAT_VERSION}");
        let _ = writeln!(s, "kind {}", self.kind);
        write_vector(&mut s, "eigenvalues", self.eigenvalues.iter());
        match &self.reduction {
            Reduction::Linear(l) => {
                let _ = writeln!(s, "form linear");
                write_vector(&mut s, "mean", l.mean.iter());
                write_matrix(&mut s, "basis", &l.basis);
            }
            Reduction::Dual(d) => {
                let _ = writeln!(s, "form dual");
                let _ = writeln!(s, "kernel {}", d.kernel);
                let _ = writeln!(s, "grand_mean {}", d.grand_mean);
                write_vector(&mut s, "col_means", d.col_means.iter());
                write_vector(&mut s, "offset", d.offset.iter());
                write_matrix(&mut s, "train", &d.train);
                write_matrix(&mut s, "coef", &d.coef);
            }
        }
        let _ = writeln!(s, "end");
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut r = Reader::new(text);
        let header = r.next_line()?;
        let version = header
            .strip_prefix(MODEL_MAGIC)
            .map(str::trim)
            .ok_or_else(|| r.err("not a schoensdr model file"))?;
        if version != MODEL_FORMAT_VERSION.to_string() {
            return Err(r.err(&format!("unsupported model format version {version}")));
        }
        let kind: SdrKind = r
            .keyed("kind")?
            .parse()
            .map_err(|_| r.err("unknown kind"))?;
        let eigenvalues = r.vector("eigenvalues")?;
        let form = r.keyed("form")?;
        let reduction = match form.as_str() {
            "linear" => {
                let mean = DVector::from_vec(r.vector("mean")?);
                let basis = r.matrix("basis")?;
                Reduction::Linear(LinearReduction { mean, basis })
            }
            "dual" => {
                let kernel: RadialKernel = r
                    .keyed("kernel")?
                    .parse()
                    .map_err(|e: Error| r.err(&e.to_string()))?;
                let raw = r.keyed("grand_mean")?;
                let grand_mean = r.number(&raw)?;
                let col_means = DVector::from_vec(r.vector("col_means")?);
                let offset = DVector::from_vec(r.vector("offset")?);
                let train = r.matrix("train")?;
                let coef = r.matrix("coef")?;
                if coef.nrows() != train.nrows()
                    || col_means.len() != train.nrows()
                    || offset.len() != coef.ncols()
                {
                    return Err(r.err("inconsistent dual model dimensions"));
                }
                Reduction::Dual(DualReduction {
                    train,
                    kernel,
                    col_means,
                    grand_mean,
                    coef,
                    offset,
                })
            }
            other => return Err(r.err(&format!("unknown form `{other}`"))),
        };
        if r.next_line()? != "end" {
            return Err(r.err("expected `end`"));
        }
        Ok(SdrModel {
            kind,
            reduction,
            eigenvalues,
        })
    }
}

fn write_vector<'a>(s: &mut String, name: &str, values: impl Iterator<Item = &'a f64>) {
    let v: Vec<String> = values.map(|x| x.to_string()).collect();
    let _ = writeln!(s, "vector {name} {}", v.len());
    let _ = writeln!(s, "{}", v.join(" "));
}

fn write_matrix(s: &mut String, name: &str, m: &DMatrix<f64>) {
    let _ = writeln!(s, "matrix {name} {} {}", m.nrows(), m.ncols());
    for row in m.row_iter() {
        let v: Vec<String> = row.iter().map(|x| x.to_string()).collect();
        let _ = writeln!(s, "{}", v.join(" "));
    }
}

struct Reader<'a> {
    lines: std::iter::Enumerate<std::str::Lines<'a>>,
    line_no: usize,
}

impl<'a> Reader<'a> {
    fn new(text: &'a str) -> Self {
        Reader {
            lines: text.lines().enumerate(),
            line_no: 0,
        }
    }

    fn err(&self, message: &str) -> Error {
        Error::Parse {
            line: self.line_no,
            message: message.to_string(),
        }
    }

    fn next_line(&mut self) -> Result<&'a str> {
        let (i, line) = self
            .lines
            .next()
            .ok_or_else(|| self.err("unexpected end of model file"))?;
        self.line_no = i + 1;
        Ok(line.trim())
    }

    fn keyed(&mut self, key: &str) -> Result<String> {
        let line = self.next_line()?;
        match line.split_once(' ') {
            Some((k, v)) if k == key => Ok(v.trim().to_string()),
            _ => Err(self.err(&format!("expected `{key} ...`"))),
        }
    }

    fn number(&self, raw: &str) -> Result<f64> {
        raw.parse()
            .map_err(|_| self.err(&format!("bad number `{raw}`")))
    }

    fn numbers(&mut self, expected: usize) -> Result<Vec<f64>> {
        let line = if expected == 0 {
            self.next_line().unwrap_or("")
        } else {
            self.next_line()?
        };
        let v: Vec<f64> = line
            .split_whitespace()
            .map(|t| self.number(t))
            .collect::<Result<_>>()?;
        if v.len() != expected {
            return Err(self.err(&format!("expected {expected} numbers, found {}", v.len())));
        }
        Ok(v)
    }

    fn vector(&mut self, name: &str) -> Result<Vec<f64>> {
        let header = self.keyed("vector")?;
        let mut parts = header.split_whitespace();
        if parts.next() != Some(name) {
            return Err(self.err(&format!("expected vector `{name}`")));
        }
        let len = parts
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| self.err("bad vector length"))?;
        self.numbers(len)
    }

    fn matrix(&mut self, name: &str) -> Result<DMatrix<f64>> {
        let header = self.keyed("matrix")?;
        let parts: Vec<&str> = header.split_whitespace().collect();
        if parts.len() != 3 || parts[0] != name {
            return Err(self.err(&format!("expected matrix `{name}` header")));
        }
        let rows: usize = parts[1].parse().map_err(|_| self.err("bad row count"))?;
        let cols: usize = parts[2].parse().map_err(|_| self.err("bad column count"))?;
        let mut data = Vec::with_capacity(rows * cols);
        for _ in 0..rows {
            data.extend(self.numbers(cols)?);
        }
        Ok(DMatrix::from_row_slice(rows, cols, &data))
    }
}
