//! Sufficient dimension reduction with linear and kernel estimators, and
//! construction and certification of radial kernels valid in every
//! dimension.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::excessive_precision)]

pub mod error;
pub mod kernels;
pub mod linalg;
pub mod numerics;
pub mod schoenberg;
pub mod sdr;
pub mod sim;

pub use error::{Error, Result};
pub use kernels::{Bandwidth, GramMatrix, RadialKernel, ScaleMixture};
pub use schoenberg::{KernelCandidate, MembershipReport, Verdict};
pub use sdr::{SdrKind, SdrModel, TuningParams};
pub use sim::{CovariateLaw, ExperimentConfig, ExperimentResult, Setting, Tuning};
