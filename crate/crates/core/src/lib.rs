//! ROC curve estimation: pooled, covariate-specific and covariate-adjusted
//! curves with empirical, kernel, Bayesian bootstrap and Dirichlet process
//! mixture estimators.

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod aroc;
pub mod cdf;
pub mod croc;
pub mod design;
pub mod diagnostics;
pub mod dpm;
pub mod error;
pub mod formula;
pub mod io;
pub mod kernel;
pub mod model;
pub mod pooled;
pub mod sampling;
pub mod splines;
pub mod stats;
pub mod summaries;

pub use error::{Error, Result};
