//! gapforge: a missing-data toolkit for tabular datasets.
//!
//! The crate covers the full path from raw CSV to benchmark report:
//!
//! * [`tabular`] — columnar tables with an explicit observed/missing mask,
//!   CSV ingestion/emission, profiling, splitting, and removal strategies.
//! * [`missingness`] — seeded MCAR/MAR/MNAR injection and a dependence
//!   diagnostic separating the mechanisms.
//! * [`imputers`] — the fill catalog: zero/constant, mean/median/mode,
//!   new-category, next-valid, KNN, and predictive (regression/iterative)
//!   imputation with strict fit/transform separation.
//! * [`learners`] — from-scratch OLS/ridge, CART trees, KNN, bagging, and
//!   gradient-boosted trees.
//! * [`metrics`] — MSE/RMSE/RMSLE, confusion matrices, and the per-class /
//!   macro / weighted classification report.
//! * [`benchmark`] — synthetic dataset generators and the seeded
//!   fractions x trials x imputers x learners protocol with JSON / CSV /
//!   Markdown / plot-CSV reports.
//!
//! The `examples/` directory walks through each capability; the `gapforge`
//! binary exposes profiling, injection, imputation, and benchmarking over
//! CSV and JSON files.

pub mod benchmark;
pub mod error;
pub mod imputers;
pub mod learners;
pub mod metrics;
pub mod missingness;
pub mod tabular;

pub use error::{Error, Result};
