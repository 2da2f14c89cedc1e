//! Regression toolkit for predicting system-testing defects from metrics
//! collected in the phases before system testing.
//!
//! The pipeline is: ingest a metric table ([`dataset`]), fit ordinary least
//! squares models with full inference ([`regress`]), screen them against
//! acceptance thresholds and check predictions against verification
//! intervals ([`gate`]), and inspect residuals ([`diagnostics`]). The
//! [`numerics`] module carries the QR solver and the t/F distribution
//! functions everything else builds on.

pub mod baselines;
pub mod cli;
pub mod dataset;
pub mod diagnostics;
pub mod format;
pub mod gate;
pub mod numerics;
pub mod regress;

pub use dataset::{parse_csv, Column, Dataset, MetricRecord};
pub use gate::{GateCriteria, GateReport};
pub use regress::{fit, FittedModel, ModelSpec, PredictionResult};
