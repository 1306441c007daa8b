//! AUC maximization as a convex-concave saddle-point problem, with
//! first-order, Newton and quasi-Newton solvers, linear baselines, metrics,
//! data handling and multichannel signal features.

// `!(x > 0.0)` is used on purpose so NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baselines;
pub mod data;
pub mod dataset;
pub mod error;
pub mod metrics;
pub mod objective;
pub mod signal;
pub mod solvers;

pub use dataset::{Label, LabeledDataset};
pub use error::{Error, Result};
pub use metrics::{classification_report, roc_auc, ConfusionCounts, MetricsReport};
pub use objective::{AucObjective, ObjectiveParams, PrimalDualState, SaddleObjective, DEFAULT_LAMBDA};
pub use solvers::{solve, Method, SolveResult, SolverConfig, TraceRow};
