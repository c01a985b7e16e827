//! Experiment harness for the `ordsum` estimators: configuration, presets,
//! table runs, the RQMC convergence sweep, result files and verification
//! against reference values.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod output;
pub mod run;
pub mod verify;

pub use config::{ConfigLayer, ExperimentConfig, Format};
pub use error::{HarnessError, Result};
pub use output::{emit_results, parse_results, ResultRow};
pub use run::{run_convergence_sweep, run_experiment, SweepTable};
pub use verify::{verify, CellCheck, ReferenceRow};
