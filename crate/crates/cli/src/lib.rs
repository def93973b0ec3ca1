//! Experiment harness: initial data, trajectory storage, diagnostics by name,
//! parameter sweeps with manifests, and reports.

pub mod error;
pub mod experiment;
pub mod initial;
pub mod ops;
pub mod report;
pub mod store;
pub mod svg;

pub use error::{HarnessError, Result};
pub use experiment::{run_experiment, ExperimentSpec, GridSpec, RunManifest, RunRecord, RunStatus, Sweep};
pub use initial::InitialData;
pub use ops::{parse_op_list, DiagnosticOp, OpKind, OpOutcome};
pub use report::{emit_report, ReportOutcome};
