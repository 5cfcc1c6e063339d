//! Demographic-parity metrics, a logistic-regression baseline and the
//! cross-validated before/after evaluation.

mod logistic;
mod metrics;
mod procedure;

pub use logistic::{fit_logistic, Classifier, LogisticConfig};
pub use metrics::{accuracy, di_confidence_interval, disparate_impact, DIEstimate};
pub use procedure::{
    run_procedure, EvalReport, FoldResult, Pass, PassSummary, ProcedureConfig, REPORT_SCHEMA_VERSION,
};
