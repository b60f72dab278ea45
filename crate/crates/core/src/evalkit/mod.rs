//! Citizen-query evaluation: responses before and after ablation, human
//! error codes, tallies, and the prevalence correlation.

mod codes;
mod correlation;
pub mod files;
mod query;
mod responses;
mod tally;

pub use codes::{CodeClass, CodeLabel, InvalidCode};
pub use correlation::{
    pearson, prevalence_correlation, CorrelationResult, PairedObservation, PrevalenceScore, SIGNIFICANCE_LEVEL,
};
pub use query::{compose_ground_truth, control_id, validate_queries, Query};
pub use responses::{run_evaluation, Phase, ResponseRecord, ResponseRef};
pub use tally::{ablation_effect, tally, AblationEffect, Annotation, ErrorTally, GroupBy, GroupKey, IntrusivenessGuard, QueryDifference};

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error("undefined correlation")]
    UndefinedCorrelation,
    #[error("{0}")]
    Invalid(String),
    #[error("{path}: {reason}")]
    Format { path: String, reason: String },
    #[error(transparent)]
    Jsonl(#[from] crate::jsonl::JsonlError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
