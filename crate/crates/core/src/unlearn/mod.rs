//! Unlearning-based ablation of a target corpus.

mod compare;
mod config;
mod objective;
mod run;

pub use compare::{compare_checkpoints, LossDelta};
pub use config::{parse_weights, UnlearningConfig};
pub use objective::{unlearning_objective, BatchSampler, Batches, ObjectiveValue};
pub use run::{
    load_run, run_unlearning, target_trend_up, Checkpoint, MemoryObserver, RunDirectory,
    RunObserver, RunSummary, StepReport, UnlearningRun,
};

use crate::corpus::CorpusError;
use crate::model::ModelError;

#[derive(Debug, thiserror::Error)]
pub enum UnlearnError {
    #[error("invalid unlearning config: {0}")]
    Config(String),
    #[error("{0} corpus has no usable chunks")]
    EmptyCorpus(&'static str),
    #[error("non-finite {0}")]
    NonFinite(&'static str),
    #[error("run diverged at step {step}")]
    Diverged {
        step: usize,
        partial: Box<UnlearningRun>,
    },
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Model(ModelError),
    #[error("i/o: {0}")]
    Io(String),
}

impl From<ModelError> for UnlearnError {
    fn from(e: ModelError) -> Self {
        match e {
            ModelError::Divergence => UnlearnError::NonFinite("loss"),
            other => UnlearnError::Model(other),
        }
    }
}

impl From<std::io::Error> for UnlearnError {
    fn from(e: std::io::Error) -> Self {
        UnlearnError::Io(e.to_string())
    }
}
