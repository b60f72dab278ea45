//! Information leakage probes against published statistics.

mod classify;
mod matrix;
mod records;
mod templates;

pub use classify::{
    classify, extract_value, Comparator, Outcome, ProbeMode, ProbeOutcome, ReticenceConfig, DEFAULT_RETICENCE_PHRASES,
};
pub use matrix::{
    expected_cells, load_families, run_matrix, MatrixCounts, MatrixOptions, ModelFamily, OutcomeCounts, ProbeCell, ProbeSpec,
    ResultMatrix, Setting,
};
pub use records::{read_records, HistoryEntry, PrintedValue, StatisticRecord};
pub use templates::{render_instruct_probe, render_prompt, TemplateId, INSTRUCT_SYSTEM_PROMPT};

#[derive(Debug, thiserror::Error)]
pub enum LeakageError {
    #[error("{dataset}: {wanted}-shot prompt needs {wanted} prior values, only {available} available")]
    InsufficientHistory { dataset: String, wanted: usize, available: usize },
    #[error("{dataset}: {reason}")]
    InvalidRecord { dataset: String, reason: String },
    #[error("{0}")]
    Config(String),
    #[error(transparent)]
    Jsonl(#[from] crate::jsonl::JsonlError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
