//! Pre/post evaluation runs over the query set.

use std::fmt;
use std::str::FromStr;

use chrono::{DateTime, Utc};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::Query;
use crate::model::{GenerationParams, LanguageModel, ModelError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Pre,
    Post,
}

impl Phase {
    pub const BOTH: [Phase; 2] = [Phase::Pre, Phase::Post];

    pub fn as_str(self) -> &'static str {
        match self {
            Phase::Pre => "pre",
            Phase::Post => "post",
        }
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Phase {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "pre" => Ok(Phase::Pre),
            "post" => Ok(Phase::Post),
            other => Err(format!("unknown phase {other:?} (expected pre or post)")),
        }
    }
}

/// Identifies one response within an evaluation set.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ResponseRef {
    pub query_id: u32,
    pub model_id: String,
    pub phase: Phase,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResponseRecord {
    #[serde(flatten)]
    pub key: ResponseRef,
    pub response_text: String,
    pub params: GenerationParams,
    pub created_at: DateTime<Utc>,
    /// Set when generation failed; `response_text` is then empty.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

const MAX_ATTEMPTS: usize = 3;

fn generate_with_retry(model: &dyn LanguageModel, prompt: &str, params: &GenerationParams) -> Result<String, ModelError> {
    let mut attempt = 0;
    loop {
        attempt += 1;
        match model.generate(None, prompt, params) {
            Err(e) if e.is_retriable() && attempt < MAX_ATTEMPTS => {
                std::thread::sleep(std::time::Duration::from_millis(200 * attempt as u64));
            }
            other => return other,
        }
    }
}

/// Ask every query once. Failures are recorded on the record and the run
/// carries on; output order follows `queries`.
pub fn run_evaluation(
    model: &dyn LanguageModel,
    queries: &[Query],
    phase: Phase,
    params: &GenerationParams,
) -> Vec<ResponseRecord> {
    let model_id = model.info().model_id.clone();
    queries
        .par_iter()
        .map(|q| {
            let (response_text, error) = match generate_with_retry(model, &q.text, params) {
                Ok(text) => (text.trim().to_string(), None),
                Err(e) => (String::new(), Some(e.to_string())),
            };
            ResponseRecord {
                key: ResponseRef {
                    query_id: q.id,
                    model_id: model_id.clone(),
                    phase,
                },
                response_text,
                params: *params,
                created_at: Utc::now(),
                error,
            }
        })
        .collect()
}
