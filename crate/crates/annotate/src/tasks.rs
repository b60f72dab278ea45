//! Annotation tasks: one per response, in a seeded shuffled order.

use std::collections::{BTreeSet, HashMap};

use govaudit_core::evalkit::{Query, ResponseRecord, ResponseRef};
use rand::seq::SliceRandom;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::AnnotateError;

/// Server-side view of a task, including the identifiers the client never sees.
#[derive(Debug, Clone, PartialEq)]
pub struct TaskRecord {
    pub task_id: String,
    pub response: ResponseRef,
    pub query_text: String,
    pub ground_truth: String,
    pub response_text: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TaskStatus {
    Pending,
    Done,
    Skipped,
}

/// What the client receives for a task. Phase and model are left out.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskPayload {
    pub task_id: String,
    pub query_text: String,
    pub ground_truth: String,
    pub response_text: String,
    pub display_order_seed: u64,
    pub status: TaskStatus,
}

/// Build tasks from the responses to be coded. Responses are sorted by key
/// and then shuffled with `seed`, so the pre and post answers to a query
/// land in an order the annotator cannot predict; ids follow the shuffled
/// order and carry no information about the response.
pub fn build_tasks(responses: &[ResponseRecord], queries: &[Query], seed: u64) -> Result<Vec<TaskRecord>, AnnotateError> {
    let by_id: HashMap<u32, &Query> = queries.iter().map(|q| (q.id, q)).collect();
    let mut seen = BTreeSet::new();
    let mut sorted: Vec<&ResponseRecord> = responses.iter().collect();
    sorted.sort_by(|a, b| a.key.cmp(&b.key));
    for r in &sorted {
        if !seen.insert(&r.key) {
            return Err(AnnotateError::Input(format!(
                "duplicate response for query {} from {} ({})",
                r.key.query_id, r.key.model_id, r.key.phase
            )));
        }
        if !by_id.contains_key(&r.key.query_id) {
            return Err(AnnotateError::Input(format!("response refers to unknown query {}", r.key.query_id)));
        }
    }
    sorted.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    Ok(sorted
        .into_iter()
        .enumerate()
        .map(|(i, r)| {
            let q = by_id[&r.key.query_id];
            TaskRecord {
                task_id: format!("task-{:04}", i + 1),
                response: r.key.clone(),
                query_text: q.text.clone(),
                ground_truth: q.ground_truth.clone(),
                response_text: r.response_text.clone(),
            }
        })
        .collect())
}
