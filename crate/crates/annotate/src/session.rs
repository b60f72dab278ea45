//! Task handout, submissions and progress over the event store.

use std::collections::{BTreeSet, HashMap};
use std::path::Path;
use std::time::{Duration, Instant};

use chrono::{DateTime, Utc};
use govaudit_core::evalkit::{Annotation, CodeLabel, Query, ResponseRecord};
use serde::{Deserialize, Serialize};

use crate::store::{Event, Store};
use crate::tasks::{build_tasks, TaskPayload, TaskRecord, TaskStatus};
use crate::AnnotateError;

/// How long a handed-out task stays reserved for its annotator.
pub const DEFAULT_LEASE: Duration = Duration::from_secs(30 * 60);

/// A stored annotation as shown back to clients (no phase or model).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Submission {
    pub task_id: String,
    pub annotator_id: String,
    pub codes: BTreeSet<CodeLabel>,
    pub note: String,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SubmitOutcome {
    Stored(Submission),
    /// The same payload had already been stored.
    Duplicate(Submission),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionState {
    pub annotator_id: String,
    /// Tasks done by anyone.
    pub completed: usize,
    pub remaining: usize,
    pub skipped: usize,
    pub total: usize,
    /// Tasks done by this annotator.
    pub completed_by_annotator: usize,
    pub started_at: DateTime<Utc>,
}

struct Lease {
    task: usize,
    until: Instant,
}

pub struct Session {
    seed: u64,
    started_at: DateTime<Utc>,
    tasks: Vec<TaskRecord>,
    index: HashMap<String, usize>,
    status: Vec<TaskStatus>,
    done: Vec<Option<Submission>>,
    /// Task indices in submission order, for export.
    order: Vec<usize>,
    leases: HashMap<String, Lease>,
    annotator_started: HashMap<String, DateTime<Utc>>,
    lease_ttl: Duration,
    store: Store,
}

impl Session {
    /// Open the store at `path` and replay it over the tasks built from
    /// `responses`. A seed recorded in an existing store wins over `seed`.
    pub fn open(path: &Path, responses: &[ResponseRecord], queries: &[Query], seed: u64) -> Result<Self, AnnotateError> {
        let (mut store, events) = Store::open(path)?;
        let (seed, started_at, recorded_count) = match events.first() {
            Some(Event::Session {
                seed,
                started_at,
                task_count,
            }) => (*seed, *started_at, Some(*task_count)),
            Some(_) => {
                return Err(AnnotateError::Mismatch(format!(
                    "{} does not start with a session record",
                    path.display()
                )))
            }
            None => (seed, Utc::now(), None),
        };
        let tasks = build_tasks(responses, queries, seed)?;
        match recorded_count {
            Some(n) if n != tasks.len() => {
                return Err(AnnotateError::Mismatch(format!(
                    "store was created for {n} tasks but {} responses were given",
                    tasks.len()
                )))
            }
            Some(_) => {}
            None => store.append(&Event::Session {
                seed,
                task_count: tasks.len(),
                started_at,
            })?,
        }
        let n = tasks.len();
        let mut s = Session {
            seed,
            started_at,
            index: tasks.iter().enumerate().map(|(i, t)| (t.task_id.clone(), i)).collect(),
            tasks,
            status: vec![TaskStatus::Pending; n],
            done: vec![None; n],
            order: Vec::new(),
            leases: HashMap::new(),
            annotator_started: HashMap::new(),
            lease_ttl: DEFAULT_LEASE,
            store,
        };
        for e in events.into_iter().skip(1) {
            s.replay(e)?;
        }
        Ok(s)
    }

    pub fn with_lease(mut self, ttl: Duration) -> Self {
        self.lease_ttl = ttl;
        self
    }

    fn replay(&mut self, e: Event) -> Result<(), AnnotateError> {
        match e {
            Event::Session { .. } => Err(AnnotateError::Mismatch("second session record in store".into())),
            Event::Annotation {
                task_id,
                response,
                annotator_id,
                codes,
                note,
                at,
            } => {
                let i = self.task_index(&task_id)?;
                if self.tasks[i].response != response {
                    return Err(AnnotateError::Mismatch(format!(
                        "{task_id} maps to a different response than when it was coded"
                    )));
                }
                self.annotator_started.entry(annotator_id.clone()).or_insert(at);
                self.record_done(i, annotator_id, codes, note);
                Ok(())
            }
            Event::Skip {
                task_id,
                annotator_id,
                at,
            } => {
                let i = self.task_index(&task_id)?;
                self.annotator_started.entry(annotator_id).or_insert(at);
                if self.status[i] == TaskStatus::Pending {
                    self.status[i] = TaskStatus::Skipped;
                }
                Ok(())
            }
        }
    }

    fn task_index(&self, task_id: &str) -> Result<usize, AnnotateError> {
        self.index
            .get(task_id)
            .copied()
            .ok_or_else(|| AnnotateError::UnknownTask(task_id.to_string()))
    }

    fn record_done(&mut self, i: usize, annotator_id: String, codes: BTreeSet<CodeLabel>, note: String) {
        self.status[i] = TaskStatus::Done;
        self.done[i] = Some(Submission {
            task_id: self.tasks[i].task_id.clone(),
            annotator_id,
            codes,
            note,
        });
        self.order.push(i);
        self.leases.retain(|_, l| l.task != i);
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn tasks(&self) -> &[TaskRecord] {
        &self.tasks
    }

    fn payload(&self, i: usize) -> TaskPayload {
        let t = &self.tasks[i];
        TaskPayload {
            task_id: t.task_id.clone(),
            query_text: t.query_text.clone(),
            ground_truth: t.ground_truth.clone(),
            response_text: t.response_text.clone(),
            display_order_seed: self.seed,
            status: self.status[i],
        }
    }

    fn touch(&mut self, annotator_id: &str) {
        self.annotator_started
            .entry(annotator_id.to_string())
            .or_insert_with(Utc::now);
    }

    /// The annotator's current task, or the next pending task nobody else
    /// holds. Asking again before submitting returns the same task.
    pub fn next_task(&mut self, annotator_id: &str) -> Option<TaskPayload> {
        self.touch(annotator_id);
        let now = Instant::now();
        self.leases.retain(|_, l| l.until > now);
        if let Some(l) = self.leases.get_mut(annotator_id) {
            if self.status[l.task] == TaskStatus::Pending {
                l.until = now + self.lease_ttl;
                let i = l.task;
                return Some(self.payload(i));
            }
        }
        let held: BTreeSet<usize> = self.leases.values().map(|l| l.task).collect();
        let i = (0..self.tasks.len()).find(|i| self.status[*i] == TaskStatus::Pending && !held.contains(i))?;
        self.leases.insert(
            annotator_id.to_string(),
            Lease {
                task: i,
                until: now + self.lease_ttl,
            },
        );
        Some(self.payload(i))
    }

    /// Parse code strings, rejecting the whole set on the first bad one.
    pub fn parse_codes(codes: &[String]) -> Result<BTreeSet<CodeLabel>, AnnotateError> {
        codes
            .iter()
            .map(|c| c.parse::<CodeLabel>().map_err(|_| AnnotateError::InvalidCode(c.clone())))
            .collect()
    }

    pub fn submit(&mut self, task_id: &str, annotator_id: &str, codes: &[String], note: &str) -> Result<SubmitOutcome, AnnotateError> {
        if annotator_id.trim().is_empty() {
            return Err(AnnotateError::Input("annotator_id is required".into()));
        }
        let i = self.task_index(task_id)?;
        let codes = Self::parse_codes(codes)?;
        let wanted = Submission {
            task_id: task_id.to_string(),
            annotator_id: annotator_id.to_string(),
            codes,
            note: note.to_string(),
        };
        if let Some(stored) = &self.done[i] {
            return if *stored == wanted {
                Ok(SubmitOutcome::Duplicate(stored.clone()))
            } else {
                Err(AnnotateError::Conflict(Box::new(stored.clone())))
            };
        }
        self.touch(annotator_id);
        self.store.append(&Event::Annotation {
            task_id: task_id.to_string(),
            response: self.tasks[i].response.clone(),
            annotator_id: annotator_id.to_string(),
            codes: wanted.codes.clone(),
            note: wanted.note.clone(),
            at: Utc::now(),
        })?;
        self.record_done(i, wanted.annotator_id.clone(), wanted.codes.clone(), wanted.note.clone());
        Ok(SubmitOutcome::Stored(wanted))
    }

    /// Set a pending task aside; it is not handed out again. It can still
    /// be coded by id.
    pub fn skip(&mut self, task_id: &str, annotator_id: &str) -> Result<TaskStatus, AnnotateError> {
        let i = self.task_index(task_id)?;
        match self.status[i] {
            TaskStatus::Done => return Err(AnnotateError::Conflict(Box::new(self.done[i].clone().expect("done task has a submission")))),
            TaskStatus::Skipped => return Ok(TaskStatus::Skipped),
            TaskStatus::Pending => {}
        }
        self.touch(annotator_id);
        self.store.append(&Event::Skip {
            task_id: task_id.to_string(),
            annotator_id: annotator_id.to_string(),
            at: Utc::now(),
        })?;
        self.status[i] = TaskStatus::Skipped;
        self.leases.retain(|_, l| l.task != i);
        Ok(TaskStatus::Skipped)
    }

    pub fn progress(&self, annotator_id: &str) -> SessionState {
        let count = |s: TaskStatus| self.status.iter().filter(|x| **x == s).count();
        SessionState {
            annotator_id: annotator_id.to_string(),
            completed: count(TaskStatus::Done),
            remaining: count(TaskStatus::Pending),
            skipped: count(TaskStatus::Skipped),
            total: self.tasks.len(),
            completed_by_annotator: self
                .done
                .iter()
                .flatten()
                .filter(|s| s.annotator_id == annotator_id)
                .count(),
            started_at: self.annotator_started.get(annotator_id).copied().unwrap_or(self.started_at),
        }
    }

    /// Unblinded annotations in submission order.
    pub fn export(&self) -> Vec<Annotation> {
        self.order
            .iter()
            .map(|&i| {
                let s = self.done[i].as_ref().expect("ordered task has a submission");
                Annotation {
                    response: self.tasks[i].response.clone(),
                    annotator_id: s.annotator_id.clone(),
                    codes: s.codes.clone(),
                    note: s.note.clone(),
                }
            })
            .collect()
    }
}
