//! Append-only event log. Every accepted submission or skip is one JSON
//! line; the in-memory state is rebuilt by replaying the file at startup.

use std::collections::BTreeSet;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use govaudit_core::evalkit::{CodeLabel, ResponseRef};
use serde::{Deserialize, Serialize};

use crate::AnnotateError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum Event {
    /// First line of every store; fixes the task order for later restarts.
    Session {
        seed: u64,
        task_count: usize,
        started_at: DateTime<Utc>,
    },
    Annotation {
        task_id: String,
        response: ResponseRef,
        annotator_id: String,
        codes: BTreeSet<CodeLabel>,
        note: String,
        at: DateTime<Utc>,
    },
    Skip {
        task_id: String,
        annotator_id: String,
        at: DateTime<Utc>,
    },
}

pub struct Store {
    path: PathBuf,
    file: File,
}

impl Store {
    /// Open (creating if needed) and return the events already recorded.
    pub fn open(path: &Path) -> Result<(Store, Vec<Event>), AnnotateError> {
        let mut events = Vec::new();
        if path.exists() {
            for (i, line) in BufReader::new(File::open(path)?).lines().enumerate() {
                let line = line?;
                if line.trim().is_empty() {
                    continue;
                }
                let e = serde_json::from_str(&line).map_err(|e| AnnotateError::Store {
                    path: path.display().to_string(),
                    line: i + 1,
                    reason: e.to_string(),
                })?;
                events.push(e);
            }
        } else if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir)?;
        }
        let file = OpenOptions::new().create(true).append(true).open(path)?;
        Ok((
            Store {
                path: path.to_path_buf(),
                file,
            },
            events,
        ))
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn append(&mut self, event: &Event) -> Result<(), AnnotateError> {
        let mut line = serde_json::to_string(event).map_err(std::io::Error::from)?;
        line.push('\n');
        self.file.write_all(line.as_bytes())?;
        self.file.flush()?;
        Ok(())
    }
}
