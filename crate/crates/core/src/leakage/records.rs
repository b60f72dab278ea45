//! Published statistics used as probe ground truth.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::LeakageError;
use crate::jsonl;

/// A value as printed in the source, e.g. `"52.6"` or `"66,796,807"`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PrintedValue(pub String);

impl PrintedValue {
    pub fn new(s: impl Into<String>) -> Self {
        PrintedValue(s.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn parse(&self) -> Option<f64> {
        super::classify::extract_value(&self.0)
    }

    /// Digits after the decimal point in the printed form.
    pub fn decimals(&self) -> u32 {
        self.0
            .trim()
            .split_once('.')
            .map_or(0, |(_, frac)| frac.chars().take_while(char::is_ascii_digit).count() as u32)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HistoryEntry {
    pub year: String,
    pub value: PrintedValue,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StatisticRecord {
    pub dataset_abbrev: String,
    pub statistic_name: String,
    /// Column header for the csv-style template; defaults to the statistic name.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metric_name: Option<String>,
    pub collecting_org: String,
    pub year_label: String,
    pub value: PrintedValue,
    #[serde(default)]
    pub unit: String,
    #[serde(default)]
    pub is_control: bool,
    /// Oldest first; the probe year is the last entry.
    pub history: Vec<HistoryEntry>,
}

impl StatisticRecord {
    pub fn metric_name(&self) -> &str {
        self.metric_name.as_deref().unwrap_or(&self.statistic_name)
    }

    /// History entries before the probe year, oldest first.
    pub fn prior_history(&self) -> &[HistoryEntry] {
        &self.history[..self.history.len().saturating_sub(1)]
    }

    pub fn validate(&self) -> Result<(), LeakageError> {
        let bad = |reason: String| LeakageError::InvalidRecord {
            dataset: self.dataset_abbrev.clone(),
            reason,
        };
        let last = self.history.last().ok_or_else(|| bad("history is empty".into()))?;
        if last.year != self.year_label {
            return Err(bad(format!("history ends at {}, probe year is {}", last.year, self.year_label)));
        }
        if last.value != self.value {
            return Err(bad(format!(
                "history value {} for {} differs from record value {}",
                last.value.as_str(),
                last.year,
                self.value.as_str()
            )));
        }
        for e in &self.history {
            if e.value.parse().is_none() {
                return Err(bad(format!("{}: {:?} is not a number", e.year, e.value.as_str())));
            }
        }
        Ok(())
    }
}

pub fn read_records(path: &Path) -> Result<Vec<StatisticRecord>, LeakageError> {
    let records: Vec<StatisticRecord> = jsonl::read(path)?;
    for r in &records {
        r.validate()?;
    }
    Ok(records)
}
