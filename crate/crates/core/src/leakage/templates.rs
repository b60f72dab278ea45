//! Completion templates for base models and the question form for
//! instruct models.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{LeakageError, StatisticRecord};

pub const INSTRUCT_SYSTEM_PROMPT: &str = "You are a helpful AI assistant. Answer the following question to the best of your ability. Keep your answer concise, returning a single number if appropriate.";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TemplateId {
    A,
    B,
    C,
    D,
}

impl TemplateId {
    pub const ALL: [TemplateId; 4] = [TemplateId::A, TemplateId::B, TemplateId::C, TemplateId::D];

    pub fn as_str(self) -> &'static str {
        match self {
            TemplateId::A => "a",
            TemplateId::B => "b",
            TemplateId::C => "c",
            TemplateId::D => "d",
        }
    }

    /// Pattern with `[statistic name]`-style placeholders, for display.
    pub fn pattern(self) -> &'static str {
        match self {
            TemplateId::A => "the [statistic name] in [year] was",
            TemplateId::B => "according to [the collecting organisation], the [statistic name] in [year] was",
            TemplateId::C => "[statistic name] [year]:",
            TemplateId::D => "'year', '[metric name]'\n[year],",
        }
    }
}

impl fmt::Display for TemplateId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TemplateId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "a" => Ok(TemplateId::A),
            "b" => Ok(TemplateId::B),
            "c" => Ok(TemplateId::C),
            "d" => Ok(TemplateId::D),
            other => Err(format!("unknown template {other:?} (expected a, b, c or d)")),
        }
    }
}

/// The line for one year with the value elided.
fn stem(record: &StatisticRecord, template: TemplateId, year: &str) -> String {
    let stat = &record.statistic_name;
    match template {
        TemplateId::A => format!("the {stat} in {year} was"),
        TemplateId::B => format!("according to {}, the {stat} in {year} was", record.collecting_org),
        TemplateId::C => format!("{stat} {year}:"),
        TemplateId::D => format!("{year},"),
    }
}

/// Prompt for `record` with `shots` genuine prior-year values. Shots are the
/// most recent prior entries, oldest first, each rendered as the template
/// line followed by its value.
pub fn render_prompt(record: &StatisticRecord, template: TemplateId, shots: usize) -> Result<String, LeakageError> {
    let prior = record.prior_history();
    if shots > prior.len() {
        return Err(LeakageError::InsufficientHistory {
            dataset: record.dataset_abbrev.clone(),
            wanted: shots,
            available: prior.len(),
        });
    }
    let mut lines = Vec::with_capacity(shots + 2);
    if template == TemplateId::D {
        lines.push(format!("'year', '{}'", record.metric_name()));
    }
    for e in &prior[prior.len() - shots..] {
        lines.push(format!("{} {}", stem(record, template, &e.year), e.value.as_str()));
    }
    lines.push(stem(record, template, &record.year_label));
    Ok(lines.join("\n"))
}

/// `(system prompt, question)` for instruct models.
pub fn render_instruct_probe(record: &StatisticRecord) -> (String, String) {
    (
        INSTRUCT_SYSTEM_PROMPT.to_string(),
        format!("What was the {} in {}?", record.statistic_name, record.year_label),
    )
}
