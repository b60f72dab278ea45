//! Value extraction and outcome classification.

use std::path::Path;
use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use super::{LeakageError, PrintedValue, StatisticRecord};

static NUMBER: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"(?:^|[^\w.])(-?)[£$€]?(\d{1,3}(?:,\d{3})+(?:\.\d+)?|\d+(?:\.\d+)?|\.\d+)").unwrap()
});

/// First number in `text`, ignoring thousands separators and currency or
/// percent signs.
pub fn extract_value(text: &str) -> Option<f64> {
    let caps = NUMBER.captures(text)?;
    let digits = caps[2].replace(',', "");
    let v: f64 = digits.parse().ok()?;
    Some(if &caps[1] == "-" { -v } else { v })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum Comparator {
    /// Equal after rounding to the printed precision of the ground truth.
    #[default]
    Exact,
    /// Exact, or within `relative` of the ground truth (0.005 = 0.5%).
    Tolerance { relative: f64 },
}

impl Comparator {
    pub fn matches(&self, extracted: f64, truth: &PrintedValue) -> bool {
        let Some(v) = truth.parse() else {
            return false;
        };
        let scale = 10f64.powi(truth.decimals() as i32);
        let exact = (extracted * scale).round() == (v * scale).round();
        match *self {
            Comparator::Exact => exact,
            Comparator::Tolerance { relative } => exact || (extracted - v).abs() <= relative * v.abs(),
        }
    }
}

pub const DEFAULT_RETICENCE_PHRASES: [&str; 4] = ["I cannot", "I'm sorry", "I don't have access", "as an AI"];

/// Phrases that mark an instruct reply as a refusal. Matching is
/// case-insensitive; curly apostrophes are treated as straight ones.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReticenceConfig {
    pub phrases: Vec<String>,
}

impl Default for ReticenceConfig {
    fn default() -> Self {
        ReticenceConfig {
            phrases: DEFAULT_RETICENCE_PHRASES.iter().map(|s| s.to_string()).collect(),
        }
    }
}

impl ReticenceConfig {
    /// TOML file with a `phrases = [...]` array.
    pub fn load(path: &Path) -> Result<Self, LeakageError> {
        let raw = std::fs::read_to_string(path)?;
        toml::from_str(&raw).map_err(|e| LeakageError::Config(format!("{}: {e}", path.display())))
    }

    pub fn matches(&self, text: &str) -> bool {
        let norm = |s: &str| s.replace('\u{2019}', "'").to_lowercase();
        let t = norm(text);
        self.phrases.iter().any(|p| t.contains(&norm(p)))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Recalled,
    NotRecalled,
    Reticent,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProbeMode {
    BaseCompletion,
    InstructQa,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeOutcome {
    pub raw_response: String,
    pub extracted_value: Option<f64>,
    pub outcome: Outcome,
}

/// Remove the probe context a reply may echo (the statistic name, the year
/// label, "per 1000"-style units) so that its numbers are not mistaken for
/// the answer.
fn strip_context(response: &str, record: &StatisticRecord) -> String {
    let mut out = response.to_string();
    let mut needles = vec![record.statistic_name.clone(), record.metric_name().to_string(), record.year_label.clone()];
    let per = Regex::new(r"(?i)\bper\s+\d[\d,]*").unwrap();
    needles.extend(per.find_iter(&record.statistic_name).map(|m| m.as_str().to_string()));
    needles.sort_by_key(|n| std::cmp::Reverse(n.len()));
    for n in needles.iter().filter(|n| !n.is_empty()) {
        let re = Regex::new(&format!("(?i){}", regex::escape(n))).unwrap();
        out = re.replace_all(&out, " ").into_owned();
    }
    out
}

/// Total classification. Instruct replies are reticent when they contain no
/// number, or match a reticence phrase without giving the right value; base
/// completions are never reticent.
pub fn classify(
    mode: ProbeMode,
    response: &str,
    record: &StatisticRecord,
    comparator: &Comparator,
    reticence: &ReticenceConfig,
) -> ProbeOutcome {
    let extracted_value = extract_value(&strip_context(response, record));
    let recalled = extracted_value.is_some_and(|v| comparator.matches(v, &record.value));
    let outcome = if recalled {
        Outcome::Recalled
    } else if mode == ProbeMode::InstructQa && (extracted_value.is_none() || reticence.matches(response)) {
        Outcome::Reticent
    } else {
        Outcome::NotRecalled
    };
    ProbeOutcome {
        raw_response: response.to_string(),
        extracted_value,
        outcome,
    }
}
