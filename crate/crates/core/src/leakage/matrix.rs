//! The datasets × models × settings probe grid.

use std::fmt;
use std::path::Path;
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    classify, render_instruct_probe, render_prompt, Comparator, LeakageError, Outcome, ProbeMode, ProbeOutcome,
    ReticenceConfig, StatisticRecord, TemplateId,
};
use crate::model::{open_generator, GenerationParams, LanguageModel, ModelKind};

/// A base model and its instruct-tuned sibling.
#[derive(Clone)]
pub struct ModelFamily {
    pub name: String,
    pub base: Arc<dyn LanguageModel>,
    pub instruct: Arc<dyn LanguageModel>,
}

impl fmt::Debug for ModelFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ModelFamily")
            .field("name", &self.name)
            .field("base", &self.base.info().model_id)
            .field("instruct", &self.instruct.info().model_id)
            .finish()
    }
}

impl ModelFamily {
    pub fn new(name: impl Into<String>, base: Arc<dyn LanguageModel>, instruct: Arc<dyn LanguageModel>) -> Result<Self, LeakageError> {
        let name = name.into();
        if base.info().kind != ModelKind::Base || instruct.info().kind != ModelKind::Instruct {
            return Err(LeakageError::Config(format!(
                "family {name}: expected a base and an instruct model, got {:?} and {:?}",
                base.info().kind,
                instruct.info().kind
            )));
        }
        Ok(ModelFamily { name, base, instruct })
    }
}

#[derive(Deserialize)]
struct FamilyEntry {
    name: String,
    base: String,
    instruct: String,
}

#[derive(Deserialize)]
struct FamiliesFile {
    family: Vec<FamilyEntry>,
}

/// Load model families from a TOML file of `[[family]]` tables with `name`,
/// `base` and `instruct`. Model paths resolve against the file's directory.
pub fn load_families(path: &Path) -> Result<Vec<ModelFamily>, LeakageError> {
    let raw = std::fs::read_to_string(path)?;
    let file: FamiliesFile =
        toml::from_str(&raw).map_err(|e| LeakageError::Config(format!("{}: {e}", path.display())))?;
    let dir = path.parent().unwrap_or(Path::new("."));
    let open = |rel: &str| -> Result<Arc<dyn LanguageModel>, LeakageError> {
        let p = dir.join(rel);
        let m = open_generator(&p.to_string_lossy()).map_err(|e| LeakageError::Config(format!("{}: {e}", p.display())))?;
        Ok(Arc::from(m))
    };
    file.family
        .iter()
        .map(|f| ModelFamily::new(&f.name, open(&f.base)?, open(&f.instruct)?))
        .collect()
}

/// Which column of the grid a cell belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Setting {
    Shots(usize),
    Instruct,
}

impl fmt::Display for Setting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Setting::Shots(k) => write!(f, "{k}-shot"),
            Setting::Instruct => f.write_str("instruct"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProbeSpec {
    pub dataset: String,
    pub family: String,
    pub model_id: String,
    pub mode: ProbeMode,
    pub setting: Setting,
    /// Absent for instruct probes, which use a single question form.
    pub template: Option<TemplateId>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeCell {
    pub spec: ProbeSpec,
    pub is_control: bool,
    pub expected: String,
    pub system_prompt: Option<String>,
    pub prompt: String,
    pub attempts: usize,
    pub result: Option<ProbeOutcome>,
    /// Last error when every attempt failed.
    pub error: Option<String>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutcomeCounts {
    pub recalled: usize,
    pub not_recalled: usize,
    pub reticent: usize,
    pub failed: usize,
}

impl OutcomeCounts {
    pub fn total(&self) -> usize {
        self.recalled + self.not_recalled + self.reticent + self.failed
    }

    fn add(&mut self, cell: &ProbeCell) {
        match cell.result.as_ref().map(|r| r.outcome) {
            Some(Outcome::Recalled) => self.recalled += 1,
            Some(Outcome::NotRecalled) => self.not_recalled += 1,
            Some(Outcome::Reticent) => self.reticent += 1,
            None => self.failed += 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixCounts {
    pub control: OutcomeCounts,
    pub non_control: OutcomeCounts,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultMatrix {
    pub datasets: Vec<String>,
    pub families: Vec<String>,
    pub shots: Vec<usize>,
    pub templates: Vec<TemplateId>,
    /// Ordered by dataset, family, setting, template.
    pub cells: Vec<ProbeCell>,
    pub counts: MatrixCounts,
}

impl ResultMatrix {
    pub fn cell(&self, dataset: &str, family: &str, setting: Setting, template: Option<TemplateId>) -> Option<&ProbeCell> {
        self.cells
            .iter()
            .find(|c| c.spec.dataset == dataset && c.spec.family == family && c.spec.setting == setting && c.spec.template == template)
    }
}

/// Number of cells for `datasets` records and `families` model families:
/// one per (shots, template) for the base model plus one instruct question.
pub fn expected_cells(datasets: usize, families: usize, shots: usize, templates: usize) -> usize {
    datasets * families * (shots * templates + 1)
}

#[derive(Debug, Clone)]
pub struct MatrixOptions {
    pub shots: Vec<usize>,
    pub templates: Vec<TemplateId>,
    pub comparator: Comparator,
    pub reticence: ReticenceConfig,
    pub params: GenerationParams,
    pub max_attempts: usize,
    /// Minimum spacing between any two model calls.
    pub min_interval: Duration,
}

impl Default for MatrixOptions {
    fn default() -> Self {
        MatrixOptions {
            shots: vec![0, 1, 5],
            templates: TemplateId::ALL.to_vec(),
            comparator: Comparator::Exact,
            reticence: ReticenceConfig::default(),
            params: GenerationParams {
                max_new_tokens: 32,
                ..Default::default()
            },
            max_attempts: 3,
            min_interval: Duration::ZERO,
        }
    }
}

struct RateLimit {
    interval: Duration,
    next: Mutex<Instant>,
}

impl RateLimit {
    fn wait(&self) {
        if self.interval.is_zero() {
            return;
        }
        let slot = {
            let mut next = self.next.lock().unwrap();
            let slot = (*next).max(Instant::now());
            *next = slot + self.interval;
            slot
        };
        let now = Instant::now();
        if slot > now {
            std::thread::sleep(slot - now);
        }
    }
}

struct Job<'a> {
    record: &'a StatisticRecord,
    model: &'a dyn LanguageModel,
    cell: ProbeCell,
}

/// Probe every record with every family. Prompts are rendered up front, so
/// insufficient history fails before any model is called.
pub fn run_matrix(records: &[StatisticRecord], families: &[ModelFamily], opts: &MatrixOptions) -> Result<ResultMatrix, LeakageError> {
    let mut jobs = Vec::new();
    for record in records {
        record.validate()?;
        for fam in families {
            let base_id = fam.base.info().model_id.clone();
            for &k in &opts.shots {
                for &t in &opts.templates {
                    jobs.push(Job {
                        record,
                        model: fam.base.as_ref(),
                        cell: new_cell(
                            record,
                            ProbeSpec {
                                dataset: record.dataset_abbrev.clone(),
                                family: fam.name.clone(),
                                model_id: base_id.clone(),
                                mode: ProbeMode::BaseCompletion,
                                setting: Setting::Shots(k),
                                template: Some(t),
                            },
                            None,
                            render_prompt(record, t, k)?,
                        ),
                    });
                }
            }
            let (system, question) = render_instruct_probe(record);
            jobs.push(Job {
                record,
                model: fam.instruct.as_ref(),
                cell: new_cell(
                    record,
                    ProbeSpec {
                        dataset: record.dataset_abbrev.clone(),
                        family: fam.name.clone(),
                        model_id: fam.instruct.info().model_id.clone(),
                        mode: ProbeMode::InstructQa,
                        setting: Setting::Instruct,
                        template: None,
                    },
                    Some(system),
                    question,
                ),
            });
        }
    }

    let limit = RateLimit {
        interval: opts.min_interval,
        next: Mutex::new(Instant::now()),
    };
    let cells: Vec<ProbeCell> = jobs.into_par_iter().map(|job| execute(job, opts, &limit)).collect();

    let mut counts = MatrixCounts {
        control: OutcomeCounts::default(),
        non_control: OutcomeCounts::default(),
    };
    for c in &cells {
        if c.is_control {
            counts.control.add(c);
        } else {
            counts.non_control.add(c);
        }
    }
    Ok(ResultMatrix {
        datasets: records.iter().map(|r| r.dataset_abbrev.clone()).collect(),
        families: families.iter().map(|f| f.name.clone()).collect(),
        shots: opts.shots.clone(),
        templates: opts.templates.clone(),
        cells,
        counts,
    })
}

fn new_cell(record: &StatisticRecord, spec: ProbeSpec, system_prompt: Option<String>, prompt: String) -> ProbeCell {
    ProbeCell {
        spec,
        is_control: record.is_control,
        expected: record.value.as_str().to_string(),
        system_prompt,
        prompt,
        attempts: 0,
        result: None,
        error: None,
    }
}

fn execute(job: Job<'_>, opts: &MatrixOptions, limit: &RateLimit) -> ProbeCell {
    let Job { record, model, mut cell } = job;
    while cell.attempts < opts.max_attempts.max(1) {
        cell.attempts += 1;
        limit.wait();
        match model.generate(cell.system_prompt.as_deref(), &cell.prompt, &opts.params) {
            Ok(text) => {
                cell.result = Some(classify(cell.spec.mode, text.trim(), record, &opts.comparator, &opts.reticence));
                cell.error = None;
                break;
            }
            Err(e) => cell.error = Some(e.to_string()),
        }
    }
    cell
}

#[derive(Serialize)]
struct CsvRow<'a> {
    dataset: &'a str,
    is_control: bool,
    family: &'a str,
    model_id: &'a str,
    setting: String,
    template: &'a str,
    expected: &'a str,
    extracted: Option<f64>,
    outcome: &'a str,
    attempts: usize,
    error: &'a str,
}

impl ResultMatrix {
    /// One row per cell.
    pub fn write_csv(&self, path: &Path) -> Result<(), LeakageError> {
        let mut w = csv::Writer::from_path(path).map_err(|e| LeakageError::Config(e.to_string()))?;
        for c in &self.cells {
            w.serialize(CsvRow {
                dataset: &c.spec.dataset,
                is_control: c.is_control,
                family: &c.spec.family,
                model_id: &c.spec.model_id,
                setting: c.spec.setting.to_string(),
                template: c.spec.template.map_or("", TemplateId::as_str),
                expected: &c.expected,
                extracted: c.result.as_ref().and_then(|r| r.extracted_value),
                outcome: match c.result.as_ref().map(|r| r.outcome) {
                    Some(Outcome::Recalled) => "recalled",
                    Some(Outcome::NotRecalled) => "not_recalled",
                    Some(Outcome::Reticent) => "reticent",
                    None => "failed",
                },
                attempts: c.attempts,
                error: c.error.as_deref().unwrap_or(""),
            })
            .map_err(|e| LeakageError::Config(e.to_string()))?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_json(&self, path: &Path) -> Result<(), LeakageError> {
        std::fs::write(path, serde_json::to_string_pretty(self).map_err(|e| LeakageError::Config(e.to_string()))?)?;
        Ok(())
    }

    pub fn read_json(path: &Path) -> Result<Self, LeakageError> {
        let raw = std::fs::read_to_string(path)?;
        serde_json::from_str(&raw).map_err(|e| LeakageError::Config(format!("{}: {e}", path.display())))
    }
}
