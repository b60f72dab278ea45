use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::objective::{unlearning_objective, BatchSampler};
use super::{UnlearnError, UnlearningConfig};
use crate::corpus::{ensure_disjoint, Corpus};
use crate::jsonl;
use crate::model::loss::{cross_entropy, kl_from_reference, Scored};
use crate::model::{apply_gradient_step, LocalModel, ModelError, ModelKind, NeuralLm, Optimizer, TrainableLm};
use crate::scalar::Scalar;

/// Telemetry for one gradient step, measured before the update.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepReport {
    pub step: usize,
    /// Cross-entropy on the sampled target batch (nats/token).
    pub target_loss: f64,
    /// KL from the frozen reference on the sampled safe batch (nats/token).
    pub safe_kl: f64,
    pub combined_objective: f64,
    pub alarm: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub steps_completed: usize,
    /// Cross-entropy over every target chunk, before and after the run.
    pub initial_target_loss: f64,
    pub final_target_loss: f64,
    /// KL from the reference over every safe chunk after the run.
    pub final_safe_kl: f64,
    /// Mean and max of the per-step `safe_kl` telemetry.
    pub mean_safe_kl: f64,
    pub max_safe_kl: f64,
    pub alarm_steps: usize,
    /// Mean target loss over the last 10% of steps exceeds the mean over
    /// the first 10%. `None` when no steps ran.
    pub target_loss_trend_up: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub step: usize,
    pub location: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnlearningRun {
    pub config: UnlearningConfig,
    pub model_id: String,
    pub target_corpus: String,
    pub safe_corpus: String,
    #[serde(skip)]
    pub reports: Vec<StepReport>,
    pub checkpoints: Vec<Checkpoint>,
    pub summary: Option<RunSummary>,
    #[serde(default)]
    pub aborted: Option<String>,
}

/// Receives telemetry and checkpoints as the run progresses.
pub trait RunObserver<M> {
    fn on_step(&mut self, _report: &StepReport) -> Result<(), UnlearnError> {
        Ok(())
    }

    /// Persist `model` as the state after `step` steps; returns where.
    fn on_checkpoint(&mut self, step: usize, model: &M) -> Result<String, UnlearnError>;
}

/// Keeps checkpoints in memory.
pub struct MemoryObserver<M> {
    pub checkpoints: Vec<(usize, M)>,
}

impl<M> Default for MemoryObserver<M> {
    fn default() -> Self {
        MemoryObserver { checkpoints: Vec::new() }
    }
}

impl<M: Clone> RunObserver<M> for MemoryObserver<M> {
    fn on_checkpoint(&mut self, step: usize, model: &M) -> Result<String, UnlearnError> {
        self.checkpoints.push((step, model.clone()));
        Ok(format!("memory:{step}"))
    }
}

/// Run directory: `run.json`, `steps.jsonl` (appended every step) and
/// `checkpoints/step-<n>/model.json`.
pub struct RunDirectory {
    root: PathBuf,
    model_id: String,
    kind: ModelKind,
}

impl RunDirectory {
    pub fn create(root: &Path, model_id: &str, kind: ModelKind) -> Result<Self, UnlearnError> {
        std::fs::create_dir_all(root.join("checkpoints"))?;
        let steps = root.join("steps.jsonl");
        if steps.exists() {
            std::fs::remove_file(&steps)?;
        }
        Ok(RunDirectory {
            root: root.to_path_buf(),
            model_id: model_id.to_string(),
            kind,
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn checkpoint_dir(root: &Path, step: usize) -> PathBuf {
        root.join("checkpoints").join(format!("step-{step}"))
    }

    pub fn write_run(&self, run: &UnlearningRun) -> Result<(), UnlearnError> {
        let json = serde_json::to_string_pretty(run).map_err(std::io::Error::from)?;
        std::fs::write(self.root.join("run.json"), json)?;
        Ok(())
    }
}

impl RunObserver<NeuralLm<f64>> for RunDirectory {
    fn on_step(&mut self, report: &StepReport) -> Result<(), UnlearnError> {
        jsonl::append(&self.root.join("steps.jsonl"), report).map_err(|e| UnlearnError::Io(e.to_string()))
    }

    fn on_checkpoint(&mut self, step: usize, model: &NeuralLm<f64>) -> Result<String, UnlearnError> {
        let dir = Self::checkpoint_dir(&self.root, step);
        LocalModel::new(self.model_id.clone(), self.kind, model.clone())
            .save(&dir)
            .map_err(UnlearnError::Model)?;
        Ok(format!("checkpoints/step-{step}"))
    }
}

/// Load `run.json` plus `steps.jsonl` from a run directory.
pub fn load_run(root: &Path) -> Result<UnlearningRun, UnlearnError> {
    let raw = std::fs::read_to_string(root.join("run.json"))?;
    let mut run: UnlearningRun =
        serde_json::from_str(&raw).map_err(|e| UnlearnError::Io(e.to_string()))?;
    let steps = root.join("steps.jsonl");
    if steps.exists() {
        run.reports = jsonl::read(&steps).map_err(|e| UnlearnError::Io(e.to_string()))?;
    }
    Ok(run)
}

fn full(chunks: &[Vec<u32>]) -> Vec<Scored> {
    chunks.iter().cloned().map(Scored::full).collect()
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Mean target loss over the last 10% of steps exceeds the first 10%.
pub fn target_trend_up(reports: &[StepReport]) -> Option<bool> {
    if reports.is_empty() {
        return None;
    }
    let k = (reports.len() / 10).max(1);
    let losses: Vec<f64> = reports.iter().map(|r| r.target_loss).collect();
    Some(mean(&losses[losses.len() - k..]) > mean(&losses[..k]))
}

/// Ablate `target` from `model` for `config.max_steps` steps.
///
/// The reference for the preservation term is a frozen copy of the model as
/// passed in. On numerical divergence the run stops; the partial run
/// (reports so far, no final checkpoint) is returned inside the error.
pub fn run_unlearning<T, M, O>(
    model: &mut M,
    model_id: &str,
    target: &Corpus,
    safe: &Corpus,
    config: &UnlearningConfig,
    observer: &mut O,
) -> Result<UnlearningRun, UnlearnError>
where
    T: Scalar,
    M: TrainableLm<T>,
    O: RunObserver<M>,
{
    config.validate()?;
    ensure_disjoint(target, safe)?;
    let encode = |c: &Corpus| c.chunks.iter().map(|ch| model.encode(&ch.text)).collect::<Vec<_>>();
    let sampler = BatchSampler::new(encode(target), encode(safe))?;
    let reference = model.clone();
    let mut run = UnlearningRun {
        config: config.clone(),
        model_id: model_id.to_string(),
        target_corpus: target.name.clone(),
        safe_corpus: safe.name.clone(),
        reports: Vec::new(),
        checkpoints: Vec::new(),
        summary: None,
        aborted: None,
    };

    let all_target = full(sampler.target_chunks());
    let all_safe = full(sampler.safe_chunks());
    let initial_target_loss = cross_entropy(model, &all_target, None)?.as_f64();

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut optimizer = Optimizer::new(config.optimizer, model.params().len());
    let lr = T::of(config.learning_rate);
    let with_mismatch = config.w_mismatch > 0.0;

    for step in 1..=config.max_steps {
        let batches = sampler.sample(&mut rng, config.batch_size, with_mismatch);
        let mut value = None;
        let result = apply_gradient_step(model, &mut optimizer, lr, |m, g| {
            let v = unlearning_objective(m, &reference, &batches, config, Some(g))
                .map_err(|_| ModelError::Divergence)?;
            value = Some(v);
            Ok(v.objective)
        });
        match (result, value) {
            (Ok(_), Some(v)) => {
                let safe_kl = v.preserve_term.as_f64();
                let report = StepReport {
                    step,
                    target_loss: v.target_loss().as_f64(),
                    safe_kl,
                    combined_objective: v.objective.as_f64(),
                    alarm: safe_kl > config.kl_alarm_threshold,
                };
                observer.on_step(&report)?;
                run.reports.push(report);
            }
            (Err(e), _) => {
                run.aborted = Some(format!("{e} at step {step}"));
                return Err(UnlearnError::Diverged {
                    step,
                    partial: Box::new(run),
                });
            }
            (Ok(_), None) => unreachable!("objective closure always records its value"),
        }
        let periodic = config.checkpoint_every.is_some_and(|k| step % k == 0);
        if periodic && step != config.max_steps {
            let location = observer.on_checkpoint(step, model)?;
            run.checkpoints.push(Checkpoint { step, location });
        }
    }

    let location = observer.on_checkpoint(config.max_steps, model)?;
    run.checkpoints.push(Checkpoint {
        step: config.max_steps,
        location,
    });

    let kls: Vec<f64> = run.reports.iter().map(|r| r.safe_kl).collect();
    run.summary = Some(RunSummary {
        steps_completed: run.reports.len(),
        initial_target_loss,
        final_target_loss: cross_entropy(model, &all_target, None)?.as_f64(),
        final_safe_kl: kl_from_reference(model, &reference, &all_safe, None)?.as_f64(),
        mean_safe_kl: if kls.is_empty() { 0.0 } else { mean(&kls) },
        max_safe_kl: kls.iter().copied().fold(0.0, f64::max),
        alarm_steps: run.reports.iter().filter(|r| r.alarm).count(),
        target_loss_trend_up: target_trend_up(&run.reports),
    });
    Ok(run)
}
