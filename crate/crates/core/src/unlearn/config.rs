use serde::{Deserialize, Serialize};

use super::UnlearnError;
use crate::model::OptimizerKind;

/// Weights and schedule of an unlearning run.
///
/// The defaults are the forget/mismatch/preserve weighting `[0.25, 0, 1]`,
/// a rate of `2e-4` and 1000 steps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnlearningConfig {
    pub w_forget: f64,
    pub w_mismatch: f64,
    pub w_preserve: f64,
    pub learning_rate: f64,
    pub max_steps: usize,
    /// Chunks sampled (with replacement) per step from each corpus.
    pub batch_size: usize,
    /// Safe-data KL (nats/token) above which a step is flagged.
    pub kl_alarm_threshold: f64,
    pub seed: u64,
    /// Save a checkpoint every this many steps; the final step is always saved.
    #[serde(default)]
    pub checkpoint_every: Option<usize>,
    #[serde(default)]
    pub optimizer: OptimizerKind,
}

impl Default for UnlearningConfig {
    fn default() -> Self {
        UnlearningConfig {
            w_forget: 0.25,
            w_mismatch: 0.0,
            w_preserve: 1.0,
            learning_rate: 2e-4,
            max_steps: 1000,
            batch_size: 4,
            kl_alarm_threshold: 0.5,
            seed: 0,
            checkpoint_every: None,
            optimizer: OptimizerKind::default(),
        }
    }
}

impl UnlearningConfig {
    pub fn with_weights(mut self, forget: f64, mismatch: f64, preserve: f64) -> Self {
        self.w_forget = forget;
        self.w_mismatch = mismatch;
        self.w_preserve = preserve;
        self
    }

    pub fn weights(&self) -> [f64; 3] {
        [self.w_forget, self.w_mismatch, self.w_preserve]
    }

    pub fn validate(&self) -> Result<(), UnlearnError> {
        let w = self.weights();
        if w.iter().any(|x| !x.is_finite() || *x < 0.0) {
            return Err(UnlearnError::Config("loss weights must be finite and non-negative".into()));
        }
        if w.iter().all(|x| *x == 0.0) {
            return Err(UnlearnError::Config("at least one loss weight must be positive".into()));
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(UnlearnError::Config("learning rate must be positive".into()));
        }
        if self.batch_size == 0 {
            return Err(UnlearnError::Config("batch size must be positive".into()));
        }
        if !(self.kl_alarm_threshold.is_finite() && self.kl_alarm_threshold > 0.0) {
            return Err(UnlearnError::Config("KL alarm threshold must be positive".into()));
        }
        if self.checkpoint_every == Some(0) {
            return Err(UnlearnError::Config("checkpoint interval must be positive".into()));
        }
        Ok(())
    }
}

/// Parse `"0.25,0,1"`.
pub fn parse_weights(s: &str) -> Result<[f64; 3], String> {
    let parts: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|e| format!("{p:?}: {e}")))
        .collect::<Result<_, _>>()?;
    <[f64; 3]>::try_from(parts).map_err(|v| format!("expected 3 weights, got {}", v.len()))
}
