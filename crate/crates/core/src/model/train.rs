//! Plain next-token training, used to build the fixture model that the
//! unlearning engine later ablates.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::loss::{cross_entropy, Scored};
use super::{apply_gradient_step, ModelError, Optimizer, OptimizerKind, TrainableLm};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PretrainConfig {
    pub steps: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for PretrainConfig {
    fn default() -> Self {
        PretrainConfig {
            steps: 600,
            learning_rate: 1e-2,
            batch_size: 8,
            seed: 0,
        }
    }
}

/// Minimise cross-entropy on `texts` with Adam, sampling batches with
/// replacement. Returns the per-step training loss.
pub fn pretrain<T: Scalar, M: TrainableLm<T>>(
    model: &mut M,
    texts: &[&str],
    config: &PretrainConfig,
) -> Result<Vec<T>, ModelError> {
    let seqs: Vec<Scored> = texts
        .iter()
        .map(|t| Scored::full(model.encode(t)))
        .filter(|s| s.scored_len() > 0)
        .collect();
    if seqs.is_empty() {
        return Err(ModelError::EmptyBatch);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut opt = Optimizer::new(OptimizerKind::adam(), model.params().len());
    let lr = T::of(config.learning_rate);
    let mut losses = Vec::with_capacity(config.steps);
    for _ in 0..config.steps {
        let batch: Vec<Scored> = (0..config.batch_size.max(1))
            .map(|_| seqs[rng.gen_range(0..seqs.len())].clone())
            .collect();
        let loss = apply_gradient_step(model, &mut opt, lr, |m, g| {
            cross_entropy(m, &batch, Some((g, T::one())))
        })?;
        losses.push(loss);
    }
    Ok(losses)
}
