//! The three-term unlearning objective.
//!
//! ```text
//! objective = w_forget   * forget_term      (forget_term   = -CE(current, target))
//!           + w_mismatch * mismatch_term    (mismatch_term =  CE(current, target prompt -> distractor))
//!           + w_preserve * preserve_term    (preserve_term =  KL(reference || current) on safe text)
//! ```
//!
//! Descending it raises the loss on target text while penalising drift of
//! the safe-text next-token distributions away from the frozen reference.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{UnlearnError, UnlearningConfig};
use crate::model::loss::{cross_entropy, kl_from_reference, Scored};
use crate::model::TrainableLm;
use crate::scalar::Scalar;

/// One step's worth of sampled sequences.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Batches {
    pub target: Vec<Scored>,
    /// Target prompts followed by distractor continuations; only the
    /// continuation positions are scored.
    pub mismatch: Vec<Scored>,
    pub safe: Vec<Scored>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveValue<T> {
    pub objective: T,
    pub forget_term: T,
    pub mismatch_term: T,
    pub preserve_term: T,
}

impl<T: Scalar> ObjectiveValue<T> {
    /// Cross-entropy on the target batch (the negated forget term).
    pub fn target_loss(&self) -> T {
        -self.forget_term
    }
}

/// Evaluate the objective and, when `grad` is given, add its gradient with
/// respect to `current`'s parameters. Zero-weight terms are still evaluated
/// (for telemetry) but contribute no gradient.
pub fn unlearning_objective<T: Scalar, M: TrainableLm<T>>(
    current: &M,
    reference: &M,
    batches: &Batches,
    config: &UnlearningConfig,
    mut grad: Option<&mut [T]>,
) -> Result<ObjectiveValue<T>, UnlearnError> {
    let [wf, wm, wp] = config.weights().map(T::of);

    // d(-CE)/dθ scaled by w_forget is -w_forget * dCE/dθ.
    let target_ce = cross_entropy(current, &batches.target, with(&mut grad, -wf))?;
    let forget_term = -target_ce;

    let mismatch_term = if batches.mismatch.iter().any(|s| s.scored_len() > 0) {
        cross_entropy(current, &batches.mismatch, with(&mut grad, wm))?
    } else {
        T::zero()
    };

    let preserve_term = kl_from_reference(current, reference, &batches.safe, with(&mut grad, wp))?;

    let objective = wf * forget_term + wm * mismatch_term + wp * preserve_term;
    let value = ObjectiveValue {
        objective,
        forget_term,
        mismatch_term,
        preserve_term,
    };
    if [objective, forget_term, mismatch_term, preserve_term]
        .iter()
        .any(|v| !v.is_finite())
    {
        return Err(UnlearnError::NonFinite("objective component"));
    }
    Ok(value)
}

fn with<'a, T: Scalar>(g: &'a mut Option<&mut [T]>, w: T) -> Option<(&'a mut [T], T)> {
    if w.is_zero() {
        None
    } else {
        g.as_deref_mut().map(|g| (g, w))
    }
}

/// Seeded with-replacement sampler over tokenised chunks.
pub struct BatchSampler {
    target: Vec<Vec<u32>>,
    safe: Vec<Vec<u32>>,
}

impl BatchSampler {
    pub fn new(target: Vec<Vec<u32>>, safe: Vec<Vec<u32>>) -> Result<Self, UnlearnError> {
        let target: Vec<_> = target.into_iter().filter(|t| !t.is_empty()).collect();
        let safe: Vec<_> = safe.into_iter().filter(|t| !t.is_empty()).collect();
        if target.is_empty() {
            return Err(UnlearnError::EmptyCorpus("target"));
        }
        if safe.is_empty() {
            return Err(UnlearnError::EmptyCorpus("safe"));
        }
        Ok(BatchSampler { target, safe })
    }

    pub fn target_chunks(&self) -> &[Vec<u32>] {
        &self.target
    }

    pub fn safe_chunks(&self) -> &[Vec<u32>] {
        &self.safe
    }

    /// Draw `batch_size` target and safe chunks. Mismatch pairs (the first
    /// half of each target chunk followed by a random safe chunk) are built
    /// only when `with_mismatch` is set.
    pub fn sample<R: Rng>(&self, rng: &mut R, batch_size: usize, with_mismatch: bool) -> Batches {
        let target: Vec<&Vec<u32>> = (0..batch_size)
            .map(|_| &self.target[rng.gen_range(0..self.target.len())])
            .collect();
        let safe: Vec<Scored> = (0..batch_size)
            .map(|_| Scored::full(self.safe[rng.gen_range(0..self.safe.len())].clone()))
            .collect();
        let mismatch = if with_mismatch {
            target
                .iter()
                .map(|t| {
                    let prompt_len = (t.len() / 2).max(1);
                    let distractor = &self.safe[rng.gen_range(0..self.safe.len())];
                    let keep = (t.len() - prompt_len).max(1).min(distractor.len());
                    let mut tokens = t[..prompt_len].to_vec();
                    tokens.extend_from_slice(&distractor[..keep]);
                    Scored {
                        tokens,
                        from: prompt_len,
                    }
                })
                .collect()
        } else {
            Vec::new()
        };
        Batches {
            target: target.into_iter().map(|t| Scored::full(t.clone())).collect(),
            mismatch,
            safe,
        }
    }
}
