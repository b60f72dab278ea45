//! Token-level cross-entropy and KL divergence over any [`TrainableLm`],
//! with gradients accumulated into a caller-owned buffer.

use super::{ModelError, TrainableLm};
use crate::scalar::{log_sum_exp, softmax_into, Scalar};

/// A token sequence of which only positions `from..` contribute to a loss.
/// Earlier positions still condition the later ones.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Scored {
    pub tokens: Vec<u32>,
    pub from: usize,
}

impl Scored {
    pub fn full(tokens: Vec<u32>) -> Self {
        Scored { tokens, from: 0 }
    }

    pub fn scored_len(&self) -> usize {
        self.tokens.len().saturating_sub(self.from)
    }
}

fn count<'a>(seqs: impl IntoIterator<Item = &'a Scored>) -> usize {
    seqs.into_iter().map(Scored::scored_len).sum()
}

/// Mean cross-entropy (nats/token) of `model` over the scored positions.
///
/// When `grad` is given, `weight * d(mean)/d(params)` is added to it.
pub fn cross_entropy<T: Scalar, M: TrainableLm<T>>(
    model: &M,
    seqs: &[Scored],
    grad: Option<(&mut [T], T)>,
) -> Result<T, ModelError> {
    let n = count(seqs);
    if n == 0 {
        return Err(ModelError::EmptyBatch);
    }
    let inv_n = T::one() / T::of(n as f64);
    let v = model.vocab().len();
    let mut total = T::zero();
    let mut grad = grad;
    let mut probs = vec![T::zero(); v];
    for s in seqs {
        let acts = model.forward(&s.tokens);
        let mut dlogits = grad.as_ref().map(|_| vec![T::zero(); acts.logits.len()]);
        for pos in s.from..s.tokens.len() {
            let row = &acts.logits[pos * v..(pos + 1) * v];
            let target = s.tokens[pos] as usize;
            total += log_sum_exp(row) - row[target];
            if let (Some(dl), Some((_, w))) = (dlogits.as_mut(), grad.as_ref()) {
                softmax_into(row, &mut probs);
                let scale = *w * inv_n;
                let out = &mut dl[pos * v..(pos + 1) * v];
                for (o, &p) in out.iter_mut().zip(&probs) {
                    *o = p * scale;
                }
                out[target] -= scale;
            }
        }
        if let (Some(dl), Some((g, _))) = (dlogits, grad.as_mut()) {
            model.backward(&s.tokens, &acts, &dl, g);
        }
    }
    let mean = total * inv_n;
    if !mean.is_finite() {
        return Err(ModelError::Divergence);
    }
    Ok(mean)
}

/// Mean forward KL divergence `KL(reference || current)` (nats/token) of the
/// next-token distributions over the scored positions.
///
/// Gradients flow only into `current`; the reference is treated as fixed.
pub fn kl_from_reference<T: Scalar, M: TrainableLm<T>>(
    current: &M,
    reference: &M,
    seqs: &[Scored],
    grad: Option<(&mut [T], T)>,
) -> Result<T, ModelError> {
    let n = count(seqs);
    if n == 0 {
        return Err(ModelError::EmptyBatch);
    }
    let inv_n = T::one() / T::of(n as f64);
    let v = current.vocab().len();
    let mut total = T::zero();
    let mut grad = grad;
    for s in seqs {
        let cur = current.forward(&s.tokens);
        let refr = reference.forward(&s.tokens);
        let mut dlogits = grad.as_ref().map(|_| vec![T::zero(); cur.logits.len()]);
        for pos in s.from..s.tokens.len() {
            let c = &cur.logits[pos * v..(pos + 1) * v];
            let r = &refr.logits[pos * v..(pos + 1) * v];
            let (lc, lr) = (log_sum_exp(c), log_sum_exp(r));
            let mut kl = T::zero();
            for i in 0..v {
                let log_pr = r[i] - lr;
                let pr = log_pr.exp();
                if pr > T::zero() {
                    kl += pr * (log_pr - (c[i] - lc));
                }
            }
            // Rounding can push an exact zero slightly negative.
            total += kl.max(T::zero());
            if let (Some(dl), Some((_, w))) = (dlogits.as_mut(), grad.as_ref()) {
                let scale = *w * inv_n;
                let out = &mut dl[pos * v..(pos + 1) * v];
                for i in 0..v {
                    out[i] = ((c[i] - lc).exp() - (r[i] - lr).exp()) * scale;
                }
            }
        }
        if let (Some(dl), Some((g, _))) = (dlogits, grad.as_mut()) {
            current.backward(&s.tokens, &cur, &dl, g);
        }
    }
    let mean = total * inv_n;
    if !mean.is_finite() {
        return Err(ModelError::Divergence);
    }
    Ok(mean)
}

/// Per-position next-token probability vectors for one sequence.
pub fn distributions<T: Scalar, M: TrainableLm<T>>(model: &M, tokens: &[u32]) -> Vec<Vec<T>> {
    let v = model.vocab().len();
    let acts = model.forward(tokens);
    acts.logits
        .chunks(v)
        .map(|row| {
            let mut p = vec![T::zero(); v];
            softmax_into(row, &mut p);
            p
        })
        .collect()
}
