use serde::{Deserialize, Serialize};

use super::UnlearnError;
use crate::model::{sequence_loss, TrainableLm};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossDelta {
    pub text: String,
    pub loss_pre: f64,
    pub loss_post: f64,
    pub delta: f64,
}

/// Per-text loss before and after, sorted by descending delta (ties keep
/// input order).
pub fn compare_checkpoints<T: Scalar, M: TrainableLm<T>>(
    pre: &M,
    post: &M,
    probe_texts: &[&str],
) -> Result<Vec<LossDelta>, UnlearnError> {
    let mut out = Vec::with_capacity(probe_texts.len());
    for text in probe_texts {
        if pre.encode(text).is_empty() {
            continue;
        }
        let loss_pre = sequence_loss(pre, &[text])?.as_f64();
        let loss_post = sequence_loss(post, &[text])?.as_f64();
        let delta = loss_post - loss_pre;
        if !delta.is_finite() {
            return Err(UnlearnError::NonFinite("loss delta"));
        }
        out.push(LossDelta {
            text: text.to_string(),
            loss_pre,
            loss_post,
            delta,
        });
    }
    out.sort_by(|a, b| b.delta.total_cmp(&a.delta));
    Ok(out)
}
