use serde::{Deserialize, Serialize};

use super::{ModelError, TrainableLm};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum OptimizerKind {
    Sgd,
    Adam { beta1: f64, beta2: f64, eps: f64 },
}

impl OptimizerKind {
    pub fn adam() -> Self {
        OptimizerKind::Adam {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

impl Default for OptimizerKind {
    fn default() -> Self {
        OptimizerKind::adam()
    }
}

/// First-order optimizer state for one parameter vector.
#[derive(Debug, Clone)]
pub struct Optimizer<T> {
    kind: OptimizerKind,
    m: Vec<T>,
    v: Vec<T>,
    t: i32,
}

impl<T: Scalar> Optimizer<T> {
    pub fn new(kind: OptimizerKind, n_params: usize) -> Self {
        let (m, v) = match kind {
            OptimizerKind::Sgd => (Vec::new(), Vec::new()),
            OptimizerKind::Adam { .. } => (vec![T::zero(); n_params], vec![T::zero(); n_params]),
        };
        Optimizer { kind, m, v, t: 0 }
    }

    /// Move `params` against `grad`.
    pub fn step(&mut self, params: &mut [T], grad: &[T], lr: T) {
        match self.kind {
            OptimizerKind::Sgd => {
                for (p, &g) in params.iter_mut().zip(grad) {
                    *p -= lr * g;
                }
            }
            OptimizerKind::Adam { beta1, beta2, eps } => {
                self.t += 1;
                let (b1, b2, eps) = (T::of(beta1), T::of(beta2), T::of(eps));
                let c1 = T::one() - b1.powi(self.t);
                let c2 = T::one() - b2.powi(self.t);
                for i in 0..params.len() {
                    let g = grad[i];
                    self.m[i] = b1 * self.m[i] + (T::one() - b1) * g;
                    self.v[i] = b2 * self.v[i] + (T::one() - b2) * g * g;
                    let m_hat = self.m[i] / c1;
                    let v_hat = self.v[i] / c2;
                    params[i] -= lr * m_hat / (v_hat.sqrt() + eps);
                }
            }
        }
    }
}

/// Evaluate `objective` (value plus gradient written into the zeroed
/// buffer), then take one descent step. Returns the pre-step value.
///
/// Non-finite values or gradients abort with [`ModelError::Divergence`] and
/// leave the parameters untouched.
pub fn apply_gradient_step<T, M, F>(
    model: &mut M,
    optimizer: &mut Optimizer<T>,
    learning_rate: T,
    objective: F,
) -> Result<T, ModelError>
where
    T: Scalar,
    M: TrainableLm<T>,
    F: FnOnce(&M, &mut [T]) -> Result<T, ModelError>,
{
    let mut grad = vec![T::zero(); model.params().len()];
    let value = objective(model, &mut grad)?;
    if !value.is_finite() || grad.iter().any(|g| !g.is_finite()) {
        return Err(ModelError::Divergence);
    }
    optimizer.step(model.params_mut(), &grad, learning_rate);
    Ok(value)
}
