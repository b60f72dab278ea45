//! Small feed-forward word-level language model with hand-written backprop.
//!
//! Each position is predicted from a fixed window of previous tokens:
//! embeddings are concatenated, passed through one `tanh` hidden layer and
//! projected to vocabulary logits.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::vocab::{Vocab, BOS};
use super::{Activations, TrainableLm};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct NeuralLmConfig {
    pub context: usize,
    pub embed_dim: usize,
    pub hidden: usize,
}

impl Default for NeuralLmConfig {
    fn default() -> Self {
        NeuralLmConfig {
            context: 3,
            embed_dim: 16,
            hidden: 48,
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Layout {
    v: usize,
    n: usize,
    d: usize,
    h: usize,
    emb: usize,
    w1: usize,
    b1: usize,
    u: usize,
    c: usize,
    total: usize,
}

impl Layout {
    fn new(v: usize, cfg: NeuralLmConfig) -> Self {
        let (n, d, h) = (cfg.context, cfg.embed_dim, cfg.hidden);
        let emb = 0;
        let w1 = emb + v * d;
        let b1 = w1 + h * n * d;
        let u = b1 + h;
        let c = u + v * h;
        let total = c + v;
        Layout { v, n, d, h, emb, w1, b1, u, c, total }
    }

    fn input_dim(&self) -> usize {
        self.n * self.d
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NeuralLm<T> {
    config: NeuralLmConfig,
    vocab: Vocab,
    params: Vec<T>,
}

impl<T: Scalar> NeuralLm<T> {
    /// Randomly initialised model (uniform fan-in scaling, zero biases).
    pub fn new(vocab: Vocab, config: NeuralLmConfig, seed: u64) -> Self {
        let l = Layout::new(vocab.len(), config);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut params = vec![T::zero(); l.total];
        let mut fill = |range: std::ops::Range<usize>, scale: f64| {
            for p in &mut params[range] {
                *p = T::of(rng.gen_range(-scale..scale));
            }
        };
        fill(l.emb..l.w1, 0.5);
        fill(l.w1..l.b1, 1.0 / (l.input_dim() as f64).sqrt());
        fill(l.u..l.c, 1.0 / (l.h as f64).sqrt());
        NeuralLm { config, vocab, params }
    }

    pub fn from_parts(vocab: Vocab, config: NeuralLmConfig, params: Vec<T>) -> Option<Self> {
        (Layout::new(vocab.len(), config).total == params.len()).then_some(NeuralLm {
            config,
            vocab,
            params,
        })
    }

    pub fn config(&self) -> NeuralLmConfig {
        self.config
    }

    fn layout(&self) -> Layout {
        Layout::new(self.vocab.len(), self.config)
    }

    fn context_ids(&self, tokens: &[u32], pos: usize) -> Vec<u32> {
        let n = self.config.context;
        (0..n)
            .map(|j| {
                let back = n - j;
                if pos >= back {
                    tokens[pos - back]
                } else {
                    BOS
                }
            })
            .collect()
    }

    /// Logits for the token following `prefix`.
    pub fn next_logits(&self, prefix: &[u32]) -> Vec<T> {
        let mut seq = prefix.to_vec();
        seq.push(0);
        let acts = self.forward(&seq);
        let v = self.vocab.len();
        acts.logits[(seq.len() - 1) * v..].to_vec()
    }
}

impl<T: Scalar> TrainableLm<T> for NeuralLm<T> {
    fn vocab(&self) -> &Vocab {
        &self.vocab
    }

    fn params(&self) -> &[T] {
        &self.params
    }

    fn params_mut(&mut self) -> &mut [T] {
        &mut self.params
    }

    // Cache layout per position: input x (n*d) then hidden h (h).
    fn forward(&self, tokens: &[u32]) -> Activations<T> {
        let l = self.layout();
        let p = &self.params;
        let ind = l.input_dim();
        let stride = ind + l.h;
        let mut logits = vec![T::zero(); tokens.len() * l.v];
        let mut cache = vec![T::zero(); tokens.len() * stride];
        for pos in 0..tokens.len() {
            let ctx = self.context_ids(tokens, pos);
            let (x, h) = cache[pos * stride..(pos + 1) * stride].split_at_mut(ind);
            for (j, &tok) in ctx.iter().enumerate() {
                let e = l.emb + tok as usize * l.d;
                x[j * l.d..(j + 1) * l.d].copy_from_slice(&p[e..e + l.d]);
            }
            for (k, hk) in h.iter_mut().enumerate() {
                let row = &p[l.w1 + k * ind..l.w1 + (k + 1) * ind];
                let a: T = row.iter().zip(x.iter()).map(|(&w, &xi)| w * xi).sum::<T>() + p[l.b1 + k];
                *hk = a.tanh();
            }
            let out = &mut logits[pos * l.v..(pos + 1) * l.v];
            for (vi, o) in out.iter_mut().enumerate() {
                let row = &p[l.u + vi * l.h..l.u + (vi + 1) * l.h];
                *o = row.iter().zip(h.iter()).map(|(&w, &hk)| w * hk).sum::<T>() + p[l.c + vi];
            }
        }
        Activations { logits, cache }
    }

    fn backward(&self, tokens: &[u32], acts: &Activations<T>, dlogits: &[T], grad: &mut [T]) {
        let l = self.layout();
        let p = &self.params;
        let ind = l.input_dim();
        let stride = ind + l.h;
        let mut dh = vec![T::zero(); l.h];
        let mut dx = vec![T::zero(); ind];
        for pos in 0..tokens.len() {
            let dl = &dlogits[pos * l.v..(pos + 1) * l.v];
            if dl.iter().all(|g| g.is_zero()) {
                continue;
            }
            let x = &acts.cache[pos * stride..pos * stride + ind];
            let h = &acts.cache[pos * stride + ind..(pos + 1) * stride];
            dh.iter_mut().for_each(|g| *g = T::zero());
            for (vi, &g) in dl.iter().enumerate() {
                if g.is_zero() {
                    continue;
                }
                grad[l.c + vi] += g;
                let urow = l.u + vi * l.h;
                for k in 0..l.h {
                    grad[urow + k] += g * h[k];
                    dh[k] += g * p[urow + k];
                }
            }
            dx.iter_mut().for_each(|g| *g = T::zero());
            for k in 0..l.h {
                let da = dh[k] * (T::one() - h[k] * h[k]);
                if da.is_zero() {
                    continue;
                }
                grad[l.b1 + k] += da;
                let wrow = l.w1 + k * ind;
                for i in 0..ind {
                    grad[wrow + i] += da * x[i];
                    dx[i] += da * p[wrow + i];
                }
            }
            let ctx = self.context_ids(tokens, pos);
            for (j, &tok) in ctx.iter().enumerate() {
                let e = l.emb + tok as usize * l.d;
                for i in 0..l.d {
                    grad[e + i] += dx[j * l.d + i];
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parameter_count_matches_layout() {
        let vocab = Vocab::build(["a b c d"], 100);
        let cfg = NeuralLmConfig {
            context: 2,
            embed_dim: 3,
            hidden: 4,
        };
        let m: NeuralLm<f64> = NeuralLm::new(vocab.clone(), cfg, 1);
        let v = vocab.len();
        assert_eq!(m.params().len(), v * 3 + 4 * 6 + 4 + v * 4 + v);
        assert!(NeuralLm::<f64>::from_parts(vocab, cfg, vec![0.0; 3]).is_none());
    }

    #[test]
    fn same_seed_same_weights_f32() {
        let vocab = Vocab::build(["a b c d"], 100);
        let a: NeuralLm<f32> = NeuralLm::new(vocab.clone(), NeuralLmConfig::default(), 7);
        let b: NeuralLm<f32> = NeuralLm::new(vocab, NeuralLmConfig::default(), 7);
        assert_eq!(a, b);
    }
}
