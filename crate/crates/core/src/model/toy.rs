//! Bigram logit table: the smallest trainable double. Every parameter is a
//! plain scalar logit, which keeps finite-difference checks cheap.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::vocab::{Vocab, BOS};
use super::{Activations, TrainableLm};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub struct BigramLm<T> {
    vocab: Vocab,
    /// `vocab × vocab`, row = previous token.
    logits: Vec<T>,
}

impl<T: Scalar> BigramLm<T> {
    pub fn new(vocab: Vocab, seed: u64) -> Self {
        let v = vocab.len();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let logits = (0..v * v).map(|_| T::of(rng.gen_range(-1.0..1.0))).collect();
        BigramLm { vocab, logits }
    }
}

impl<T: Scalar> TrainableLm<T> for BigramLm<T> {
    fn vocab(&self) -> &Vocab {
        &self.vocab
    }

    fn params(&self) -> &[T] {
        &self.logits
    }

    fn params_mut(&mut self) -> &mut [T] {
        &mut self.logits
    }

    fn forward(&self, tokens: &[u32]) -> Activations<T> {
        let v = self.vocab.len();
        let mut logits = Vec::with_capacity(tokens.len() * v);
        for pos in 0..tokens.len() {
            let prev = if pos == 0 { BOS } else { tokens[pos - 1] } as usize;
            logits.extend_from_slice(&self.logits[prev * v..(prev + 1) * v]);
        }
        Activations {
            logits,
            cache: Vec::new(),
        }
    }

    fn backward(&self, tokens: &[u32], _acts: &Activations<T>, dlogits: &[T], grad: &mut [T]) {
        let v = self.vocab.len();
        for pos in 0..tokens.len() {
            let prev = if pos == 0 { BOS } else { tokens[pos - 1] } as usize;
            for (g, &d) in grad[prev * v..(prev + 1) * v]
                .iter_mut()
                .zip(&dlogits[pos * v..(pos + 1) * v])
            {
                *g += d;
            }
        }
    }
}
