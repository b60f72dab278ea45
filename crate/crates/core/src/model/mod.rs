//! Uniform access to language models in two capability tiers.
//!
//! Every backend implements [`LanguageModel`] (generation). Only the local
//! [`NeuralLm`] weights are [`TrainableLm`], which is what the unlearning
//! engine needs; [`ModelHandle`] enforces the split at runtime.

pub mod local;
pub mod loss;
mod neural;
pub mod optim;
pub mod remote;
pub mod scripted;
mod spec;
mod toy;
pub mod train;
mod vocab;

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::corpus::{Tokenizer, WordTokenizer};
use crate::scalar::Scalar;

pub use local::LocalModel;
pub use loss::Scored;
pub use neural::{NeuralLm, NeuralLmConfig};
pub use optim::{apply_gradient_step, Optimizer, OptimizerKind};
pub use remote::{RemoteConfig, RemoteModel};
pub use scripted::{ScriptRule, ScriptedModel};
pub use spec::{open_generator, open_model, BackendSpec, ModelSpec};
pub use toy::BigramLm;
pub use vocab::{Vocab, BOS, UNK};

#[derive(Debug, thiserror::Error)]
pub enum ModelError {
    #[error("prompt has {tokens} tokens, context limit is {limit}")]
    ContextOverflow { tokens: usize, limit: usize },
    #[error("backend unavailable (retriable): {0}")]
    Unavailable(String),
    #[error("capability violation: {0}")]
    Capability(String),
    #[error("numerical divergence")]
    Divergence,
    #[error("empty batch")]
    EmptyBatch,
    #[error("bad backend response: {0}")]
    Protocol(String),
    #[error("invalid model file {path}: {reason}")]
    Format { path: String, reason: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl ModelError {
    pub fn is_retriable(&self) -> bool {
        matches!(self, ModelError::Unavailable(_))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Base,
    Instruct,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Capability {
    GenerateOnly,
    Trainable,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Backend {
    Local { path: PathBuf },
    Remote { base_url: String },
    Scripted { path: PathBuf },
    Memory,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelInfo {
    pub model_id: String,
    pub kind: ModelKind,
    pub capability: Capability,
    pub context_limit: usize,
    pub backend: Backend,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GenerationParams {
    pub max_new_tokens: usize,
    pub temperature: f64,
    pub seed: u64,
}

impl Default for GenerationParams {
    fn default() -> Self {
        GenerationParams {
            max_new_tokens: 256,
            temperature: 0.0,
            seed: 0,
        }
    }
}

/// Generation-only access, implemented by every backend.
pub trait LanguageModel: Send + Sync {
    fn info(&self) -> &ModelInfo;

    /// Continuation (base) or assistant reply (instruct); never includes the
    /// prompt itself.
    fn generate(
        &self,
        system_prompt: Option<&str>,
        prompt: &str,
        params: &GenerationParams,
    ) -> Result<String, ModelError>;
}

/// Shared request validation: system prompts only for instruct models, and
/// the prompt must fit the context window (counted in word tokens).
pub fn validate_request(
    info: &ModelInfo,
    system_prompt: Option<&str>,
    prompt: &str,
) -> Result<(), ModelError> {
    if system_prompt.is_some() && info.kind == ModelKind::Base {
        return Err(ModelError::Capability(format!(
            "{} is a base model and does not accept a system prompt",
            info.model_id
        )));
    }
    let tokens = WordTokenizer.count(prompt).unwrap_or(0)
        + system_prompt.map_or(0, |s| WordTokenizer.count(s).unwrap_or(0));
    if tokens > info.context_limit {
        return Err(ModelError::ContextOverflow {
            tokens,
            limit: info.context_limit,
        });
    }
    Ok(())
}

/// Forward pass output: logits (`positions × vocab`, row `i` predicting token
/// `i` from tokens `..i`) plus a model-specific cache used by `backward`.
#[derive(Debug, Clone)]
pub struct Activations<T> {
    pub logits: Vec<T>,
    pub cache: Vec<T>,
}

/// A model whose parameters can be differentiated and updated.
pub trait TrainableLm<T: Scalar>: Clone + Send + Sync {
    fn vocab(&self) -> &Vocab;
    fn params(&self) -> &[T];
    fn params_mut(&mut self) -> &mut [T];
    fn forward(&self, tokens: &[u32]) -> Activations<T>;
    /// Accumulate `d(loss)/d(params)` into `grad` given `d(loss)/d(logits)`.
    fn backward(&self, tokens: &[u32], acts: &Activations<T>, dlogits: &[T], grad: &mut [T]);

    fn encode(&self, text: &str) -> Vec<u32> {
        self.vocab().encode(text)
    }
}

/// Mean per-token cross-entropy (nats) over a batch of texts.
pub fn sequence_loss<T: Scalar, M: TrainableLm<T>>(
    model: &M,
    text_batch: &[&str],
) -> Result<T, ModelError> {
    if text_batch.is_empty() {
        return Err(ModelError::EmptyBatch);
    }
    let seqs: Vec<Scored> = text_batch
        .iter()
        .map(|t| Scored::full(model.encode(t)))
        .collect();
    loss::cross_entropy(model, &seqs, None)
}

/// Next-token distributions at every position of every text.
pub fn next_token_distributions<T: Scalar, M: TrainableLm<T>>(
    model: &M,
    text_batch: &[&str],
) -> Result<Vec<Vec<Vec<T>>>, ModelError> {
    if text_batch.is_empty() {
        return Err(ModelError::EmptyBatch);
    }
    let out: Vec<Vec<Vec<T>>> = text_batch
        .iter()
        .map(|t| loss::distributions(model, &model.encode(t)))
        .collect();
    let finite = out.iter().flatten().flatten().all(|p| p.is_finite());
    if !finite {
        return Err(ModelError::Divergence);
    }
    Ok(out)
}

/// A model in one of the two capability tiers.
pub enum ModelHandle {
    GenerateOnly(Box<dyn LanguageModel>),
    Trainable(LocalModel),
}

impl ModelHandle {
    pub fn info(&self) -> &ModelInfo {
        match self {
            ModelHandle::GenerateOnly(m) => m.info(),
            ModelHandle::Trainable(m) => m.info(),
        }
    }

    pub fn generate(
        &self,
        system_prompt: Option<&str>,
        prompt: &str,
        params: &GenerationParams,
    ) -> Result<String, ModelError> {
        self.as_language_model().generate(system_prompt, prompt, params)
    }

    pub fn as_language_model(&self) -> &dyn LanguageModel {
        match self {
            ModelHandle::GenerateOnly(m) => m.as_ref(),
            ModelHandle::Trainable(m) => m,
        }
    }

    pub fn trainable(&self) -> Result<&LocalModel, ModelError> {
        match self {
            ModelHandle::Trainable(m) => Ok(m),
            ModelHandle::GenerateOnly(m) => Err(Self::not_trainable(m.info())),
        }
    }

    pub fn trainable_mut(&mut self) -> Result<&mut LocalModel, ModelError> {
        match self {
            ModelHandle::Trainable(m) => Ok(m),
            ModelHandle::GenerateOnly(m) => Err(Self::not_trainable(m.info())),
        }
    }

    pub fn into_trainable(self) -> Result<LocalModel, ModelError> {
        match self {
            ModelHandle::Trainable(m) => Ok(m),
            ModelHandle::GenerateOnly(m) => Err(Self::not_trainable(m.info())),
        }
    }

    pub fn sequence_loss(&self, text_batch: &[&str]) -> Result<f64, ModelError> {
        sequence_loss(&self.trainable()?.lm, text_batch)
    }

    pub fn next_token_distributions(
        &self,
        text_batch: &[&str],
    ) -> Result<Vec<Vec<Vec<f64>>>, ModelError> {
        next_token_distributions(&self.trainable()?.lm, text_batch)
    }

    fn not_trainable(info: &ModelInfo) -> ModelError {
        ModelError::Capability(format!(
            "{} is generate-only and cannot be trained",
            info.model_id
        ))
    }
}
