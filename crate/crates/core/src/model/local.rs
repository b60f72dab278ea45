//! Trainable model stored as a weights directory (`model.json`).

use std::fs;
use std::path::{Path, PathBuf};

use rand::distributions::{Distribution, WeightedIndex};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::vocab::UNK;
use super::{
    validate_request, Backend, Capability, GenerationParams, LanguageModel, ModelError, ModelInfo,
    ModelKind, NeuralLm, NeuralLmConfig, TrainableLm, Vocab,
};
use crate::scalar::softmax;

pub const MODEL_FILE: &str = "model.json";
pub const DEFAULT_CONTEXT_LIMIT: usize = 4096;

#[derive(Serialize, Deserialize)]
struct ModelFile {
    model_id: String,
    kind: ModelKind,
    context_limit: usize,
    config: NeuralLmConfig,
    vocab: Vocab,
    params: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LocalModel {
    info: ModelInfo,
    pub lm: NeuralLm<f64>,
}

impl LocalModel {
    pub fn new(model_id: impl Into<String>, kind: ModelKind, lm: NeuralLm<f64>) -> Self {
        LocalModel {
            info: ModelInfo {
                model_id: model_id.into(),
                kind,
                capability: Capability::Trainable,
                context_limit: DEFAULT_CONTEXT_LIMIT,
                backend: Backend::Memory,
            },
            lm,
        }
    }

    pub fn info(&self) -> &ModelInfo {
        &self.info
    }

    pub fn load(dir: &Path) -> Result<Self, ModelError> {
        let path = dir.join(MODEL_FILE);
        let bad = |reason: String| ModelError::Format {
            path: path.display().to_string(),
            reason,
        };
        let raw = fs::read_to_string(&path)?;
        let file: ModelFile = serde_json::from_str(&raw).map_err(|e| bad(e.to_string()))?;
        let lm = NeuralLm::from_parts(file.vocab, file.config, file.params)
            .ok_or_else(|| bad("parameter count does not match config".into()))?;
        Ok(LocalModel {
            info: ModelInfo {
                model_id: file.model_id,
                kind: file.kind,
                capability: Capability::Trainable,
                context_limit: file.context_limit,
                backend: Backend::Local {
                    path: dir.to_path_buf(),
                },
            },
            lm,
        })
    }

    pub fn save(&self, dir: &Path) -> Result<PathBuf, ModelError> {
        fs::create_dir_all(dir)?;
        let file = ModelFile {
            model_id: self.info.model_id.clone(),
            kind: self.info.kind,
            context_limit: self.info.context_limit,
            config: self.lm.config(),
            vocab: self.lm.vocab().clone(),
            params: self.lm.params().to_vec(),
        };
        let path = dir.join(MODEL_FILE);
        let json = serde_json::to_string(&file).map_err(std::io::Error::from)?;
        fs::write(&path, json)?;
        Ok(path)
    }
}

impl LanguageModel for LocalModel {
    fn info(&self) -> &ModelInfo {
        &self.info
    }

    /// Greedy decoding at temperature 0, seeded sampling otherwise. Stops at
    /// `max_new_tokens` or after the first sentence terminator.
    fn generate(
        &self,
        system_prompt: Option<&str>,
        prompt: &str,
        params: &GenerationParams,
    ) -> Result<String, ModelError> {
        validate_request(&self.info, system_prompt, prompt)?;
        let vocab = self.lm.vocab();
        let mut context: Vec<u32> = Vec::new();
        if let Some(s) = system_prompt {
            context.extend(vocab.encode(s));
        }
        context.extend(vocab.encode(prompt));
        let prompt_len = context.len();
        let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
        for _ in 0..params.max_new_tokens {
            let mut logits = self.lm.next_logits(&context);
            // Never emit the special tokens.
            logits[UNK as usize] = f64::NEG_INFINITY;
            logits[super::BOS as usize] = f64::NEG_INFINITY;
            let next = if params.temperature <= 0.0 {
                logits
                    .iter()
                    .enumerate()
                    .max_by(|a, b| a.1.total_cmp(b.1).then(b.0.cmp(&a.0)))
                    .map(|(i, _)| i as u32)
                    .expect("non-empty vocabulary")
            } else {
                let scaled: Vec<f64> = logits.iter().map(|l| l / params.temperature).collect();
                let probs = softmax(&scaled);
                let dist = WeightedIndex::new(&probs)
                    .map_err(|e| ModelError::Protocol(format!("sampling: {e}")))?;
                dist.sample(&mut rng) as u32
            };
            context.push(next);
            if matches!(vocab.word(next), "." | "?" | "!") {
                break;
            }
        }
        Ok(vocab.decode(&context[prompt_len..]))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model() -> LocalModel {
        let vocab = Vocab::build(["universal credit is paid monthly ."], 32);
        LocalModel::new("tiny", ModelKind::Base, NeuralLm::new(vocab, NeuralLmConfig::default(), 1))
    }

    #[test]
    fn save_load_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let m = model();
        m.save(dir.path()).unwrap();
        let back = LocalModel::load(dir.path()).unwrap();
        assert_eq!(back.lm, m.lm);
        assert_eq!(back.info().model_id, "tiny");
    }

    #[test]
    fn greedy_generation_is_deterministic() {
        let m = model();
        let p = GenerationParams {
            max_new_tokens: 8,
            ..Default::default()
        };
        let a = m.generate(None, "2 + 2 =", &p).unwrap();
        assert!(!a.is_empty());
        assert_eq!(a, m.generate(None, "2 + 2 =", &p).unwrap());
    }

    #[test]
    fn context_overflow() {
        let mut m = model();
        m.info.context_limit = 3;
        let r = m.generate(None, "one two three four", &GenerationParams::default());
        assert!(matches!(r, Err(ModelError::ContextOverflow { tokens: 4, limit: 3 })));
    }
}
