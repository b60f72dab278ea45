//! Deterministic test double: answers from a fixed prompt/response table.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{
    validate_request, Backend, Capability, GenerationParams, LanguageModel, ModelError, ModelInfo,
    ModelKind,
};

/// Respond with `response` when the prompt contains `contains`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScriptRule {
    pub contains: String,
    pub response: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct ScriptFile {
    model_id: String,
    kind: ModelKind,
    #[serde(default)]
    exact: BTreeMap<String, String>,
    #[serde(default)]
    rules: Vec<ScriptRule>,
    default: String,
    #[serde(default = "default_context")]
    context_limit: usize,
}

fn default_context() -> usize {
    8192
}

/// Lookup order: exact prompt match, then the first matching rule, then the
/// default response.
#[derive(Debug, Clone)]
pub struct ScriptedModel {
    info: ModelInfo,
    exact: BTreeMap<String, String>,
    rules: Vec<ScriptRule>,
    default: String,
}

impl ScriptedModel {
    pub fn new(
        model_id: impl Into<String>,
        kind: ModelKind,
        rules: Vec<ScriptRule>,
        default: impl Into<String>,
    ) -> Self {
        ScriptedModel {
            info: ModelInfo {
                model_id: model_id.into(),
                kind,
                capability: Capability::GenerateOnly,
                context_limit: default_context(),
                backend: Backend::Memory,
            },
            exact: BTreeMap::new(),
            rules,
            default: default.into(),
        }
    }

    pub fn with_exact(mut self, prompt: impl Into<String>, response: impl Into<String>) -> Self {
        self.exact.insert(prompt.into(), response.into());
        self
    }

    pub fn load(path: &Path) -> Result<Self, ModelError> {
        let raw = std::fs::read_to_string(path)?;
        let f: ScriptFile = serde_json::from_str(&raw).map_err(|e| ModelError::Format {
            path: path.display().to_string(),
            reason: e.to_string(),
        })?;
        Ok(ScriptedModel {
            info: ModelInfo {
                model_id: f.model_id,
                kind: f.kind,
                capability: Capability::GenerateOnly,
                context_limit: f.context_limit,
                backend: Backend::Scripted {
                    path: path.to_path_buf(),
                },
            },
            exact: f.exact,
            rules: f.rules,
            default: f.default,
        })
    }

    pub fn save(&self, path: &Path) -> Result<(), ModelError> {
        let f = ScriptFile {
            model_id: self.info.model_id.clone(),
            kind: self.info.kind,
            exact: self.exact.clone(),
            rules: self.rules.clone(),
            default: self.default.clone(),
            context_limit: self.info.context_limit,
        };
        let json = serde_json::to_string_pretty(&f).map_err(std::io::Error::from)?;
        std::fs::write(path, json)?;
        Ok(())
    }
}

impl LanguageModel for ScriptedModel {
    fn info(&self) -> &ModelInfo {
        &self.info
    }

    fn generate(
        &self,
        system_prompt: Option<&str>,
        prompt: &str,
        _params: &GenerationParams,
    ) -> Result<String, ModelError> {
        validate_request(&self.info, system_prompt, prompt)?;
        if let Some(r) = self.exact.get(prompt) {
            return Ok(r.clone());
        }
        Ok(self
            .rules
            .iter()
            .find(|r| prompt.contains(&r.contains))
            .map_or_else(|| self.default.clone(), |r| r.response.clone()))
    }
}
