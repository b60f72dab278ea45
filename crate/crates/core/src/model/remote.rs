//! OpenAI-compatible HTTP backend (`/v1/completions` for base models,
//! `/v1/chat/completions` for instruct models).

use std::time::Duration;

use reqwest::blocking::Client;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::{
    validate_request, Backend, Capability, GenerationParams, LanguageModel, ModelError, ModelInfo,
    ModelKind,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RemoteConfig {
    pub base_url: String,
    /// Model name sent in the request body.
    pub model: String,
    /// Environment variable holding a bearer token, if the server needs one.
    #[serde(default)]
    pub api_key_env: Option<String>,
    #[serde(default = "default_context")]
    pub context_limit: usize,
    #[serde(default = "default_timeout")]
    pub timeout_secs: u64,
}

fn default_context() -> usize {
    8192
}

fn default_timeout() -> u64 {
    120
}

pub struct RemoteModel {
    info: ModelInfo,
    config: RemoteConfig,
    http: Client,
}

impl RemoteModel {
    pub fn new(model_id: impl Into<String>, kind: ModelKind, config: RemoteConfig) -> Result<Self, ModelError> {
        let http = Client::builder()
            .timeout(Duration::from_secs(config.timeout_secs))
            .build()
            .map_err(|e| ModelError::Unavailable(e.to_string()))?;
        Ok(RemoteModel {
            info: ModelInfo {
                model_id: model_id.into(),
                kind,
                capability: Capability::GenerateOnly,
                context_limit: config.context_limit,
                backend: Backend::Remote {
                    base_url: config.base_url.clone(),
                },
            },
            config,
            http,
        })
    }

    fn endpoint(&self, path: &str) -> String {
        let base = self.config.base_url.trim_end_matches('/');
        if base.ends_with("/v1") {
            format!("{base}/{path}")
        } else {
            format!("{base}/v1/{path}")
        }
    }
}

impl LanguageModel for RemoteModel {
    fn info(&self) -> &ModelInfo {
        &self.info
    }

    fn generate(
        &self,
        system_prompt: Option<&str>,
        prompt: &str,
        params: &GenerationParams,
    ) -> Result<String, ModelError> {
        validate_request(&self.info, system_prompt, prompt)?;
        let (url, body) = match self.info.kind {
            ModelKind::Base => (
                self.endpoint("completions"),
                json!({
                    "model": self.config.model,
                    "prompt": prompt,
                    "max_tokens": params.max_new_tokens,
                    "temperature": params.temperature,
                    "seed": params.seed,
                }),
            ),
            ModelKind::Instruct => {
                let mut messages = Vec::new();
                if let Some(s) = system_prompt {
                    messages.push(json!({"role": "system", "content": s}));
                }
                messages.push(json!({"role": "user", "content": prompt}));
                (
                    self.endpoint("chat/completions"),
                    json!({
                        "model": self.config.model,
                        "messages": messages,
                        "max_tokens": params.max_new_tokens,
                        "temperature": params.temperature,
                        "seed": params.seed,
                    }),
                )
            }
        };
        let mut req = self.http.post(&url).json(&body);
        if let Some(var) = &self.config.api_key_env {
            if let Ok(token) = std::env::var(var) {
                req = req.bearer_auth(token);
            }
        }
        let resp = req
            .send()
            .map_err(|e| ModelError::Unavailable(e.to_string()))?;
        let status = resp.status();
        if status.is_server_error() || status.as_u16() == 429 {
            return Err(ModelError::Unavailable(format!("{url}: HTTP {status}")));
        }
        if !status.is_success() {
            return Err(ModelError::Protocol(format!("{url}: HTTP {status}")));
        }
        let v: Value = resp
            .json()
            .map_err(|e| ModelError::Protocol(e.to_string()))?;
        let choice = &v["choices"][0];
        let text = match self.info.kind {
            ModelKind::Base => choice["text"].as_str(),
            ModelKind::Instruct => choice["message"]["content"].as_str(),
        };
        text.map(str::to_string)
            .ok_or_else(|| ModelError::Protocol(format!("no completion text in response from {url}")))
    }
}
