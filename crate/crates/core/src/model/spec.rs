use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{
    LanguageModel, LocalModel, ModelError, ModelHandle, ModelKind, RemoteConfig, RemoteModel,
    ScriptedModel,
};

/// Where a configured model lives.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "backend", rename_all = "lowercase")]
pub enum BackendSpec {
    Local { path: PathBuf },
    Scripted { path: PathBuf },
    Remote(RemoteConfig),
}

/// A model entry in a models config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub id: String,
    pub kind: ModelKind,
    #[serde(flatten)]
    pub backend: BackendSpec,
}

impl ModelSpec {
    /// Open the model. Relative paths resolve against `base_dir`.
    pub fn open(&self, base_dir: &Path) -> Result<ModelHandle, ModelError> {
        let resolve = |p: &Path| {
            if p.is_absolute() {
                p.to_path_buf()
            } else {
                base_dir.join(p)
            }
        };
        Ok(match &self.backend {
            BackendSpec::Local { path } => ModelHandle::Trainable(LocalModel::load(&resolve(path))?),
            BackendSpec::Scripted { path } => {
                ModelHandle::GenerateOnly(Box::new(ScriptedModel::load(&resolve(path))?))
            }
            BackendSpec::Remote(cfg) => {
                ModelHandle::GenerateOnly(Box::new(RemoteModel::new(&self.id, self.kind, cfg.clone())?))
            }
        })
    }
}

fn parse_spec(path: &Path) -> Result<ModelSpec, ModelError> {
    let raw = std::fs::read_to_string(path)?;
    let bad = |reason: String| ModelError::Format {
        path: path.display().to_string(),
        reason,
    };
    if path.extension().is_some_and(|e| e == "toml") {
        toml::from_str(&raw).map_err(|e| bad(e.to_string()))
    } else {
        serde_json::from_str(&raw).map_err(|e| bad(e.to_string()))
    }
}

/// Open a model from a CLI argument: a weights directory, a scripted
/// response file (JSON with `default`), or a [`ModelSpec`] file.
pub fn open_model(arg: &str) -> Result<ModelHandle, ModelError> {
    let path = Path::new(arg);
    if path.is_dir() {
        return Ok(ModelHandle::Trainable(LocalModel::load(path)?));
    }
    let base = path.parent().unwrap_or(Path::new("."));
    if path.extension().is_some_and(|e| e == "json") {
        let raw = std::fs::read_to_string(path)?;
        let v: serde_json::Value = serde_json::from_str(&raw).map_err(|e| ModelError::Format {
            path: arg.to_string(),
            reason: e.to_string(),
        })?;
        if v.get("default").is_some() {
            return Ok(ModelHandle::GenerateOnly(Box::new(ScriptedModel::load(path)?)));
        }
    }
    parse_spec(path)?.open(base)
}

/// Convenience for callers that only generate.
pub fn open_generator(arg: &str) -> Result<Box<dyn LanguageModel>, ModelError> {
    Ok(match open_model(arg)? {
        ModelHandle::GenerateOnly(m) => m,
        ModelHandle::Trainable(m) => Box::new(m),
    })
}
