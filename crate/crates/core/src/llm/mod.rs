//! Chat-completion access with live, record and replay backends.
//!
//! Requests are identified by a [`fingerprint`] over the model id, the
//! temperature and the message list. Recorded responses live in a cassette
//! directory as `{fingerprint}_{sample}.json`, so a pipeline run under replay
//! is a pure function of its inputs and cassettes.

mod cassette;
mod http;

pub use cassette::{Cassette, CassetteStore, RecordingClient, ReplayClient};
pub use http::HttpClient;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::path::PathBuf;
use std::time::Duration;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    System,
    User,
    Assistant,
}

/// Opaque image bytes passed through to the model.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Attachment {
    pub media_type: String,
    #[serde(with = "base64_bytes")]
    pub data: Vec<u8>,
}

mod base64_bytes {
    use base64::engine::general_purpose::STANDARD;
    use base64::Engine;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(bytes: &[u8], s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&STANDARD.encode(bytes))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<u8>, D::Error> {
        let text = String::deserialize(d)?;
        STANDARD.decode(text).map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChatMessage {
    pub role: Role,
    pub content: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub attachments: Vec<Attachment>,
}

impl ChatMessage {
    pub fn system(content: impl Into<String>) -> Self {
        ChatMessage {
            role: Role::System,
            content: content.into(),
            attachments: Vec::new(),
        }
    }

    pub fn user(content: impl Into<String>) -> Self {
        ChatMessage {
            role: Role::User,
            content: content.into(),
            attachments: Vec::new(),
        }
    }

    pub fn assistant(content: impl Into<String>) -> Self {
        ChatMessage {
            role: Role::Assistant,
            content: content.into(),
            attachments: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChatRequest {
    pub model: String,
    pub temperature: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_tokens: Option<u32>,
    pub messages: Vec<ChatMessage>,
}

impl ChatRequest {
    pub fn new(model: impl Into<String>, temperature: f64, messages: Vec<ChatMessage>) -> Self {
        ChatRequest {
            model: model.into(),
            temperature,
            max_tokens: None,
            messages,
        }
    }

    /// A system message may only appear first, and only once.
    pub fn check(&self) -> Result<(), LlmError> {
        let misplaced = self
            .messages
            .iter()
            .enumerate()
            .any(|(i, m)| m.role == Role::System && i > 0);
        if misplaced {
            return Err(LlmError::InvalidRequest(
                "a system message is only allowed as the first message".into(),
            ));
        }
        Ok(())
    }

    /// Canonical JSON used for fingerprints and nearest-match hints; object
    /// keys are sorted and attachments appear as their SHA-256.
    pub fn canonical(&self) -> serde_json::Value {
        let messages: Vec<serde_json::Value> = self
            .messages
            .iter()
            .map(|m| {
                let attachments: Vec<serde_json::Value> = m
                    .attachments
                    .iter()
                    .map(|a| {
                        serde_json::json!({
                            "media_type": a.media_type,
                            "sha256": hex::encode(Sha256::digest(&a.data)),
                        })
                    })
                    .collect();
                serde_json::json!({
                    "role": m.role,
                    "content": m.content,
                    "attachments": attachments,
                })
            })
            .collect();
        serde_json::json!({
            "model": self.model,
            "temperature": self.temperature,
            "messages": messages,
        })
    }
}

/// Hex SHA-256 of the canonical request.
pub fn fingerprint(req: &ChatRequest) -> String {
    // serde_json maps keep keys sorted, so this text is canonical.
    let text = req.canonical().to_string();
    hex::encode(Sha256::digest(text.as_bytes()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Usage {
    #[serde(default)]
    pub prompt_tokens: u64,
    #[serde(default)]
    pub completion_tokens: u64,
    #[serde(default)]
    pub total_tokens: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Backend {
    Live,
    Record,
    #[default]
    Replay,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatResponse {
    pub content: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub usage: Option<Usage>,
    pub backend: Backend,
}

#[derive(Debug, thiserror::Error)]
pub enum LlmError {
    #[error("request failed after {attempts} attempts: {message}")]
    Transport { attempts: u32, message: String },
    #[error("server answered {status}: {body}")]
    Status { status: u16, body: String },
    #[error("unexpected response body: {0}")]
    Decode(String),
    #[error("empty completion")]
    EmptyContent,
    #[error("no cassette for fingerprint {fingerprint} (sample {sample}) in {dir}{}", nearest_hint(.nearest))]
    NoCassette {
        fingerprint: String,
        sample: usize,
        dir: PathBuf,
        nearest: Vec<String>,
    },
    #[error("cassette {path}: {message}")]
    Cassette { path: PathBuf, message: String },
    #[error("invalid request: {0}")]
    InvalidRequest(String),
    #[error("configuration: {0}")]
    Config(String),
}

fn nearest_hint(nearest: &[String]) -> String {
    if nearest.is_empty() {
        String::new()
    } else {
        format!("; nearest stored: {}", nearest.join(", "))
    }
}

/// A chat-completion backend. Implementations are shared across worker
/// threads; results are keyed by sample index, never by completion order.
pub trait ChatClient: Send + Sync {
    /// The `sample`-th completion of `req`.
    fn complete_sample(&self, req: &ChatRequest, sample: usize) -> Result<ChatResponse, LlmError>;

    fn complete(&self, req: &ChatRequest) -> Result<ChatResponse, LlmError> {
        self.complete_sample(req, 0)
    }
}

pub const ENDPOINT_ENV: &str = "SADGEN_ENDPOINT";
pub const API_KEY_ENV: &str = "SADGEN_API_KEY";
pub const MODEL_ENV: &str = "SADGEN_MODEL";

/// LLM part of the pipeline configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LlmSettings {
    pub backend: Backend,
    pub cassette_dir: Option<PathBuf>,
    /// Model id; falls back to the model env var.
    pub model: Option<String>,
    pub endpoint_env: String,
    pub api_key_env: String,
    pub model_env: String,
    /// Generation temperature.
    pub temperature: f64,
    /// Core-component selection temperature.
    pub selection_temperature: f64,
    /// Samples per generation.
    pub samples: usize,
    pub max_tokens: Option<u32>,
    pub timeout_secs: u64,
}

impl Default for LlmSettings {
    fn default() -> Self {
        LlmSettings {
            backend: Backend::Replay,
            cassette_dir: None,
            model: None,
            endpoint_env: ENDPOINT_ENV.into(),
            api_key_env: API_KEY_ENV.into(),
            model_env: MODEL_ENV.into(),
            temperature: 0.7,
            selection_temperature: 0.0,
            samples: 5,
            max_tokens: None,
            timeout_secs: 120,
        }
    }
}

impl LlmSettings {
    pub fn model_id(&self) -> Result<String, LlmError> {
        if let Some(m) = self.model.as_ref().filter(|m| !m.is_empty()) {
            return Ok(m.clone());
        }
        std::env::var(&self.model_env)
            .ok()
            .filter(|m| !m.is_empty())
            .ok_or_else(|| LlmError::Config(format!("no model id: set `model` or ${}", self.model_env)))
    }

    fn cassette_dir(&self) -> Result<&PathBuf, LlmError> {
        self.cassette_dir
            .as_ref()
            .ok_or_else(|| LlmError::Config(format!("{:?} backend needs a cassette_dir", self.backend)))
    }

    /// Client for the configured backend. Replay requires an existing
    /// cassette directory; live and record read endpoint and key from the
    /// environment.
    pub fn build_client(&self) -> Result<Box<dyn ChatClient>, LlmError> {
        match self.backend {
            Backend::Replay => {
                let dir = self.cassette_dir()?;
                if !dir.is_dir() {
                    return Err(LlmError::Config(format!(
                        "cassette directory {} does not exist",
                        dir.display()
                    )));
                }
                Ok(Box::new(ReplayClient::new(CassetteStore::new(dir.clone()))))
            }
            Backend::Live => Ok(Box::new(self.http_client()?)),
            Backend::Record => {
                let dir = self.cassette_dir()?.clone();
                let http = self.http_client()?;
                let mut store = CassetteStore::new(dir);
                if let Some(key) = http.api_key() {
                    store = store.with_secret(key);
                }
                Ok(Box::new(RecordingClient::new(Box::new(http), store)))
            }
        }
    }

    fn http_client(&self) -> Result<HttpClient, LlmError> {
        let endpoint = std::env::var(&self.endpoint_env)
            .ok()
            .filter(|e| !e.is_empty())
            .ok_or_else(|| LlmError::Config(format!("${} is not set", self.endpoint_env)))?;
        let key = std::env::var(&self.api_key_env).ok().filter(|k| !k.is_empty());
        HttpClient::new(&endpoint, key, Duration::from_secs(self.timeout_secs))
    }
}
