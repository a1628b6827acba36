use super::{fingerprint, Backend, ChatClient, ChatRequest, ChatResponse, LlmError, Usage};
use serde::{Deserialize, Serialize};
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

const REDACTED: &str = "[REDACTED]";

/// One recorded completion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Cassette {
    pub fingerprint: String,
    pub sample: usize,
    /// Canonical request, kept for diagnostics.
    pub request: serde_json::Value,
    pub content: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub usage: Option<Usage>,
}

/// Directory of cassettes named `{fingerprint}_{sample}.json`.
#[derive(Debug, Clone)]
pub struct CassetteStore {
    dir: PathBuf,
    secrets: Vec<String>,
}

impl CassetteStore {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        CassetteStore {
            dir: dir.into(),
            secrets: Vec::new(),
        }
    }

    /// Text scrubbed from every cassette before it is written.
    pub fn with_secret(mut self, secret: &str) -> Self {
        if !secret.is_empty() {
            self.secrets.push(secret.to_string());
        }
        self
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn path_for(&self, fingerprint: &str, sample: usize) -> PathBuf {
        self.dir.join(format!("{fingerprint}_{sample}.json"))
    }

    pub fn put(&self, req: &ChatRequest, sample: usize, content: &str, usage: Option<Usage>) -> Result<PathBuf, LlmError> {
        let fp = fingerprint(req);
        let path = self.path_for(&fp, sample);
        let cassette = Cassette {
            fingerprint: fp,
            sample,
            request: req.canonical(),
            content: content.to_string(),
            usage,
        };
        let mut text = serde_json::to_string_pretty(&cassette).expect("cassette serializes");
        text.push('\n');
        for secret in &self.secrets {
            text = text.replace(secret.as_str(), REDACTED);
        }
        let err = |message: String| LlmError::Cassette {
            path: path.clone(),
            message,
        };
        fs::create_dir_all(&self.dir).map_err(|e| err(e.to_string()))?;
        let mut tmp = tempfile::NamedTempFile::new_in(&self.dir).map_err(|e| err(e.to_string()))?;
        tmp.write_all(text.as_bytes()).map_err(|e| err(e.to_string()))?;
        tmp.persist(&path).map_err(|e| err(e.error.to_string()))?;
        Ok(path)
    }

    pub fn get(&self, req: &ChatRequest, sample: usize) -> Result<Cassette, LlmError> {
        let fp = fingerprint(req);
        let path = self.path_for(&fp, sample);
        let text = match fs::read_to_string(&path) {
            Ok(t) => t,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
                return Err(LlmError::NoCassette {
                    nearest: self.nearest(req, 3),
                    fingerprint: fp,
                    sample,
                    dir: self.dir.clone(),
                })
            }
            Err(e) => {
                return Err(LlmError::Cassette {
                    path,
                    message: e.to_string(),
                })
            }
        };
        serde_json::from_str(&text).map_err(|e| LlmError::Cassette {
            path,
            message: e.to_string(),
        })
    }

    /// Stored cassette file stems whose request shares the longest prefix
    /// with `req`.
    fn nearest(&self, req: &ChatRequest, limit: usize) -> Vec<String> {
        let wanted = req.canonical().to_string();
        let Ok(entries) = fs::read_dir(&self.dir) else {
            return Vec::new();
        };
        let mut scored: Vec<(usize, String)> = entries
            .filter_map(Result::ok)
            .filter_map(|e| {
                let path = e.path();
                if path.extension().and_then(|x| x.to_str()) != Some("json") {
                    return None;
                }
                let stem = path.file_stem()?.to_string_lossy().into_owned();
                let c: Cassette = serde_json::from_str(&fs::read_to_string(&path).ok()?).ok()?;
                let stored = c.request.to_string();
                let common = wanted
                    .bytes()
                    .zip(stored.bytes())
                    .take_while(|(a, b)| a == b)
                    .count();
                Some((common, stem))
            })
            .collect();
        scored.sort_by(|a, b| b.0.cmp(&a.0).then_with(|| a.1.cmp(&b.1)));
        scored.into_iter().take(limit).map(|(_, s)| s).collect()
    }
}

/// Serves completions from a cassette directory only.
pub struct ReplayClient {
    store: CassetteStore,
}

impl ReplayClient {
    pub fn new(store: CassetteStore) -> Self {
        ReplayClient { store }
    }
}

impl ChatClient for ReplayClient {
    fn complete_sample(&self, req: &ChatRequest, sample: usize) -> Result<ChatResponse, LlmError> {
        let c = self.store.get(req, sample)?;
        if c.content.is_empty() {
            return Err(LlmError::EmptyContent);
        }
        Ok(ChatResponse {
            content: c.content,
            usage: c.usage,
            backend: Backend::Replay,
        })
    }
}

/// Forwards to another client and stores every response.
pub struct RecordingClient {
    inner: Box<dyn ChatClient>,
    store: CassetteStore,
}

impl RecordingClient {
    pub fn new(inner: Box<dyn ChatClient>, store: CassetteStore) -> Self {
        RecordingClient { inner, store }
    }
}

impl ChatClient for RecordingClient {
    fn complete_sample(&self, req: &ChatRequest, sample: usize) -> Result<ChatResponse, LlmError> {
        let resp = self.inner.complete_sample(req, sample)?;
        let path = self.store.put(req, sample, &resp.content, resp.usage)?;
        log::debug!("recorded {}", path.display());
        Ok(ChatResponse {
            backend: Backend::Record,
            ..resp
        })
    }
}
