use super::{Backend, ChatClient, ChatRequest, ChatResponse, LlmError, Role, Usage};
use base64::engine::general_purpose::STANDARD;
use base64::Engine;
use serde::Deserialize;
use serde_json::{json, Value};
use std::time::Duration;

const MAX_ATTEMPTS: u32 = 3;

/// OpenAI-compatible `POST {endpoint}/chat/completions`.
pub struct HttpClient {
    url: String,
    api_key: Option<String>,
    http: reqwest::blocking::Client,
    base_delay: Duration,
}

impl std::fmt::Debug for HttpClient {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("HttpClient")
            .field("url", &self.url)
            .field("api_key", &self.api_key.as_ref().map(|_| "[REDACTED]"))
            .finish()
    }
}

#[derive(Deserialize)]
struct WireResponse {
    choices: Vec<WireChoice>,
    #[serde(default)]
    usage: Option<Usage>,
}

#[derive(Deserialize)]
struct WireChoice {
    message: WireMessage,
}

#[derive(Deserialize)]
struct WireMessage {
    #[serde(default)]
    content: Option<String>,
}

enum Failure {
    Retry(String),
    Fatal(LlmError),
}

impl HttpClient {
    pub fn new(endpoint: &str, api_key: Option<String>, timeout: Duration) -> Result<Self, LlmError> {
        let http = reqwest::blocking::Client::builder()
            .timeout(timeout)
            .build()
            .map_err(|e| LlmError::Config(e.to_string()))?;
        Ok(HttpClient {
            url: format!("{}/chat/completions", endpoint.trim_end_matches('/')),
            api_key,
            http,
            base_delay: Duration::from_millis(500),
        })
    }

    /// First retry waits this long, each further one twice as long.
    pub fn with_base_delay(mut self, delay: Duration) -> Self {
        self.base_delay = delay;
        self
    }

    pub fn api_key(&self) -> Option<&str> {
        self.api_key.as_deref()
    }

    fn body(req: &ChatRequest) -> Value {
        let messages: Vec<Value> = req
            .messages
            .iter()
            .map(|m| {
                let role = match m.role {
                    Role::System => "system",
                    Role::User => "user",
                    Role::Assistant => "assistant",
                };
                if m.attachments.is_empty() {
                    return json!({"role": role, "content": m.content});
                }
                let mut parts = vec![json!({"type": "text", "text": m.content})];
                for a in &m.attachments {
                    let url = format!("data:{};base64,{}", a.media_type, STANDARD.encode(&a.data));
                    parts.push(json!({"type": "image_url", "image_url": {"url": url}}));
                }
                json!({"role": role, "content": parts})
            })
            .collect();
        let mut body = json!({
            "model": req.model,
            "temperature": req.temperature,
            "messages": messages,
        });
        if let Some(n) = req.max_tokens {
            body["max_tokens"] = json!(n);
        }
        body
    }

    fn attempt(&self, body: &Value) -> Result<ChatResponse, Failure> {
        let mut rb = self.http.post(&self.url).json(body);
        if let Some(key) = &self.api_key {
            rb = rb.bearer_auth(key);
        }
        let resp = rb.send().map_err(|e| Failure::Retry(e.without_url().to_string()))?;
        let status = resp.status();
        let text = resp.text().map_err(|e| Failure::Retry(e.without_url().to_string()))?;
        if status.as_u16() == 429 || status.is_server_error() {
            return Err(Failure::Retry(format!("status {status}")));
        }
        if !status.is_success() {
            return Err(Failure::Fatal(LlmError::Status {
                status: status.as_u16(),
                body: text.chars().take(500).collect(),
            }));
        }
        let wire: WireResponse =
            serde_json::from_str(&text).map_err(|e| Failure::Fatal(LlmError::Decode(e.to_string())))?;
        let content = wire
            .choices
            .into_iter()
            .next()
            .and_then(|c| c.message.content)
            .unwrap_or_default();
        if content.is_empty() {
            return Err(Failure::Fatal(LlmError::EmptyContent));
        }
        Ok(ChatResponse {
            content,
            usage: wire.usage,
            backend: Backend::Live,
        })
    }
}

impl ChatClient for HttpClient {
    fn complete_sample(&self, req: &ChatRequest, _sample: usize) -> Result<ChatResponse, LlmError> {
        req.check()?;
        let body = Self::body(req);
        let mut last = String::new();
        for attempt in 0..MAX_ATTEMPTS {
            if attempt > 0 {
                std::thread::sleep(self.base_delay * 2u32.pow(attempt - 1));
            }
            match self.attempt(&body) {
                Ok(r) => return Ok(r),
                Err(Failure::Fatal(e)) => return Err(e),
                Err(Failure::Retry(msg)) => {
                    log::warn!("chat request attempt {} failed: {msg}", attempt + 1);
                    last = msg;
                }
            }
        }
        Err(LlmError::Transport {
            attempts: MAX_ATTEMPTS,
            message: last,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::llm::{Attachment, ChatMessage};

    #[test]
    fn wire_body_shape() {
        let mut req = ChatRequest::new("m", 0.5, vec![ChatMessage::system("s"), ChatMessage::user("u")]);
        req.max_tokens = Some(10);
        req.messages[1].attachments.push(Attachment {
            media_type: "image/png".into(),
            data: vec![0xff],
        });
        let body = HttpClient::body(&req);
        assert_eq!(body["model"], "m");
        assert_eq!(body["max_tokens"], 10);
        assert_eq!(body["messages"][0], json!({"role": "system", "content": "s"}));
        assert_eq!(body["messages"][1]["content"][1]["image_url"]["url"], "data:image/png;base64,/w==");
    }

    #[test]
    fn debug_hides_key() {
        let c = HttpClient::new("http://x", Some("sk-123".into()), Duration::from_secs(1)).unwrap();
        assert!(!format!("{c:?}").contains("sk-123"));
    }
}
