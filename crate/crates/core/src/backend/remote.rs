use std::sync::Arc;
use std::time::{Duration, Instant};

use serde_json::{json, Value};

use super::{
    BackendError, BackendRequest, BackendResponse, LanguageBackend, PromptTemplates, RemoteConfig, RenderedPrompt,
    ResponseCache, Usage,
};

/// Raw HTTP reply.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HttpReply {
    pub status: u16,
    pub body: String,
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum TransportError {
    #[error("request timed out")]
    Timeout,
    #[error("connection failed: {0}")]
    Connect(String),
}

/// Issues one JSON POST. Implementations must not block past `timeout`.
pub trait Transport: Send + Sync {
    fn post_json(&self, url: &str, bearer: Option<&str>, body: &str, timeout: Duration)
        -> Result<HttpReply, TransportError>;
}

/// [`Transport`] over a blocking `ureq` agent.
#[derive(Clone, Copy, Debug, Default)]
pub struct UreqTransport;

impl Transport for UreqTransport {
    fn post_json(
        &self,
        url: &str,
        bearer: Option<&str>,
        body: &str,
        timeout: Duration,
    ) -> Result<HttpReply, TransportError> {
        let agent: ureq::Agent =
            ureq::Agent::config_builder().timeout_global(Some(timeout)).http_status_as_error(false).build().into();
        let mut req = agent.post(url).header("content-type", "application/json");
        if let Some(key) = bearer {
            req = req.header("authorization", format!("Bearer {key}"));
        }
        let map_err = |e: ureq::Error| match e {
            ureq::Error::Timeout(_) => TransportError::Timeout,
            other => TransportError::Connect(other.to_string()),
        };
        let mut resp = req.send(body).map_err(map_err)?;
        let status = resp.status().as_u16();
        let body = resp.body_mut().read_to_string().map_err(map_err)?;
        Ok(HttpReply { status, body })
    }
}

/// Strips one layer of code fences, then one pair of matching quotes.
pub fn sanitize_reply(reply: &str) -> String {
    let mut s = reply.trim();
    if let Some(fenced) = s.strip_prefix("```") {
        if let Some((_, body)) = fenced.split_once('\n') {
            if let Some(end) = body.rfind("```") {
                s = body[..end].trim();
            }
        }
    }
    for (open, close) in [('"', '"'), ('\'', '\''), ('“', '”'), ('‘', '’'), ('«', '»')] {
        if s.chars().count() >= 2 && s.starts_with(open) && s.ends_with(close) {
            s = s[open.len_utf8()..s.len() - close.len_utf8()].trim();
            break;
        }
    }
    s.to_string()
}

const EXCERPT_CHARS: usize = 300;

fn excerpt(body: &str) -> String {
    body.chars().take(EXCERPT_CHARS).collect()
}

/// Chat-completions provider.
pub struct RemoteBackend {
    config: RemoteConfig,
    transport: Arc<dyn Transport>,
    templates: PromptTemplates,
    cache: Option<Arc<ResponseCache>>,
}

impl RemoteBackend {
    /// A provider using `ureq`, the built-in templates and an in-memory cache.
    pub fn new(config: RemoteConfig) -> Self {
        RemoteBackend {
            config,
            transport: Arc::new(UreqTransport),
            templates: PromptTemplates::builtin(),
            cache: Some(Arc::new(ResponseCache::in_memory())),
        }
    }

    pub fn with_transport(mut self, transport: Arc<dyn Transport>) -> Self {
        self.transport = transport;
        self
    }

    pub fn with_templates(mut self, templates: PromptTemplates) -> Self {
        self.templates = templates;
        self
    }

    pub fn with_cache(mut self, cache: Option<Arc<ResponseCache>>) -> Self {
        self.cache = cache;
        self
    }

    pub fn config(&self) -> &RemoteConfig {
        &self.config
    }

    fn endpoint(&self) -> String {
        format!("{}/chat/completions", self.config.base_url.trim_end_matches('/'))
    }

    /// Body of the chat-completions call for a rendered prompt.
    pub fn request_body(&self, prompt: &RenderedPrompt) -> Value {
        let mut messages = Vec::with_capacity(2);
        if !prompt.system.is_empty() {
            messages.push(json!({"role": "system", "content": prompt.system}));
        }
        messages.push(json!({"role": "user", "content": prompt.user}));
        json!({"model": self.config.model, "messages": messages, "temperature": self.config.temperature})
    }

    /// Posts with one retry on connection failure, within a single deadline.
    fn post(&self, body: &str) -> Result<HttpReply, BackendError> {
        let timeout = Duration::from_millis(self.config.timeout_ms);
        let deadline = Instant::now() + timeout;
        let url = self.endpoint();
        let mut attempt = 0;
        loop {
            let remaining = deadline.saturating_duration_since(Instant::now());
            if remaining.is_zero() {
                return Err(BackendError::Timeout(self.config.timeout_ms));
            }
            match self.transport.post_json(&url, self.config.api_key.as_deref(), body, remaining) {
                Ok(reply) => return Ok(reply),
                Err(TransportError::Timeout) => return Err(BackendError::Timeout(self.config.timeout_ms)),
                Err(TransportError::Connect(e)) if attempt > 0 => return Err(BackendError::Transport(e)),
                Err(TransportError::Connect(_)) => attempt += 1,
            }
        }
    }

    fn call(&self, req: &BackendRequest) -> Result<(String, Usage), BackendError> {
        let prompt = self.templates.render(req)?;
        let reply = self.post(&self.request_body(&prompt).to_string())?;
        if !(200..300).contains(&reply.status) {
            return Err(BackendError::Remote { status: reply.status, body: excerpt(&reply.body) });
        }
        let v: Value = serde_json::from_str(&reply.body)
            .map_err(|e| BackendError::Validation(format!("completion is not JSON: {e}")))?;
        let content = v
            .pointer("/choices/0/message/content")
            .and_then(Value::as_str)
            .ok_or_else(|| BackendError::Validation("completion lacks choices[0].message.content".into()))?;
        let text = sanitize_reply(content);
        if text.is_empty() {
            return Err(BackendError::Validation("blank completion".into()));
        }
        let tokens = |name: &str| v.pointer(&format!("/usage/{name}")).and_then(Value::as_u64).unwrap_or(0);
        Ok((text, Usage { prompt_tokens: tokens("prompt_tokens"), completion_tokens: tokens("completion_tokens") }))
    }
}

impl LanguageBackend for RemoteBackend {
    fn kind(&self) -> &'static str {
        "remote"
    }

    fn model(&self) -> &str {
        &self.config.model
    }

    fn complete(&self, req: &BackendRequest) -> Result<BackendResponse, BackendError> {
        req.validate()?;
        let started = Instant::now();
        let key = ResponseCache::key(req, &self.config.model);
        if let Some(texts) = self.cache.as_ref().and_then(|c| c.lookup(&key)) {
            return Ok(BackendResponse { texts, usage: Usage::default(), latency_ms: 0 });
        }
        let (text, usage) = self.call(req)?;
        let texts = vec![text];
        if let Some(c) = &self.cache {
            c.store(&key, &texts);
        }
        Ok(BackendResponse { texts, usage, latency_ms: started.elapsed().as_millis() as u64 })
    }
}
