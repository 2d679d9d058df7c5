use std::path::PathBuf;
use std::sync::Arc;

use super::{LanguageBackend, MockBackend, PromptTemplates, RemoteBackend, ResponseCache};

pub const DEFAULT_TIMEOUT_MS: u64 = 30_000;
pub const DEFAULT_RESIZE_VARIANTS: usize = 8;
pub const DEFAULT_BASE_URL: &str = "https://api.openai.com/v1";
pub const DEFAULT_MODEL: &str = "gpt-4o-mini";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BackendKind {
    Mock,
    Remote,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RemoteConfig {
    pub base_url: String,
    pub api_key: Option<String>,
    pub model: String,
    pub timeout_ms: u64,
    pub temperature: f64,
}

impl Default for RemoteConfig {
    fn default() -> Self {
        RemoteConfig {
            base_url: DEFAULT_BASE_URL.to_string(),
            api_key: None,
            model: DEFAULT_MODEL.to_string(),
            timeout_ms: DEFAULT_TIMEOUT_MS,
            temperature: 0.7,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BackendConfig {
    pub kind: BackendKind,
    pub remote: RemoteConfig,
    pub resize_variants: usize,
    /// Directory of `<kind>.txt` prompt overrides.
    pub prompt_dir: Option<PathBuf>,
    /// Directory for the on-disk reply cache.
    pub cache_dir: Option<PathBuf>,
}

impl Default for BackendConfig {
    fn default() -> Self {
        BackendConfig {
            kind: BackendKind::Mock,
            remote: RemoteConfig::default(),
            resize_variants: DEFAULT_RESIZE_VARIANTS,
            prompt_dir: None,
            cache_dir: None,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("{name} has invalid value `{value}`")]
    Invalid { name: &'static str, value: String },
    #[error("cannot read prompt overrides: {0}")]
    Prompts(#[from] std::io::Error),
}

impl BackendConfig {
    /// Reads the `TEXTOSHOP_*` environment variables.
    pub fn from_env() -> Result<Self, ConfigError> {
        Self::from_lookup(|name| std::env::var(name).ok())
    }

    pub fn from_lookup(get: impl Fn(&str) -> Option<String>) -> Result<Self, ConfigError> {
        let mut c = BackendConfig::default();
        let non_empty = |name: &str| get(name).filter(|v| !v.trim().is_empty());
        if let Some(v) = non_empty("TEXTOSHOP_BACKEND") {
            c.kind = match v.trim() {
                "mock" => BackendKind::Mock,
                "remote" => BackendKind::Remote,
                _ => return Err(ConfigError::Invalid { name: "TEXTOSHOP_BACKEND", value: v }),
            };
        }
        c.remote.api_key = non_empty("TEXTOSHOP_API_KEY");
        if let Some(v) = non_empty("TEXTOSHOP_MODEL") {
            c.remote.model = v;
        }
        if let Some(v) = non_empty("TEXTOSHOP_BASE_URL") {
            c.remote.base_url = v;
        }
        if let Some(v) = non_empty("TEXTOSHOP_TIMEOUT_MS") {
            c.remote.timeout_ms = match v.trim().parse() {
                Ok(ms) if ms > 0 => ms,
                _ => return Err(ConfigError::Invalid { name: "TEXTOSHOP_TIMEOUT_MS", value: v }),
            };
        }
        if let Some(v) = non_empty("TEXTOSHOP_RESIZE_VARIANTS") {
            c.resize_variants = match v.trim().parse() {
                Ok(n) if n > 0 => n,
                _ => return Err(ConfigError::Invalid { name: "TEXTOSHOP_RESIZE_VARIANTS", value: v }),
            };
        }
        c.prompt_dir = non_empty("TEXTOSHOP_PROMPT_DIR").map(PathBuf::from);
        Ok(c)
    }
}

/// Builds the configured backend.
pub fn build_backend(config: &BackendConfig) -> Result<Arc<dyn LanguageBackend>, ConfigError> {
    Ok(match config.kind {
        BackendKind::Mock => Arc::new(MockBackend),
        BackendKind::Remote => {
            let templates = match &config.prompt_dir {
                Some(dir) => PromptTemplates::with_overrides(dir)?,
                None => PromptTemplates::builtin(),
            };
            let cache = match &config.cache_dir {
                Some(dir) => ResponseCache::with_spill(dir),
                None => ResponseCache::in_memory(),
            };
            Arc::new(RemoteBackend::new(config.remote.clone()).with_templates(templates).with_cache(Some(Arc::new(cache))))
        }
    })
}
