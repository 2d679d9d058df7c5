//! Language backends: the deterministic mock and an OpenAI-compatible
//! remote provider.

mod cache;
mod config;
pub mod mock;
mod prompts;
mod remote;

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::text::grapheme_len;
use crate::tone::ToneVector;

pub use cache::ResponseCache;
pub use config::{build_backend, BackendConfig, BackendKind, ConfigError, RemoteConfig};
pub use mock::MockBackend;
pub use prompts::{PromptTemplates, RenderedPrompt};
pub use remote::{HttpReply, RemoteBackend, Transport, TransportError, UreqTransport};

/// What a backend is asked to do.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RequestKind {
    Erase,
    Repair,
    Smudge,
    SetNumber,
    SetTense,
    ApplyTone,
    EstimateTone,
    Prompt,
    Resize,
    Rotate,
    Split,
    Combine,
    Unite,
    Intersect,
    Subtract,
    Exclude,
}

impl RequestKind {
    pub const ALL: [RequestKind; 16] = [
        RequestKind::Erase,
        RequestKind::Repair,
        RequestKind::Smudge,
        RequestKind::SetNumber,
        RequestKind::SetTense,
        RequestKind::ApplyTone,
        RequestKind::EstimateTone,
        RequestKind::Prompt,
        RequestKind::Resize,
        RequestKind::Rotate,
        RequestKind::Split,
        RequestKind::Combine,
        RequestKind::Unite,
        RequestKind::Intersect,
        RequestKind::Subtract,
        RequestKind::Exclude,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            RequestKind::Erase => "erase",
            RequestKind::Repair => "repair",
            RequestKind::Smudge => "smudge",
            RequestKind::SetNumber => "set_number",
            RequestKind::SetTense => "set_tense",
            RequestKind::ApplyTone => "apply_tone",
            RequestKind::EstimateTone => "estimate_tone",
            RequestKind::Prompt => "prompt",
            RequestKind::Resize => "resize",
            RequestKind::Rotate => "rotate",
            RequestKind::Split => "split",
            RequestKind::Combine => "combine",
            RequestKind::Unite => "unite",
            RequestKind::Intersect => "intersect",
            RequestKind::Subtract => "subtract",
            RequestKind::Exclude => "exclude",
        }
    }

    /// Slots that must be present and non-empty.
    pub fn required_slots(self) -> &'static [Slot] {
        use RequestKind::*;
        match self {
            Erase | Smudge | SetNumber | SetTense => &[Slot::Sentence, Slot::Selection],
            ApplyTone | EstimateTone | Rotate => &[Slot::Selection],
            Prompt => &[Slot::Selection, Slot::Prompt],
            Repair | Resize | Split | Combine => &[Slot::Sentence],
            Unite | Intersect | Subtract | Exclude => &[Slot::Fragment, Slot::Target],
        }
    }

    /// Constraints that must be present.
    pub fn required_constraints(self) -> &'static [&'static str] {
        use RequestKind::*;
        match self {
            Erase | Smudge => &[keys::SELECTION_START, keys::SELECTION_END],
            SetNumber => &[keys::SELECTION_START, keys::SELECTION_END, keys::NUMBER],
            SetTense => &[keys::SELECTION_START, keys::SELECTION_END, keys::TENSE],
            ApplyTone => &[keys::TONE],
            Resize => &[keys::DELTA, keys::TARGET_WORDS],
            Rotate => &[keys::INTENSITY],
            _ => &[],
        }
    }

    /// Whether the reply replaces the whole `sentence` slot (as opposed to
    /// the `selection` or, for boolean kinds, the `target`).
    pub fn rewrites_sentence(self) -> bool {
        matches!(self.required_slots().first(), Some(Slot::Sentence))
    }
}

impl fmt::Display for RequestKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Named text inputs of a request.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Slot {
    Selection,
    Sentence,
    Fragment,
    Target,
    Prompt,
}

impl Slot {
    pub fn as_str(self) -> &'static str {
        match self {
            Slot::Selection => "selection",
            Slot::Sentence => "sentence",
            Slot::Fragment => "fragment",
            Slot::Target => "target",
            Slot::Prompt => "prompt",
        }
    }
}

/// Constraint names.
pub mod keys {
    pub const SELECTION_START: &str = "selection_start";
    pub const SELECTION_END: &str = "selection_end";
    pub const TARGET_WORDS: &str = "target_words";
    pub const DELTA: &str = "delta";
    pub const TONE: &str = "tone";
    pub const INTENSITY: &str = "intensity";
    pub const TENSE: &str = "tense";
    pub const NUMBER: &str = "number";
}

/// A named scalar constraint.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Constraint {
    Int(i64),
    Real(f64),
    Text(String),
    Tone(ToneVector),
}

impl Constraint {
    pub fn as_int(&self) -> Option<i64> {
        match self {
            Constraint::Int(v) => Some(*v),
            _ => None,
        }
    }

    pub fn as_real(&self) -> Option<f64> {
        match self {
            Constraint::Real(v) => Some(*v),
            Constraint::Int(v) => Some(*v as f64),
            _ => None,
        }
    }

    pub fn as_text(&self) -> Option<&str> {
        match self {
            Constraint::Text(v) => Some(v),
            _ => None,
        }
    }

    pub fn as_tone(&self) -> Option<ToneVector> {
        match self {
            Constraint::Tone(v) => Some(*v),
            _ => None,
        }
    }

    /// Text used when the constraint is substituted into a prompt.
    pub fn render(&self) -> String {
        match self {
            Constraint::Int(v) => v.to_string(),
            Constraint::Real(v) => format!("{v:.2}"),
            Constraint::Text(v) => v.clone(),
            Constraint::Tone(t) => format!(
                "formality {}/10, sentiment {}/10, complexity {}/10",
                t.formality, t.sentiment, t.complexity
            ),
        }
    }
}

/// One unit of language work.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BackendRequest {
    pub kind: RequestKind,
    pub slots: BTreeMap<Slot, String>,
    pub constraints: BTreeMap<String, Constraint>,
}

impl BackendRequest {
    pub fn new(kind: RequestKind) -> Self {
        BackendRequest { kind, slots: BTreeMap::new(), constraints: BTreeMap::new() }
    }

    pub fn slot(mut self, slot: Slot, text: impl Into<String>) -> Self {
        self.slots.insert(slot, text.into());
        self
    }

    pub fn constraint(mut self, name: &str, value: Constraint) -> Self {
        self.constraints.insert(name.to_string(), value);
        self
    }

    pub fn get_slot(&self, slot: Slot) -> Option<&str> {
        self.slots.get(&slot).map(String::as_str)
    }

    pub fn get(&self, name: &str) -> Option<&Constraint> {
        self.constraints.get(name)
    }

    /// Checks required slots and constraints before any work is done.
    pub fn validate(&self) -> Result<(), BackendError> {
        for slot in self.kind.required_slots() {
            match self.slots.get(slot) {
                Some(s) if !s.trim().is_empty() => {}
                _ => {
                    return Err(BackendError::Validation(format!(
                        "{} request needs a non-empty `{}` slot",
                        self.kind,
                        slot.as_str()
                    )))
                }
            }
        }
        for name in self.kind.required_constraints() {
            if !self.constraints.contains_key(*name) {
                return Err(BackendError::Validation(format!("{} request needs constraint `{name}`", self.kind)));
            }
        }
        if let (Some(sentence), Some(start), Some(end)) = (
            self.get_slot(Slot::Sentence),
            self.get(keys::SELECTION_START).and_then(Constraint::as_int),
            self.get(keys::SELECTION_END).and_then(Constraint::as_int),
        ) {
            let len = grapheme_len(sentence) as i64;
            if !(0 <= start && start <= end && end <= len) {
                return Err(BackendError::Validation(format!(
                    "selection {start}..{end} outside a sentence of {len} graphemes"
                )));
            }
        }
        Ok(())
    }

    /// Canonical serialization: sorted slots and constraints.
    pub fn canonical_json(&self) -> String {
        serde_json::to_string(self).expect("requests serialize")
    }

    /// Hex SHA-256 of the canonical form.
    pub fn digest(&self) -> String {
        hex::encode(Sha256::digest(self.canonical_json().as_bytes()))
    }
}

/// Hex SHA-256 over the digests of several requests.
pub fn combined_digest(requests: &[BackendRequest]) -> String {
    let mut h = Sha256::new();
    for r in requests {
        h.update(r.digest().as_bytes());
    }
    hex::encode(h.finalize())
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Usage {
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BackendResponse {
    pub texts: Vec<String>,
    pub usage: Usage,
    pub latency_ms: u64,
}

impl BackendResponse {
    pub fn single(text: String) -> Self {
        BackendResponse { texts: vec![text], usage: Usage::default(), latency_ms: 0 }
    }

    pub fn first(&self) -> &str {
        &self.texts[0]
    }
}

/// Resize candidates, one per successful delta.
#[derive(Clone, Debug, PartialEq)]
pub struct ResizeVariants {
    pub candidates: Vec<(i64, String)>,
    /// Some deltas failed; `candidates` holds the rest.
    pub partial: bool,
}

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum BackendError {
    #[error("backend timed out after {0} ms")]
    Timeout(u64),
    #[error("backend returned HTTP {status}: {body}")]
    Remote { status: u16, body: String },
    #[error("invalid backend request or reply: {0}")]
    Validation(String),
    #[error("backend transport failed: {0}")]
    Transport(String),
    #[error("no split point in the selection")]
    NoSplitPoint,
}

/// A provider of language transforms.
pub trait LanguageBackend: Send + Sync {
    /// `"mock"` or `"remote"`.
    fn kind(&self) -> &'static str;

    fn model(&self) -> &str;

    fn complete(&self, req: &BackendRequest) -> Result<BackendResponse, BackendError>;

    /// One rewrite of `sentence` per delta in word count, requested
    /// concurrently. Failed deltas are dropped and flagged; if every delta
    /// fails the first error is returned.
    fn resize_variants(&self, sentence: &str, deltas: &[i64]) -> Result<ResizeVariants, BackendError> {
        if sentence.trim().is_empty() || deltas.is_empty() {
            return Err(BackendError::Validation("resize needs a sentence and at least one delta".into()));
        }
        let results: Vec<Result<BackendResponse, BackendError>> = std::thread::scope(|scope| {
            let handles: Vec<_> = deltas
                .iter()
                .map(|&d| scope.spawn(move || self.complete(&resize_request(sentence, d))))
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().unwrap_or_else(|_| Err(BackendError::Transport("worker panicked".into()))))
                .collect()
        });
        collect_variants(deltas, results)
    }
}

pub(crate) fn collect_variants(
    deltas: &[i64],
    results: Vec<Result<BackendResponse, BackendError>>,
) -> Result<ResizeVariants, BackendError> {
    let mut candidates = Vec::with_capacity(deltas.len());
    let mut first_error = None;
    for (&d, r) in deltas.iter().zip(results) {
        match r {
            Ok(resp) => candidates.push((d, resp.texts.into_iter().next().unwrap_or_default())),
            Err(e) => {
                first_error.get_or_insert(e);
            }
        }
    }
    match first_error {
        Some(e) if candidates.is_empty() => Err(e),
        e => Ok(ResizeVariants { candidates, partial: e.is_some() }),
    }
}

/// The request for one resize variant.
pub fn resize_request(sentence: &str, delta: i64) -> BackendRequest {
    let target = (crate::text::word_count(sentence) as i64 + delta).max(1);
    BackendRequest::new(RequestKind::Resize)
        .slot(Slot::Sentence, sentence)
        .constraint(keys::DELTA, Constraint::Int(delta))
        .constraint(keys::TARGET_WORDS, Constraint::Int(target))
}
