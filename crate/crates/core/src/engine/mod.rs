//! Tool semantics: scoping, backend requests, reintegration and changesets.

mod variants;

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::backend::{
    combined_digest, keys, resize_request, BackendError, BackendRequest, Constraint, LanguageBackend, RequestKind,
    ResizeVariants, Slot,
};
use crate::changeset::{diff, Bias, ChangeSet, Op};
use crate::text::{grapheme_len, is_whitespace_grapheme, reintegrate, segment_sentences, word_count, PlainText};
use crate::tone::ToneVector;

pub use variants::{select_variants, Candidate, VariantTable};

/// Half-open grapheme range of the composition.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SelectionRange {
    pub start: usize,
    pub end: usize,
}

impl SelectionRange {
    pub fn new(start: usize, end: usize) -> Self {
        SelectionRange { start, end }
    }

    pub fn is_empty(&self) -> bool {
        self.start >= self.end
    }

    pub fn check(&self, len: usize) -> Result<(), EngineError> {
        if self.start <= self.end && self.end <= len {
            Ok(())
        } else {
            Err(EngineError::InvalidSelection { start: self.start, end: self.end, len })
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Number {
    Singular,
    Plural,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Tense {
    Past,
    Present,
    Future,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BooleanOpKind {
    Unite,
    Intersect,
    Subtract,
    Exclude,
    InsertRaw,
}

impl BooleanOpKind {
    pub fn as_str(self) -> &'static str {
        match self {
            BooleanOpKind::Unite => "unite",
            BooleanOpKind::Intersect => "intersect",
            BooleanOpKind::Subtract => "subtract",
            BooleanOpKind::Exclude => "exclude",
            BooleanOpKind::InsertRaw => "insert_raw",
        }
    }

    fn request_kind(self) -> Option<RequestKind> {
        match self {
            BooleanOpKind::Unite => Some(RequestKind::Unite),
            BooleanOpKind::Intersect => Some(RequestKind::Intersect),
            BooleanOpKind::Subtract => Some(RequestKind::Subtract),
            BooleanOpKind::Exclude => Some(RequestKind::Exclude),
            BooleanOpKind::InsertRaw => None,
        }
    }
}

/// A selection-based tool and its parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "tool", rename_all = "snake_case")]
pub enum Tool {
    Erase,
    Repair,
    Smudge,
    SetNumber { number: Number },
    SetTense { tense: Tense },
    ApplyTone { tone: ToneVector },
    Prompt { prompt: String },
    Resize { target_words: usize },
    Rotate { angle_deg: f64 },
    Split,
    Combine,
}

impl Tool {
    pub fn name(&self) -> &'static str {
        match self {
            Tool::Erase => "erase",
            Tool::Repair => "repair",
            Tool::Smudge => "smudge",
            Tool::SetNumber { .. } => "set_number",
            Tool::SetTense { .. } => "set_tense",
            Tool::ApplyTone { .. } => "apply_tone",
            Tool::Prompt { .. } => "prompt",
            Tool::Resize { .. } => "resize",
            Tool::Rotate { .. } => "rotate",
            Tool::Split => "split",
            Tool::Combine => "combine",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub tool: String,
    pub backend: String,
    pub request_digest: String,
    /// Word count reached by a resize.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub achieved_words: Option<usize>,
    /// Some resize variants could not be produced.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub partial_variants: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransformOutcome {
    pub changeset: ChangeSet,
    pub new_selection: SelectionRange,
    pub provenance: Provenance,
}

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum EngineError {
    #[error("selection {start}..{end} is invalid for a text of {len} graphemes")]
    InvalidSelection { start: usize, end: usize, len: usize },
    #[error("invalid request: {0}")]
    InvalidRequest(String),
    #[error("no split point in the selection")]
    NoSplitPoint,
    #[error("closest achievable length {achieved} is too far from the target {target}")]
    UnreachableTarget { target: usize, achieved: usize },
    #[error(transparent)]
    Backend(BackendError),
}

impl From<BackendError> for EngineError {
    fn from(e: BackendError) -> Self {
        match e {
            BackendError::NoSplitPoint => EngineError::NoSplitPoint,
            other => EngineError::Backend(other),
        }
    }
}

/// The minimal run of whole sentences covering `sel`, widened to cover the
/// selection itself.
pub fn tool_scope(text: &PlainText, sel: SelectionRange) -> SelectionRange {
    let spans = segment_sentences(text);
    let mut hit = spans.iter().filter(|s| s.intersects(sel.start, sel.end));
    let Some(first) = hit.next() else {
        return sel;
    };
    let last = hit.next_back().unwrap_or(first);
    SelectionRange::new(first.start.min(sel.start), last.end.max(sel.end))
}

/// Changeset replacing `range` of `text` with `replacement`, diffed locally.
pub fn replace_range(text: &PlainText, range: SelectionRange, replacement: &str) -> ChangeSet {
    let local = diff(text.slice(range.start, range.end), replacement);
    let mut ops = Vec::with_capacity(local.ops().len() + 2);
    ops.push(Op::Retain(range.start));
    ops.extend(local.ops().iter().cloned());
    ops.push(Op::Retain(text.len() - range.end));
    ChangeSet::from_ops(ops)
}

/// Extends a range whose replacement vanished by one adjacent whitespace
/// grapheme, preferring the one after it.
fn absorb_separator(text: &PlainText, range: SelectionRange) -> SelectionRange {
    if range.end < text.len() && is_whitespace_grapheme(text.grapheme(range.end)) {
        SelectionRange::new(range.start, range.end + 1)
    } else if range.start > 0 && is_whitespace_grapheme(text.grapheme(range.start - 1)) {
        SelectionRange::new(range.start - 1, range.end)
    } else {
        range
    }
}

/// Runs tools against a backend.
#[derive(Clone)]
pub struct Engine {
    backend: Arc<dyn LanguageBackend>,
    resize_variants: usize,
}

impl Engine {
    pub fn new(backend: Arc<dyn LanguageBackend>, resize_variants: usize) -> Self {
        Engine { backend, resize_variants: resize_variants.max(1) }
    }

    pub fn backend(&self) -> &Arc<dyn LanguageBackend> {
        &self.backend
    }

    pub fn resize_variant_count(&self) -> usize {
        self.resize_variants
    }

    fn provenance(&self, tool: &str, digest: String) -> Provenance {
        Provenance {
            tool: tool.to_string(),
            backend: self.backend.kind().to_string(),
            request_digest: digest,
            achieved_words: None,
            partial_variants: false,
        }
    }

    fn outcome(
        &self,
        text: &PlainText,
        sel: SelectionRange,
        mut range: SelectionRange,
        replacement: &str,
        provenance: Provenance,
    ) -> TransformOutcome {
        if replacement.is_empty() {
            range = absorb_separator(text, range);
        }
        let changeset = replace_range(text, range, replacement);
        let new_selection = SelectionRange::new(
            changeset.map_position(sel.start, Bias::Left),
            changeset.map_position(sel.end, Bias::Right),
        );
        TransformOutcome { changeset, new_selection, provenance }
    }

    /// Applies `tool` to `sel` of `text`.
    pub fn transform(&self, text: &str, sel: SelectionRange, tool: &Tool) -> Result<TransformOutcome, EngineError> {
        let text = PlainText::new(text);
        sel.check(text.len())?;
        if sel.is_empty() {
            return Err(EngineError::InvalidRequest(format!("{} needs a non-empty selection", tool.name())));
        }
        let selection = text.slice(sel.start, sel.end);
        if selection.trim().is_empty() {
            return Err(EngineError::InvalidRequest(format!("{} needs a selection containing text", tool.name())));
        }
        let scope = tool_scope(&text, sel);
        let scope_text = text.slice(scope.start, scope.end);
        let scoped = |kind: RequestKind| {
            BackendRequest::new(kind)
                .slot(Slot::Sentence, scope_text)
                .slot(Slot::Selection, selection)
                .constraint(keys::SELECTION_START, Constraint::Int((sel.start - scope.start) as i64))
                .constraint(keys::SELECTION_END, Constraint::Int((sel.end - scope.start) as i64))
        };
        let on_selection = |kind: RequestKind| BackendRequest::new(kind).slot(Slot::Selection, selection);

        let (req, on_scope) = match tool {
            Tool::Resize { target_words } => return self.resize(&text, sel, scope, *target_words),
            Tool::Erase => (scoped(RequestKind::Erase), true),
            Tool::Smudge => (scoped(RequestKind::Smudge), true),
            Tool::Repair => (BackendRequest::new(RequestKind::Repair).slot(Slot::Sentence, scope_text), true),
            Tool::SetNumber { number } => {
                let n = match number {
                    Number::Singular => "singular",
                    Number::Plural => "plural",
                };
                (scoped(RequestKind::SetNumber).constraint(keys::NUMBER, Constraint::Text(n.into())), true)
            }
            Tool::SetTense { tense } => {
                let t = match tense {
                    Tense::Past => "past",
                    Tense::Present => "present",
                    Tense::Future => "future",
                };
                (scoped(RequestKind::SetTense).constraint(keys::TENSE, Constraint::Text(t.into())), true)
            }
            Tool::ApplyTone { tone } => {
                (on_selection(RequestKind::ApplyTone).constraint(keys::TONE, Constraint::Tone(*tone)), false)
            }
            Tool::Prompt { prompt } => {
                if prompt.trim().is_empty() {
                    return Err(EngineError::InvalidRequest("prompt is empty".into()));
                }
                (on_selection(RequestKind::Prompt).slot(Slot::Prompt, prompt.as_str()), false)
            }
            Tool::Rotate { angle_deg } => {
                if !(0.0..=180.0).contains(angle_deg) {
                    return Err(EngineError::InvalidRequest(format!("angle {angle_deg} is outside [0, 180]")));
                }
                if word_count(selection) < 2 {
                    return Err(EngineError::InvalidRequest("rotation needs at least two words".into()));
                }
                let req = on_selection(RequestKind::Rotate).constraint(keys::INTENSITY, Constraint::Real(angle_deg / 180.0));
                if *angle_deg == 0.0 {
                    let prov = self.provenance(tool.name(), req.digest());
                    return Ok(self.outcome(&text, sel, sel, selection, prov));
                }
                (req, false)
            }
            Tool::Split => (BackendRequest::new(RequestKind::Split).slot(Slot::Sentence, scope_text), true),
            Tool::Combine => {
                let scope_plain = PlainText::new(scope_text);
                if segment_sentences(&scope_plain).len() < 2 {
                    return Err(EngineError::InvalidRequest("combine needs at least two sentences".into()));
                }
                (BackendRequest::new(RequestKind::Combine).slot(Slot::Sentence, scope_text), true)
            }
        };

        let reply = self.backend.complete(&req)?;
        let raw = reply.first();
        let (range, original) = if on_scope { (scope, scope_text) } else { (sel, selection) };
        let replacement = if matches!(tool, Tool::Repair) {
            keep_whitespace(original, raw)
        } else {
            reintegrate(original, raw)
        };
        let prov = self.provenance(tool.name(), req.digest());
        Ok(self.outcome(&text, sel, range, &replacement, prov))
    }

    fn resize(
        &self,
        text: &PlainText,
        sel: SelectionRange,
        scope: SelectionRange,
        target: usize,
    ) -> Result<TransformOutcome, EngineError> {
        if target == 0 {
            return Err(EngineError::InvalidRequest("target_words must be at least 1".into()));
        }
        let scope_text = PlainText::new(text.slice(scope.start, scope.end));
        let spans = segment_sentences(&scope_text);
        let sentences: Vec<&str> = spans.iter().map(|s| scope_text.slice(s.start, s.end)).collect();
        let lengths: Vec<usize> = sentences.iter().map(|s| word_count(s)).collect();
        let total: usize = lengths.iter().sum();
        if total == 0 {
            return Err(EngineError::InvalidRequest("selection has no words to resize".into()));
        }
        let delta = target as f64 - total as f64;
        let n = self.resize_variants as i64;
        let low = -((n - 1) / 2);
        let deltas: Vec<Vec<i64>> = lengths
            .iter()
            .map(|&l| {
                let base = (delta * l as f64 / total as f64).round() as i64;
                (low..low + n).map(|o| base + o).collect()
            })
            .collect();
        let requests: Vec<BackendRequest> = sentences
            .iter()
            .zip(&deltas)
            .flat_map(|(s, ds)| ds.iter().map(move |&d| resize_request(s, d)))
            .collect();

        let backend = &*self.backend;
        let results: Vec<Result<ResizeVariants, BackendError>> = std::thread::scope(|scope| {
            let handles: Vec<_> = sentences
                .iter()
                .zip(&deltas)
                .map(|(s, ds)| scope.spawn(move || backend.resize_variants(s, ds)))
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().unwrap_or_else(|_| Err(BackendError::Transport("worker panicked".into()))))
                .collect()
        });

        let mut table = VariantTable::default();
        let mut partial = false;
        for (sentence, r) in sentences.iter().zip(results) {
            let r = r?;
            partial |= r.partial;
            let mut row = vec![Candidate::new(*sentence)];
            row.extend(r.candidates.iter().map(|(_, c)| Candidate::new(reintegrate(sentence, c))));
            table.sentences.push(row);
        }
        let choice = select_variants(&table, target);
        let achieved = table.total(&choice);
        if achieved.abs_diff(target) > sentences.len() {
            return Err(EngineError::UnreachableTarget { target, achieved });
        }

        let mut out = String::with_capacity(scope_text.as_str().len());
        let mut pos = 0;
        for ((span, row), &j) in spans.iter().zip(&table.sentences).zip(&choice) {
            out.push_str(scope_text.slice(pos, span.start));
            out.push_str(&row[j].text);
            pos = span.end;
        }
        out.push_str(scope_text.slice(pos, scope_text.len()));

        let mut prov = self.provenance("resize", combined_digest(&requests));
        prov.achieved_words = Some(achieved);
        prov.partial_variants = partial;
        Ok(self.outcome(text, sel, scope, &out, prov))
    }

    /// Estimates the tone of `sel` of `text`.
    pub fn estimate_tone(&self, text: &str, sel: SelectionRange) -> Result<ToneVector, EngineError> {
        let text = PlainText::new(text);
        sel.check(text.len())?;
        self.estimate_text_tone(text.slice(sel.start, sel.end))
    }

    /// Estimates the tone of a standalone passage.
    pub fn estimate_text_tone(&self, passage: &str) -> Result<ToneVector, EngineError> {
        if passage.trim().is_empty() {
            return Err(EngineError::InvalidRequest("tone estimation needs non-empty text".into()));
        }
        let req = BackendRequest::new(RequestKind::EstimateTone).slot(Slot::Selection, passage);
        let reply = self.backend.complete(&req)?;
        parse_tone(reply.first()).ok_or_else(|| {
            EngineError::Backend(BackendError::Validation(format!("unreadable tone estimate `{}`", reply.first())))
        })
    }

    /// Merges a dragged fragment into `target` of `text`.
    pub fn boolean_merge(
        &self,
        text: &str,
        fragment: &str,
        target: SelectionRange,
        op: BooleanOpKind,
    ) -> Result<TransformOutcome, EngineError> {
        let text = PlainText::new(text);
        target.check(text.len())?;
        let Some(kind) = op.request_kind() else {
            if !target.is_empty() {
                return Err(EngineError::InvalidRequest("insert needs a caret, not a span".into()));
            }
            let changeset = replace_range(&text, target, fragment);
            let end = target.start + grapheme_len(fragment);
            let digest = BackendRequest::new(RequestKind::Unite).slot(Slot::Fragment, fragment).digest();
            return Ok(TransformOutcome {
                changeset,
                new_selection: SelectionRange::new(target.start, end),
                provenance: Provenance {
                    tool: op.as_str().to_string(),
                    backend: "none".to_string(),
                    request_digest: digest,
                    achieved_words: None,
                    partial_variants: false,
                },
            });
        };
        if target.is_empty() {
            return Err(EngineError::InvalidRequest(format!("{} needs a non-empty target", op.as_str())));
        }
        let target_text = text.slice(target.start, target.end);
        let req = BackendRequest::new(kind).slot(Slot::Fragment, fragment).slot(Slot::Target, target_text);
        let reply = self.backend.complete(&req)?;
        let replacement = reintegrate(target_text, reply.first());
        let prov = self.provenance(op.as_str(), req.digest());
        Ok(self.outcome(&text, target, target, &replacement, prov))
    }
}

/// Re-applies only the surrounding whitespace of `original`.
fn keep_whitespace(original: &str, replacement: &str) -> String {
    let core = replacement.trim();
    if core.is_empty() {
        return String::new();
    }
    let lead = &original[..original.len() - original.trim_start().len()];
    let trail = &original[original.trim_end().len()..];
    format!("{lead}{core}{trail}")
}

/// Reads a tone from a JSON object, or from the first three integers.
pub fn parse_tone(reply: &str) -> Option<ToneVector> {
    if let (Some(a), Some(b)) = (reply.find('{'), reply.rfind('}')) {
        if let Ok(t) = serde_json::from_str::<ToneVector>(&reply[a..=b]) {
            return Some(t);
        }
    }
    let nums: Vec<u8> = reply
        .split(|c: char| !c.is_ascii_digit())
        .filter(|s| !s.is_empty())
        .filter_map(|s| s.parse().ok())
        .take(3)
        .collect();
    match nums[..] {
        [f, s, c] => ToneVector::new(f, s, c).ok(),
        _ => None,
    }
}
