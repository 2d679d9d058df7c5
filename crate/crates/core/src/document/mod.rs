//! Documents: a layer stack plus fragments, tone and an undoable log.

mod schema;
mod store;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::changeset::{diff, timeline, AnimationTimeline, ChangeSet, Op};
use crate::engine::{
    replace_range, BooleanOpKind, Engine, EngineError, Provenance, SelectionRange, Tool, TransformOutcome,
};
use crate::layers::{LayerError, LayerStack};
use crate::text::PlainText;
use crate::tone::ToneVector;

pub use schema::{from_json, to_canonical_json, FORMAT_VERSION};
pub use store::{load_file, new_id, now_ms, save_file, DocumentStore, SharedDocument};

/// Floating text on the canvas.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Fragment {
    pub id: String,
    pub text: String,
    pub x: f64,
    pub y: f64,
    pub width: f64,
}

impl Fragment {
    pub fn validate(&self) -> Result<(), DocumentError> {
        if self.text.is_empty() {
            return Err(DocumentError::Invalid("fragment text is empty".into()));
        }
        if !(self.x.is_finite() && self.y.is_finite() && self.width.is_finite()) || self.width < 0.0 {
            return Err(DocumentError::Invalid("fragment geometry must be finite with width ≥ 0".into()));
        }
        Ok(())
    }
}

/// Partial update of a fragment.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FragmentPatch {
    pub text: Option<String>,
    pub x: Option<f64>,
    pub y: Option<f64>,
    pub width: Option<f64>,
}

/// Partial update of a layer. `index` moves the layer to that stack
/// position (0 = bottom).
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayerPatch {
    pub name: Option<String>,
    pub visible: Option<bool>,
    pub index: Option<usize>,
    pub active: Option<bool>,
}

/// One undoable operation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OpLogEntry {
    pub outcome: TransformOutcome,
    pub timestamp: u64,
    /// Ordinal of the layer the change was recorded on.
    pub layer: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fragment_created: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fragment_consumed: Option<Fragment>,
}

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum DocumentError {
    #[error("{0} not found")]
    NotFound(String),
    #[error("{0}")]
    Invalid(String),
    #[error("{0}")]
    Conflict(String),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error("stored document is unreadable: {0}")]
    Corrupt(String),
    #[error("storage failed: {0}")]
    Io(String),
}

impl From<LayerError> for DocumentError {
    fn from(e: LayerError) -> Self {
        match e {
            LayerError::UnknownLayer(o) => DocumentError::NotFound(format!("layer {o}")),
            LayerError::Index { .. } | LayerError::OutOfBounds { .. } => DocumentError::Invalid(e.to_string()),
            other => DocumentError::Conflict(other.to_string()),
        }
    }
}

/// The visible effect of a mutation, as broadcast to subscribers.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Change {
    pub changeset: ChangeSet,
    pub timeline: AnimationTimeline,
    pub revision: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LayerView {
    pub ordinal: u32,
    pub name: String,
    pub visible: bool,
    pub active: bool,
    pub edit_count: usize,
}

/// Client-facing state of a document.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DocumentView {
    pub id: String,
    pub text: String,
    pub revision: u64,
    pub active_layer: u32,
    /// Bottom to top.
    pub layers: Vec<LayerView>,
    pub fragments: Vec<Fragment>,
    pub current_tone: ToneVector,
    pub op_count: usize,
    pub created: u64,
    pub modified: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DocumentRecord {
    pub id: String,
    pub stack: LayerStack,
    pub fragments: Vec<Fragment>,
    pub current_tone: ToneVector,
    pub op_log: Vec<OpLogEntry>,
    pub revision: u64,
    pub created_ms: u64,
    pub modified_ms: u64,
}

fn digest_of(text: &str) -> String {
    hex::encode(Sha256::digest(text.as_bytes()))
}

impl DocumentRecord {
    /// A document whose base layer holds `text` as one insertion.
    pub fn new(id: impl Into<String>, text: &str, now: u64) -> Self {
        DocumentRecord {
            id: id.into(),
            stack: LayerStack::with_text(text),
            fragments: Vec::new(),
            current_tone: ToneVector::NEUTRAL,
            op_log: Vec::new(),
            revision: 0,
            created_ms: now,
            modified_ms: now,
        }
    }

    pub fn text(&self) -> String {
        self.stack.compose().text()
    }

    pub fn view(&self) -> DocumentView {
        let active = self.stack.active_ordinal();
        DocumentView {
            id: self.id.clone(),
            text: self.text(),
            revision: self.revision,
            active_layer: active,
            layers: self
                .stack
                .layers()
                .iter()
                .map(|l| LayerView {
                    ordinal: l.ordinal(),
                    name: l.name().to_string(),
                    visible: l.is_visible(),
                    active: l.ordinal() == active,
                    edit_count: l.edits().len(),
                })
                .collect(),
            fragments: self.fragments.clone(),
            current_tone: self.current_tone,
            op_count: self.op_log.len(),
            created: self.created_ms,
            modified: self.modified_ms,
        }
    }

    fn commit(&mut self, changeset: ChangeSet, now: u64) -> Change {
        self.revision += 1;
        self.modified_ms = now.max(self.modified_ms);
        Change { timeline: timeline(&changeset), changeset, revision: self.revision }
    }

    /// Commits a change to the composition computed by diffing.
    fn commit_diff(&mut self, before: &str, now: u64) -> Change {
        let after = self.text();
        self.commit(diff(before, &after), now)
    }

    fn ensure_writable(&self) -> Result<(), DocumentError> {
        let active = self.stack.active_ordinal();
        if !self.stack.active_layer().is_visible() {
            return Err(LayerError::HiddenLayer(active).into());
        }
        Ok(())
    }

    /// Records an outcome on the active layer and logs it.
    pub fn apply_outcome(
        &mut self,
        outcome: TransformOutcome,
        now: u64,
        fragment_created: Option<String>,
        fragment_consumed: Option<Fragment>,
    ) -> Result<Change, DocumentError> {
        self.stack.apply_changeset(&outcome.changeset)?;
        let changeset = outcome.changeset.clone();
        self.op_log.push(OpLogEntry {
            outcome,
            timestamp: now,
            layer: self.stack.active_ordinal(),
            fragment_created,
            fragment_consumed,
        });
        Ok(self.commit(changeset, now))
    }

    pub fn transform(
        &mut self,
        engine: &Engine,
        sel: SelectionRange,
        tool: &Tool,
        now: u64,
    ) -> Result<(Change, TransformOutcome), DocumentError> {
        self.ensure_writable()?;
        let outcome = engine.transform(&self.text(), sel, tool)?;
        let change = self.apply_outcome(outcome.clone(), now, None, None)?;
        Ok((change, outcome))
    }

    /// Estimates the tone of a selection and makes it the current tone.
    pub fn estimate_tone(
        &mut self,
        engine: &Engine,
        sel: SelectionRange,
        now: u64,
    ) -> Result<(ToneVector, Change), DocumentError> {
        let tone = engine.estimate_tone(&self.text(), sel)?;
        Ok((tone, self.set_tone(tone, now)))
    }

    pub fn set_tone(&mut self, tone: ToneVector, now: u64) -> Change {
        self.current_tone = tone;
        let len = PlainText::new(self.text()).len();
        self.commit(ChangeSet::from_ops([Op::Retain(len)]), now)
    }

    /// Applies the inverse of the last logged change on the layer it was
    /// recorded on.
    pub fn undo(&mut self, now: u64) -> Result<Change, DocumentError> {
        let entry = self.op_log.pop().ok_or_else(|| DocumentError::Conflict("nothing to undo".into()))?;
        let inverse = entry.outcome.changeset.invert();
        let active = self.stack.active_ordinal();
        let applied = self
            .stack
            .set_active(entry.layer)
            .and_then(|_| {
                if self.stack.active_layer().is_visible() {
                    self.stack.apply_changeset(&inverse)
                } else {
                    Err(LayerError::HiddenLayer(entry.layer))
                }
            })
            .map_err(|e| DocumentError::Conflict(format!("cannot undo: {e}")));
        self.stack.set_active(active).expect("the previously active layer still exists");
        if let Err(e) = applied {
            self.op_log.push(entry);
            return Err(e);
        }
        if let Some(fid) = &entry.fragment_created {
            self.fragments.retain(|f| &f.id != fid);
        }
        if let Some(f) = entry.fragment_consumed {
            self.fragments.push(f);
        }
        Ok(self.commit(inverse, now))
    }

    /// Cuts a selection out of the text into a new fragment.
    pub fn fragment_from_selection(
        &mut self,
        sel: SelectionRange,
        x: f64,
        y: f64,
        fragment_id: String,
        now: u64,
    ) -> Result<(Fragment, Change), DocumentError> {
        self.ensure_writable()?;
        let text = PlainText::new(self.text());
        sel.check(text.len())?;
        if sel.is_empty() {
            return Err(DocumentError::Invalid("fragment needs a non-empty selection".into()));
        }
        let cut = text.slice(sel.start, sel.end).to_string();
        let width = crate::text::grapheme_len(&cut) as f64;
        let fragment = Fragment { id: fragment_id, text: cut, x, y, width };
        fragment.validate()?;
        let outcome = TransformOutcome {
            changeset: replace_range(&text, sel, ""),
            new_selection: SelectionRange::new(sel.start, sel.start),
            provenance: Provenance {
                tool: "fragment".into(),
                backend: "none".into(),
                request_digest: digest_of(&fragment.text),
                achieved_words: None,
                partial_variants: false,
            },
        };
        let change = self.apply_outcome(outcome, now, Some(fragment.id.clone()), None)?;
        self.fragments.push(fragment.clone());
        Ok((fragment, change))
    }

    pub fn update_fragment(&mut self, fragment_id: &str, patch: &FragmentPatch, now: u64) -> Result<(Fragment, Change), DocumentError> {
        let f = self
            .fragments
            .iter_mut()
            .find(|f| f.id == fragment_id)
            .ok_or_else(|| DocumentError::NotFound(format!("fragment {fragment_id}")))?;
        let mut updated = f.clone();
        if let Some(t) = &patch.text {
            updated.text = t.clone();
        }
        updated.x = patch.x.unwrap_or(updated.x);
        updated.y = patch.y.unwrap_or(updated.y);
        updated.width = patch.width.unwrap_or(updated.width);
        updated.validate()?;
        *f = updated.clone();
        let len = PlainText::new(self.text()).len();
        Ok((updated, self.commit(ChangeSet::from_ops([Op::Retain(len)]), now)))
    }

    /// Merges a fragment into the text; the fragment is consumed on success.
    pub fn drop_fragment(
        &mut self,
        engine: &Engine,
        fragment_id: &str,
        op: BooleanOpKind,
        target: SelectionRange,
        now: u64,
    ) -> Result<(Change, TransformOutcome), DocumentError> {
        self.ensure_writable()?;
        let index = self
            .fragments
            .iter()
            .position(|f| f.id == fragment_id)
            .ok_or_else(|| DocumentError::NotFound(format!("fragment {fragment_id}")))?;
        let fragment = self.fragments[index].clone();
        let outcome = engine.boolean_merge(&self.text(), &fragment.text, target, op)?;
        let change = self.apply_outcome(outcome.clone(), now, None, Some(fragment))?;
        self.fragments.remove(index);
        Ok((change, outcome))
    }

    /// Adds a layer on top and makes it active.
    pub fn add_layer(&mut self, name: &str, now: u64) -> (u32, Change) {
        let ordinal = self.stack.add_layer(name).ordinal();
        let len = PlainText::new(self.text()).len();
        (ordinal, self.commit(ChangeSet::from_ops([Op::Retain(len)]), now))
    }

    pub fn update_layer(&mut self, ordinal: u32, patch: &LayerPatch, now: u64) -> Result<Change, DocumentError> {
        let before = self.text();
        let from = self.stack.index_of(ordinal).ok_or(LayerError::UnknownLayer(ordinal))?;
        if let Some(name) = &patch.name {
            self.stack.rename_layer(ordinal, name.as_str())?;
        }
        if let Some(v) = patch.visible {
            self.stack.set_visibility(ordinal, v)?;
        }
        if let Some(to) = patch.index {
            self.stack.reorder_layer(from, to)?;
        }
        if patch.active == Some(true) {
            self.stack.set_active(ordinal)?;
        }
        Ok(self.commit_diff(&before, now))
    }

    pub fn delete_layer(&mut self, ordinal: u32, now: u64) -> Result<Change, DocumentError> {
        let before = self.text();
        self.stack.remove_layer(ordinal)?;
        // Entries recorded on the removed layer can no longer be undone.
        self.op_log.retain(|e| e.layer != ordinal);
        Ok(self.commit_diff(&before, now))
    }
}
