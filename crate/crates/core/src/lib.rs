//! Engine for layered, non-destructive text editing.
//!
//! - [`text`]: grapheme-aware segmentation, word counts, reintegration.
//! - [`layers`]: stable-identifier documents composited from layers.
//! - [`changeset`]: diffs, inversion, position mapping and animation timelines.
//! - [`tone`]: tone vectors, colours and the tone wheel.
//! - [`backend`], [`engine`]: language backends and the tools built on them.
//! - [`document`]: persisted documents with fragments and undo.

pub mod backend;
pub mod changeset;
pub mod document;
pub mod engine;
pub mod layers;
pub mod text;
pub mod tone;

pub use changeset::{diff, timeline, AnimationTimeline, Bias, ChangeSet, Op};
pub use layers::{AnchorBoundary, AnchoredEdit, Cell, Composition, Layer, LayerStack, StableId};
pub use text::PlainText;
pub use tone::{ToneColour, ToneVector, WheelPosition};
pub use backend::{BackendConfig, BackendError, LanguageBackend, MockBackend};
pub use document::{DocumentError, DocumentRecord, DocumentStore, DocumentView};
pub use engine::{Engine, EngineError, SelectionRange, Tool, TransformOutcome};
