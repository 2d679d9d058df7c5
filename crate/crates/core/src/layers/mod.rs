//! Layered documents built from anchored edits.
//!
//! Every character a layer inserts receives a [`StableId`] that is never
//! reused. Edits are anchored to those identifiers rather than to offsets,
//! so they follow the text when lower layers change, and hiding or
//! reordering a layer never rewrites anything: composition simply
//! re-resolves the anchors. An edit whose anchors cannot be resolved in the
//! text beneath it is skipped for that pass (it is *orphaned*) and comes
//! back as soon as its anchors reappear.

mod compose;
mod record;

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::changeset::ChangeSetError;

pub use compose::LayerApplication;

/// Identifier minted once per inserted grapheme.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct StableId {
    /// Creation ordinal of the owning layer.
    pub layer: u32,
    /// Position in the owning layer's mint sequence.
    pub counter: u32,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Before,
    After,
}

/// One end of an anchored span.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum AnchorBoundary {
    Begin,
    End,
    Id { id: StableId, side: Side },
}

impl AnchorBoundary {
    pub fn before(id: StableId) -> Self {
        AnchorBoundary::Id { id, side: Side::Before }
    }

    pub fn after(id: StableId) -> Self {
        AnchorBoundary::Id { id, side: Side::After }
    }

    pub fn id(&self) -> Option<StableId> {
        match self {
            AnchorBoundary::Id { id, .. } => Some(*id),
            _ => None,
        }
    }
}

/// A grapheme together with its identifier.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Cell {
    pub text: Arc<str>,
    pub id: StableId,
}

impl Cell {
    pub fn new(text: &str, id: StableId) -> Self {
        Cell { text: Arc::from(text), id }
    }
}

impl fmt::Debug for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}@{}:{}", &*self.text, self.id.layer, self.id.counter)
    }
}

/// A span replacement anchored by stable identifiers.
///
/// A pure insertion has `start == end`; a pure deletion has an empty
/// replacement.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct AnchoredEdit {
    pub start: AnchorBoundary,
    pub end: AnchorBoundary,
    pub replacement: Vec<Cell>,
}

impl AnchoredEdit {
    pub fn replacement_text(&self) -> String {
        self.replacement.iter().map(|c| &*c.text).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Layer {
    pub(crate) ordinal: u32,
    pub(crate) name: String,
    pub(crate) visible: bool,
    pub(crate) edits: Vec<AnchoredEdit>,
    pub(crate) id_counter: u32,
}

impl Layer {
    pub fn new(ordinal: u32, name: impl Into<String>) -> Self {
        Layer { ordinal, name: name.into(), visible: true, edits: Vec::new(), id_counter: 0 }
    }

    /// Rebuilds a layer from stored parts, checking that every replacement
    /// identifier belongs to the layer and lies below its counter.
    pub fn from_parts(
        ordinal: u32,
        name: String,
        visible: bool,
        id_counter: u32,
        edits: Vec<AnchoredEdit>,
    ) -> Result<Self, LayerError> {
        let mut seen = std::collections::HashSet::new();
        for edit in &edits {
            for cell in &edit.replacement {
                if cell.id.layer != ordinal || cell.id.counter >= id_counter || !seen.insert(cell.id) {
                    return Err(LayerError::ForeignId { layer: ordinal, id: cell.id });
                }
            }
        }
        Ok(Layer { ordinal, name, visible, edits, id_counter })
    }

    pub fn ordinal(&self) -> u32 {
        self.ordinal
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn is_visible(&self) -> bool {
        self.visible
    }

    pub fn edits(&self) -> &[AnchoredEdit] {
        &self.edits
    }

    pub fn id_counter(&self) -> u32 {
        self.id_counter
    }

    pub(crate) fn mint(&mut self, text: &str) -> Cell {
        let id = StableId { layer: self.ordinal, counter: self.id_counter };
        self.id_counter += 1;
        Cell::new(text, id)
    }

    /// Appends an edit without any overlap checks; minted identifiers must
    /// come from [`Layer::mint_cells`].
    pub fn push_edit_unchecked(&mut self, edit: AnchoredEdit) {
        self.edits.push(edit);
    }

    /// Mints fresh cells for the graphemes of `text`.
    pub fn mint_cells(&mut self, text: &str) -> Vec<Cell> {
        use unicode_segmentation::UnicodeSegmentation;
        text.graphemes(true).map(|g| self.mint(g)).collect()
    }
}

/// The visible text: a dense sequence of identified graphemes.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Composition {
    pub(crate) cells: Vec<Cell>,
}

impl Composition {
    pub fn from_cells(cells: Vec<Cell>) -> Self {
        Composition { cells }
    }

    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    /// The plain text, identifiers dropped.
    pub fn text(&self) -> String {
        composition_text(self)
    }
}

pub fn composition_text(c: &Composition) -> String {
    let mut s = String::with_capacity(c.cells.len());
    for cell in &c.cells {
        s.push_str(&cell.text);
    }
    s
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum LayerError {
    #[error("edit overlaps an existing edit of the active layer")]
    Overlap,
    #[error("layer {0} is hidden")]
    HiddenLayer(u32),
    #[error("no layer with ordinal {0}")]
    UnknownLayer(u32),
    #[error("layer index {index} out of range for {len} layers")]
    Index { index: usize, len: usize },
    #[error("range {start}..{end} out of bounds for length {len}")]
    OutOfBounds { start: usize, end: usize, len: usize },
    #[error("selection boundary is not anchored in the active layer's text")]
    NotAnchorable,
    #[error("composition is out of date")]
    StaleComposition,
    #[error("the change cannot be expressed on the active layer")]
    NotRepresentable,
    #[error("cannot remove the last layer")]
    LastLayer,
    #[error("layer {layer} holds identifier {id:?} it does not own or holds twice")]
    ForeignId { layer: u32, id: StableId },
    #[error("duplicate layer ordinal {0}")]
    DuplicateOrdinal(u32),
    #[error(transparent)]
    ChangeSet(#[from] ChangeSetError),
}

/// Layers ordered bottom (index 0) to top, one of which receives new edits.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LayerStack {
    layers: Vec<Layer>,
    active: u32,
    next_ordinal: u32,
}

impl Default for LayerStack {
    fn default() -> Self {
        LayerStack::new()
    }
}

impl LayerStack {
    /// A stack holding a single empty base layer.
    pub fn new() -> Self {
        LayerStack { layers: vec![Layer::new(0, "Base")], active: 0, next_ordinal: 1 }
    }

    /// A stack whose base layer inserts `text` at the beginning.
    pub fn with_text(text: &str) -> Self {
        let mut stack = LayerStack::new();
        if !text.is_empty() {
            let base = &mut stack.layers[0];
            let replacement = base.mint_cells(text);
            base.edits.push(AnchoredEdit {
                start: AnchorBoundary::Begin,
                end: AnchorBoundary::Begin,
                replacement,
            });
        }
        stack
    }

    /// Reassembles a stack from stored layers.
    pub fn from_parts(layers: Vec<Layer>, active: u32, next_ordinal: u32) -> Result<Self, LayerError> {
        if layers.is_empty() {
            return Err(LayerError::LastLayer);
        }
        let mut seen = std::collections::BTreeSet::new();
        for l in &layers {
            if !seen.insert(l.ordinal) {
                return Err(LayerError::DuplicateOrdinal(l.ordinal));
            }
        }
        let next_ordinal = next_ordinal.max(seen.last().map_or(0, |o| o + 1));
        if !seen.contains(&active) {
            return Err(LayerError::UnknownLayer(active));
        }
        Ok(LayerStack { layers, active, next_ordinal })
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn next_ordinal(&self) -> u32 {
        self.next_ordinal
    }

    pub fn active_ordinal(&self) -> u32 {
        self.active
    }

    pub fn active_index(&self) -> usize {
        self.index_of(self.active).expect("active layer exists")
    }

    pub fn active_layer(&self) -> &Layer {
        &self.layers[self.active_index()]
    }

    pub fn index_of(&self, ordinal: u32) -> Option<usize> {
        self.layers.iter().position(|l| l.ordinal == ordinal)
    }

    pub fn layer(&self, ordinal: u32) -> Option<&Layer> {
        self.layers.iter().find(|l| l.ordinal == ordinal)
    }

    pub fn layer_mut(&mut self, ordinal: u32) -> Option<&mut Layer> {
        self.layers.iter_mut().find(|l| l.ordinal == ordinal)
    }

    /// Adds an empty layer at the top and makes it active.
    pub fn add_layer(&mut self, name: impl Into<String>) -> &Layer {
        let ordinal = self.next_ordinal;
        self.next_ordinal += 1;
        self.layers.push(Layer::new(ordinal, name));
        self.active = ordinal;
        self.layers.last().expect("just pushed")
    }

    pub fn set_visibility(&mut self, ordinal: u32, visible: bool) -> Result<(), LayerError> {
        let layer = self.layer_mut(ordinal).ok_or(LayerError::UnknownLayer(ordinal))?;
        layer.visible = visible;
        Ok(())
    }

    pub fn rename_layer(&mut self, ordinal: u32, name: impl Into<String>) -> Result<(), LayerError> {
        let layer = self.layer_mut(ordinal).ok_or(LayerError::UnknownLayer(ordinal))?;
        layer.name = name.into();
        Ok(())
    }

    pub fn set_active(&mut self, ordinal: u32) -> Result<(), LayerError> {
        self.index_of(ordinal).ok_or(LayerError::UnknownLayer(ordinal))?;
        self.active = ordinal;
        Ok(())
    }

    /// Moves the layer at `from` so that it ends up at index `to`.
    pub fn reorder_layer(&mut self, from: usize, to: usize) -> Result<(), LayerError> {
        let len = self.layers.len();
        for index in [from, to] {
            if index >= len {
                return Err(LayerError::Index { index, len });
            }
        }
        let layer = self.layers.remove(from);
        self.layers.insert(to, layer);
        Ok(())
    }

    /// Deletes a layer and its edits. The topmost remaining layer becomes
    /// active if the removed one was.
    pub fn remove_layer(&mut self, ordinal: u32) -> Result<Layer, LayerError> {
        let index = self.index_of(ordinal).ok_or(LayerError::UnknownLayer(ordinal))?;
        if self.layers.len() == 1 {
            return Err(LayerError::LastLayer);
        }
        let removed = self.layers.remove(index);
        if self.active == ordinal {
            self.active = self.layers.last().expect("non-empty").ordinal;
        }
        Ok(removed)
    }

    /// Composites every visible layer, bottom to top.
    pub fn compose(&self) -> Composition {
        self.compose_range(0..self.layers.len())
    }

    /// Composites the visible layers strictly below `index`.
    pub fn compose_below(&self, index: usize) -> Composition {
        self.compose_range(0..index)
    }

    pub(crate) fn compose_range(&self, range: std::ops::Range<usize>) -> Composition {
        let mut cells = Vec::new();
        for layer in &self.layers[range] {
            if layer.visible {
                cells = compose::apply_layer(cells, layer).cells;
            }
        }
        Composition { cells }
    }
}

/// Free-function form of [`LayerStack::compose`].
pub fn compose(stack: &LayerStack) -> Composition {
    stack.compose()
}
