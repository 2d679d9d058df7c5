use rustc_hash::FxHashMap;

use super::{AnchorBoundary, AnchoredEdit, Cell, Layer, Side, StableId};

/// Result of applying one layer on top of a composition.
pub struct LayerApplication {
    pub cells: Vec<Cell>,
    /// `applied[k]` is false when edit `k` was orphaned in this pass.
    pub applied: Vec<bool>,
}

enum Resolved {
    Span(usize, usize),
    Orphaned,
    /// An anchor refers to the layer's own identifiers, which only exist
    /// once earlier edits of the same layer have been applied.
    SelfAnchored,
}

fn resolve(boundary: AnchorBoundary, index: &FxHashMap<StableId, usize>, len: usize) -> Option<usize> {
    match boundary {
        AnchorBoundary::Begin => Some(0),
        AnchorBoundary::End => Some(len),
        AnchorBoundary::Id { id, side } => {
            let at = *index.get(&id)?;
            if at == usize::MAX {
                return None;
            }
            Some(if side == Side::Before { at } else { at + 1 })
        }
    }
}

fn resolve_edit(
    edit: &AnchoredEdit,
    ordinal: u32,
    index: &FxHashMap<StableId, usize>,
    len: usize,
) -> Resolved {
    let start = resolve(edit.start, index, len);
    let end = resolve(edit.end, index, len);
    match (start, end) {
        (Some(s), Some(e)) if s <= e => Resolved::Span(s, e),
        (Some(_), Some(_)) => Resolved::Orphaned,
        _ => {
            let self_anchored = [edit.start, edit.end]
                .iter()
                .filter_map(AnchorBoundary::id)
                .any(|id| id.layer == ordinal);
            if self_anchored {
                Resolved::SelfAnchored
            } else {
                Resolved::Orphaned
            }
        }
    }
}

/// Applies a layer's edits, in order, to `cells`.
///
/// When every live edit resolves against the incoming text and the spans
/// are separated, the edits commute and are spliced in a single pass. Otherwise the edits
/// are applied one after another, each resolved in the text left by the
/// previous ones.
pub(crate) fn apply_layer(cells: Vec<Cell>, layer: &Layer) -> LayerApplication {
    let edits = &layer.edits;
    if edits.is_empty() {
        return LayerApplication { cells, applied: Vec::new() };
    }
    let mut index: FxHashMap<StableId, usize> = FxHashMap::default();
    index.reserve(edits.len() * 2);
    for e in edits {
        for id in [e.start.id(), e.end.id()].into_iter().flatten() {
            index.insert(id, usize::MAX);
        }
    }
    for (i, c) in cells.iter().enumerate() {
        if let Some(slot) = index.get_mut(&c.id) {
            *slot = i;
        }
    }

    let mut spans = Vec::with_capacity(edits.len());
    let mut applied = vec![false; edits.len()];
    for (k, e) in edits.iter().enumerate() {
        match resolve_edit(e, layer.ordinal, &index, cells.len()) {
            Resolved::Span(s, t) => spans.push((s, t, k)),
            Resolved::Orphaned => {}
            Resolved::SelfAnchored => return apply_sequential(cells, layer),
        }
    }
    spans.sort_unstable();
    // Abutting spans commute only if neither anchors on a cell the other deletes.
    let separated = spans.windows(2).all(|w| {
        let (a0, a1, ka) = w[0];
        let (b0, b1, kb) = w[1];
        a1 < b0
            || (a1 == b0
                && a0 < a1
                && b0 < b1
                && !matches!(edits[ka].end, AnchorBoundary::Id { side: Side::Before, .. })
                && !matches!(edits[kb].start, AnchorBoundary::Id { side: Side::After, .. }))
    });
    if !separated {
        return apply_sequential(cells, layer);
    }

    let inserted: usize = spans.iter().map(|&(_, _, k)| edits[k].replacement.len()).sum();
    let mut out = Vec::with_capacity(cells.len() + inserted);
    let mut src = cells.into_iter();
    let mut pos = 0;
    for &(s, t, k) in &spans {
        out.extend(src.by_ref().take(s - pos));
        for _ in s..t {
            src.next();
        }
        out.extend(edits[k].replacement.iter().cloned());
        applied[k] = true;
        pos = t;
    }
    out.extend(src);
    LayerApplication { cells: out, applied }
}

fn position(cells: &[Cell], boundary: AnchorBoundary) -> Option<usize> {
    match boundary {
        AnchorBoundary::Begin => Some(0),
        AnchorBoundary::End => Some(cells.len()),
        AnchorBoundary::Id { id, side } => {
            let at = cells.iter().position(|c| c.id == id)?;
            Some(if side == Side::Before { at } else { at + 1 })
        }
    }
}

fn apply_sequential(mut cells: Vec<Cell>, layer: &Layer) -> LayerApplication {
    let mut applied = vec![false; layer.edits.len()];
    for (k, e) in layer.edits.iter().enumerate() {
        if let (Some(s), Some(t)) = (position(&cells, e.start), position(&cells, e.end)) {
            if s <= t {
                cells.splice(s..t, e.replacement.iter().cloned());
                applied[k] = true;
            }
        }
    }
    LayerApplication { cells, applied }
}
