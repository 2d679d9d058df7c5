use std::sync::Arc;

use rustc_hash::FxHashMap;

use super::compose::apply_layer;
use super::{AnchorBoundary, AnchoredEdit, Cell, Composition, LayerError, LayerStack, StableId};
use crate::changeset::ChangeSet;
use crate::text::PlainText;

/// Largest interior window (target x base cells) aligned by LCS.
const ALIGN_CELL_CAP: usize = 4_000_000;

/// Where a selection lands in the text beneath the active layer.
struct BaseSpan {
    start: usize,
    end: usize,
    anchors: (AnchorBoundary, AnchorBoundary),
}

fn index_of(cells: &[Cell]) -> FxHashMap<StableId, usize> {
    cells.iter().enumerate().map(|(i, c)| (c.id, i)).collect()
}

fn resolve_in(boundary: AnchorBoundary, index: &FxHashMap<StableId, usize>, len: usize) -> Option<usize> {
    match boundary {
        AnchorBoundary::Begin => Some(0),
        AnchorBoundary::End => Some(len),
        AnchorBoundary::Id { id, side } => {
            let at = *index.get(&id)?;
            Some(if side == super::Side::Before { at } else { at + 1 })
        }
    }
}

/// Whether two spans of one layer would not commute (closed-interval touch,
/// except two non-empty spans that merely abut).
fn conflicts(a: (usize, usize), b: (usize, usize)) -> bool {
    let ((a0, a1), (b0, b1)) = if a <= b { (a, b) } else { (b, a) };
    !(a1 < b0 || (a1 == b0 && a0 < a1 && b0 < b1))
}

impl LayerStack {
    /// Records a replacement of `start..end` of `composition` on the active
    /// layer.
    ///
    /// `composition` must be the current [`LayerStack::compose`] output. The
    /// span is anchored to identifiers of the text beneath the active layer:
    /// a non-empty span runs from before its first cell to after its last,
    /// an insertion sits before the cell at its position, with the
    /// `Begin`/`End` sentinels at the extremes. Spans that would touch one
    /// of the active layer's existing edits are rejected with
    /// [`LayerError::Overlap`]; use [`LayerStack::apply_changeset`] to merge
    /// instead.
    pub fn record_edit(
        &mut self,
        composition: &Composition,
        start: usize,
        end: usize,
        replacement: &str,
    ) -> Result<AnchoredEdit, LayerError> {
        let active_index = self.active_index();
        let ordinal = self.active;
        if !self.layers[active_index].visible {
            return Err(LayerError::HiddenLayer(ordinal));
        }
        let len = composition.len();
        if start > end || end > len {
            return Err(LayerError::OutOfBounds { start, end, len });
        }
        if *composition != self.compose() {
            return Err(LayerError::StaleComposition);
        }
        let below = self.compose_below(active_index);
        let below_index = index_of(&below.cells);
        let cells = &composition.cells;

        let span = if start < end {
            if cells[start..end].iter().any(|c| c.id.layer == ordinal) {
                return Err(LayerError::Overlap);
            }
            let first = *below_index.get(&cells[start].id).ok_or(LayerError::NotAnchorable)?;
            let last = *below_index.get(&cells[end - 1].id).ok_or(LayerError::NotAnchorable)?;
            BaseSpan {
                start: first,
                end: last + 1,
                anchors: (AnchorBoundary::before(cells[start].id), AnchorBoundary::after(cells[end - 1].id)),
            }
        } else {
            self.insertion_point(cells, start, &below_index, below.len(), ordinal)?
        };

        let layer = &self.layers[active_index];
        for e in &layer.edits {
            let (Some(s), Some(t)) = (
                resolve_in(e.start, &below_index, below.len()),
                resolve_in(e.end, &below_index, below.len()),
            ) else {
                continue;
            };
            if s <= t && conflicts((s, t), (span.start, span.end)) {
                return Err(LayerError::Overlap);
            }
        }

        let layer = &mut self.layers[active_index];
        let replacement = layer.mint_cells(replacement);
        let edit = AnchoredEdit { start: span.anchors.0, end: span.anchors.1, replacement };
        layer.edits.push(edit.clone());
        Ok(edit)
    }

    fn insertion_point(
        &self,
        cells: &[Cell],
        at: usize,
        below_index: &FxHashMap<StableId, usize>,
        below_len: usize,
        ordinal: u32,
    ) -> Result<BaseSpan, LayerError> {
        let point = |pos: usize, anchor: AnchorBoundary| BaseSpan { start: pos, end: pos, anchors: (anchor, anchor) };
        if at == 0 {
            return Ok(point(0, AnchorBoundary::Begin));
        }
        if at == cells.len() {
            return Ok(point(below_len, AnchorBoundary::End));
        }
        if let Some(&i) = below_index.get(&cells[at].id) {
            return Ok(point(i, AnchorBoundary::before(cells[at].id)));
        }
        if let Some(&i) = below_index.get(&cells[at - 1].id) {
            return Ok(point(i + 1, AnchorBoundary::after(cells[at - 1].id)));
        }
        if cells[at].id.layer == ordinal || cells[at - 1].id.layer == ordinal {
            Err(LayerError::Overlap)
        } else {
            Err(LayerError::NotAnchorable)
        }
    }

    /// Applies a changeset over the current composition text by rewriting
    /// the active layer.
    ///
    /// Existing edits of the active layer that the change touches are merged
    /// with it. Graphemes that survive keep their identifiers, new ones are
    /// minted on the active layer, and edits the change does not touch are
    /// kept unchanged, as are edits orphaned in the current composition.
    /// Fails with [`LayerError::NotRepresentable`] (leaving the stack
    /// untouched) when the change would have to alter text owned by a layer
    /// above the active one.
    pub fn apply_changeset(&mut self, cs: &ChangeSet) -> Result<(), LayerError> {
        let active_index = self.active_index();
        let ordinal = self.active;
        if !self.layers[active_index].visible {
            return Err(LayerError::HiddenLayer(ordinal));
        }
        let below = self.compose_below(active_index);
        let own = apply_layer(below.cells.clone(), &self.layers[active_index]);
        let working = own.cells;
        let full = {
            let mut cells = working.clone();
            for layer in &self.layers[active_index + 1..] {
                if layer.visible {
                    cells = apply_layer(cells, layer).cells;
                }
            }
            Composition { cells }
        };
        let full_text = PlainText::new(full.text());
        let expected = cs.apply(&full_text)?;
        if cs.is_identity() {
            return Ok(());
        }

        // Project the changed regions from the full composition onto the
        // active layer's own output.
        let working_index = index_of(&working);
        let mut hunks: Vec<(usize, usize, String)> = Vec::new();
        for h in cs.hunks() {
            let inside: Vec<usize> = full.cells[h.source_start..h.source_end]
                .iter()
                .filter_map(|c| working_index.get(&c.id).copied())
                .collect();
            let (ws, we) = match (inside.first(), inside.last()) {
                (Some(&a), Some(&b)) => (a, b + 1),
                _ => {
                    let gap = if let Some(i) = full.cells.get(h.source_end).and_then(|c| working_index.get(&c.id)) {
                        *i
                    } else if let Some(i) = h
                        .source_start
                        .checked_sub(1)
                        .and_then(|p| working_index.get(&full.cells[p].id))
                    {
                        i + 1
                    } else if h.source_start == 0 {
                        0
                    } else if h.source_end == full.len() {
                        working.len()
                    } else {
                        return Err(LayerError::NotRepresentable);
                    };
                    (gap, gap)
                }
            };
            match hunks.last_mut() {
                Some(prev) if ws < prev.1 => return Err(LayerError::NotRepresentable),
                Some(prev) if ws == prev.1 => {
                    prev.1 = we;
                    prev.2.push_str(&h.insert);
                }
                _ => hunks.push((ws, we, h.insert)),
            }
        }

        // Desired output of the active layer; `None` marks a fresh grapheme.
        let mut target: Vec<(Arc<str>, Option<StableId>)> = Vec::with_capacity(working.len());
        let mut pos = 0;
        for (ws, we, insert) in &hunks {
            target.extend(working[pos..*ws].iter().map(|c| (c.text.clone(), Some(c.id))));
            target.extend(
                unicode_segmentation::UnicodeSegmentation::graphemes(insert.as_str(), true)
                    .map(|g| (Arc::<str>::from(g), None)),
            );
            pos = *we;
        }
        target.extend(working[pos..].iter().map(|c| (c.text.clone(), Some(c.id))));

        let saved = self.layers[active_index].clone();
        self.rebuild_layer(active_index, &below.cells, &target, &own.applied);
        if self.compose().text() != expected {
            self.layers[active_index] = saved;
            return Err(LayerError::NotRepresentable);
        }
        Ok(())
    }

    /// Replaces the live edits of a layer with the minimal set of edits that
    /// turns `below` into `target`.
    fn rebuild_layer(
        &mut self,
        layer_index: usize,
        below: &[Cell],
        target: &[(Arc<str>, Option<StableId>)],
        applied: &[bool],
    ) {
        let below_index = index_of(below);

        struct Region {
            start: usize,
            end: usize,
            cells: Vec<(Arc<str>, Option<StableId>)>,
        }
        let matched = align(below, &below_index, target);
        let own = self.layers[layer_index].ordinal;
        let mut regions: Vec<Region> = Vec::new();
        let mut pending: Vec<(Arc<str>, Option<StableId>)> = Vec::new();
        let mut next_kept = 0;
        for (cell, m) in target.iter().zip(&matched) {
            match *m {
                Some(bi) => {
                    if bi > next_kept || !pending.is_empty() {
                        regions.push(Region { start: next_kept, end: bi, cells: std::mem::take(&mut pending) });
                    }
                    next_kept = bi + 1;
                }
                // Lower cells that lost their place are re-minted.
                None => pending.push((cell.0.clone(), cell.1.filter(|id| id.layer == own))),
            }
        }
        if below.len() > next_kept || !pending.is_empty() {
            regions.push(Region { start: next_kept, end: below.len(), cells: pending });
        }
        regions.retain(|r| r.start < r.end || !r.cells.is_empty());

        let layer = &mut self.layers[layer_index];
        let old_edits = std::mem::take(&mut layer.edits);
        let mut reusable: FxHashMap<(usize, usize), AnchoredEdit> = FxHashMap::default();
        let mut edits = Vec::with_capacity(old_edits.len() + 1);
        for (k, e) in old_edits.into_iter().enumerate() {
            if !applied.get(k).copied().unwrap_or(false) {
                edits.push(e);
                continue;
            }
            if let (Some(s), Some(t)) =
                (resolve_in(e.start, &below_index, below.len()), resolve_in(e.end, &below_index, below.len()))
            {
                reusable.insert((s, t), e);
            }
        }

        for r in regions {
            if let Some(old) = reusable.remove(&(r.start, r.end)) {
                let same = old.replacement.len() == r.cells.len()
                    && old.replacement.iter().zip(&r.cells).all(|(a, b)| Some(a.id) == b.1);
                if same {
                    edits.push(old);
                    continue;
                }
            }
            let replacement: Vec<Cell> = r
                .cells
                .iter()
                .map(|(text, id)| match id {
                    Some(id) => Cell { text: text.clone(), id: *id },
                    None => layer.mint(text),
                })
                .collect();
            let (start, end) = if r.start < r.end {
                (AnchorBoundary::before(below[r.start].id), AnchorBoundary::after(below[r.end - 1].id))
            } else {
                let anchor = if r.start == 0 {
                    AnchorBoundary::Begin
                } else if r.start == below.len() {
                    AnchorBoundary::End
                } else {
                    AnchorBoundary::before(below[r.start].id)
                };
                (anchor, anchor)
            };
            edits.push(AnchoredEdit { start, end, replacement });
        }
        layer.edits = edits;
    }
}

/// Maps each target cell to the cell of `below` it keeps, if any.
///
/// Cells carrying a lower identifier keep it where order allows. Any cell
/// may instead take over a lower cell with equal text, at lower weight. The common prefix and
/// suffix match directly, the rest by a weighted LCS, or by identifiers
/// alone when the window is too large.
fn align(
    below: &[Cell],
    below_index: &FxHashMap<StableId, usize>,
    target: &[(Arc<str>, Option<StableId>)],
) -> Vec<Option<usize>> {
    let same = |t: &(Arc<str>, Option<StableId>), b: &Cell| t.1 == Some(b.id);
    let mut out = vec![None; target.len()];
    let mut pre = 0;
    while pre < target.len() && pre < below.len() && same(&target[pre], &below[pre]) {
        out[pre] = Some(pre);
        pre += 1;
    }
    let mut suf = 0;
    while suf < target.len() - pre
        && suf < below.len() - pre
        && same(&target[target.len() - 1 - suf], &below[below.len() - 1 - suf])
    {
        out[target.len() - 1 - suf] = Some(below.len() - 1 - suf);
        suf += 1;
    }
    let t = &target[pre..target.len() - suf];
    let b = &below[pre..below.len() - suf];
    if t.len().saturating_mul(b.len()) > ALIGN_CELL_CAP {
        let mut next = pre;
        for (k, cell) in t.iter().enumerate() {
            if let Some(&bi) = cell.1.and_then(|id| below_index.get(&id)) {
                if bi >= next {
                    out[pre + k] = Some(bi);
                    next = bi + 1;
                }
            }
        }
        return out;
    }
    let weight = |x: &(Arc<str>, Option<StableId>), y: &Cell| -> u32 {
        match x.1 {
            Some(id) if id == y.id => 2,
            _ if x.0 == y.text => 1,
            _ => 0,
        }
    };
    let (n, m) = (t.len(), b.len());
    let w1 = m + 1;
    let mut dp = vec![0u32; (n + 1) * w1];
    for i in (0..n).rev() {
        for j in (0..m).rev() {
            let w = weight(&t[i], &b[j]);
            let mut v = dp[(i + 1) * w1 + j].max(dp[i * w1 + j + 1]);
            if w > 0 {
                v = v.max(w + dp[(i + 1) * w1 + j + 1]);
            }
            dp[i * w1 + j] = v;
        }
    }
    let (mut i, mut j) = (0, 0);
    while i < n && j < m {
        let w = weight(&t[i], &b[j]);
        if w > 0 && dp[i * w1 + j] == w + dp[(i + 1) * w1 + j + 1] {
            out[pre + i] = Some(pre + j);
            i += 1;
            j += 1;
        } else if dp[i * w1 + j] == dp[(i + 1) * w1 + j] {
            i += 1;
        } else {
            j += 1;
        }
    }
    out
}
