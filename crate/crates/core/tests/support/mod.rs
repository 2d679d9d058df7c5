//! Independent oracles and generators shared by the integration tests.
#![allow(dead_code)]

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use textlayers_core::changeset::diff;
use textlayers_core::layers::{AnchorBoundary, AnchoredEdit, Cell, Layer, LayerStack, Side, StableId};
use unicode_segmentation::UnicodeSegmentation;

pub const MAX_LAYERS: usize = 8;
pub const MAX_EDITS: usize = 50;
pub const MAX_CHARS: usize = 500;

/// Composes by folding visible layers bottom to top, applying each edit in
/// order and locating every anchor by a fresh linear scan of plain tuples.
pub fn naive_compose(stack: &LayerStack) -> Vec<(String, StableId)> {
    let mut seq: Vec<(String, StableId)> = Vec::new();
    for layer in stack.layers() {
        if !layer.is_visible() {
            continue;
        }
        for edit in layer.edits() {
            let locate = |b: &AnchorBoundary, seq: &[(String, StableId)]| -> Option<usize> {
                match b {
                    AnchorBoundary::Begin => Some(0),
                    AnchorBoundary::End => Some(seq.len()),
                    AnchorBoundary::Id { id, side } => {
                        for (i, (_, cid)) in seq.iter().enumerate() {
                            if cid == id {
                                return Some(match side {
                                    Side::Before => i,
                                    Side::After => i + 1,
                                });
                            }
                        }
                        None
                    }
                }
            };
            let (Some(s), Some(e)) = (locate(&edit.start, &seq), locate(&edit.end, &seq)) else {
                continue;
            };
            if e < s {
                continue;
            }
            let mut next = seq[..s].to_vec();
            for c in &edit.replacement {
                next.push((c.text.to_string(), c.id));
            }
            next.extend_from_slice(&seq[e..]);
            seq = next;
        }
    }
    seq
}

pub fn cells_as_tuples(cells: &[Cell]) -> Vec<(String, StableId)> {
    cells.iter().map(|c| (c.text.to_string(), c.id)).collect()
}

const ALPHABET: &[&str] = &["a", "b", "c", "d", " ", " ", ".", "é", "e\u{301}", "👍🏽", "A", "x"];

pub fn random_text(rng: &mut ChaCha8Rng, max: usize) -> String {
    let n = rng.gen_range(0..=max);
    (0..n).map(|_| *ALPHABET.choose(rng).unwrap()).collect()
}

fn grapheme_len(s: &str) -> usize {
    s.graphemes(true).count()
}

fn total_edits(stack: &LayerStack) -> usize {
    stack.layers().iter().map(|l| l.edits().len()).sum()
}

/// A stack built only through the public editing API: recorded edits,
/// merged changesets, layer additions, visibility flips and reorders.
pub fn random_recorded_stack(rng: &mut ChaCha8Rng) -> LayerStack {
    let mut stack = LayerStack::with_text(&random_text(rng, 120));
    let steps = rng.gen_range(0..80);
    for _ in 0..steps {
        if total_edits(&stack) >= MAX_EDITS {
            break;
        }
        let ordinals: Vec<u32> = stack.layers().iter().map(|l| l.ordinal()).collect();
        match rng.gen_range(0..10) {
            0 if ordinals.len() < MAX_LAYERS => {
                stack.add_layer(format!("L{}", stack.next_ordinal()));
            }
            1 => {
                let o = *ordinals.choose(rng).unwrap();
                let v = !stack.layer(o).unwrap().is_visible();
                stack.set_visibility(o, v).unwrap();
            }
            2 => {
                let from = rng.gen_range(0..ordinals.len());
                let to = rng.gen_range(0..ordinals.len());
                stack.reorder_layer(from, to).unwrap();
            }
            3 => {
                stack.set_active(*ordinals.choose(rng).unwrap()).unwrap();
            }
            4..=6 => {
                let snapshot = stack.clone();
                let comp = stack.compose();
                let len = comp.len();
                let room = MAX_CHARS.saturating_sub(len);
                let s = rng.gen_range(0..=len);
                let e = rng.gen_range(s..=len.min(s + 12));
                let rep: String = random_text(rng, 8.min(room));
                let _ = stack.record_edit(&comp, s, e, &rep);
                if total_edits(&stack) > MAX_EDITS {
                    return snapshot;
                }
            }
            _ => {
                let snapshot = stack.clone();
                let old = stack.compose().text();
                let new = mutate_text(rng, &old);
                let _ = stack.apply_changeset(&diff(&old, &new));
                // A merged changeset may add several edits at once.
                if total_edits(&stack) > MAX_EDITS {
                    return snapshot;
                }
            }
        }
    }
    stack
}

/// Applies a few random local edits to `s`, keeping it under the size cap.
pub fn mutate_text(rng: &mut ChaCha8Rng, s: &str) -> String {
    let mut g: Vec<String> = s.graphemes(true).map(str::to_string).collect();
    for _ in 0..rng.gen_range(1..4) {
        let at = rng.gen_range(0..=g.len());
        let del = rng.gen_range(0..=4.min(g.len() - at));
        g.drain(at..at + del);
        if g.len() < MAX_CHARS {
            let ins = random_text(rng, 5.min(MAX_CHARS - g.len()));
            for (k, x) in ins.graphemes(true).enumerate() {
                g.insert(at + k, x.to_string());
            }
        }
    }
    g.concat()
}

/// A stack of hand-assembled layers whose anchors point at arbitrary ids,
/// including their own, other layers' and ids that never existed.
pub fn random_raw_stack(rng: &mut ChaCha8Rng) -> LayerStack {
    let n_layers = rng.gen_range(1..=MAX_LAYERS);
    let mut ordinals: Vec<u32> = (0..n_layers as u32 + 2).collect();
    ordinals.shuffle(rng);
    ordinals.truncate(n_layers);
    let budget = MAX_CHARS;
    let mut minted = 0usize;
    let mut edits_left = MAX_EDITS;
    // Counters are fixed up front so anchors can refer to any layer's ids.
    let counters: Vec<u32> = ordinals.iter().map(|_| rng.gen_range(1..=80)).collect();
    let pick_id = |rng: &mut ChaCha8Rng| -> StableId {
        let k = rng.gen_range(0..ordinals.len());
        StableId { layer: ordinals[k], counter: rng.gen_range(0..counters[k] + 2) }
    };
    let mut layers = Vec::new();
    for (k, &ordinal) in ordinals.iter().enumerate() {
        let mut free: Vec<u32> = (0..counters[k]).collect();
        free.shuffle(rng);
        let mut edits = Vec::new();
        let n_edits = rng.gen_range(0..=edits_left.min(12));
        edits_left -= n_edits;
        for _ in 0..n_edits {
            let boundary = |rng: &mut ChaCha8Rng| match rng.gen_range(0..8) {
                0 => AnchorBoundary::Begin,
                1 => AnchorBoundary::End,
                2..=4 => AnchorBoundary::before(pick_id(rng)),
                _ => AnchorBoundary::after(pick_id(rng)),
            };
            let start = boundary(rng);
            let end = if rng.gen_bool(0.3) { start } else { boundary(rng) };
            let len = rng.gen_range(0..=6).min(free.len()).min(budget - minted);
            minted += len;
            let replacement = free
                .drain(..len)
                .map(|c| Cell::new(ALPHABET.choose(rng).unwrap(), StableId { layer: ordinal, counter: c }))
                .collect();
            edits.push(AnchoredEdit { start, end, replacement });
        }
        let visible = rng.gen_bool(0.8);
        layers.push(Layer::from_parts(ordinal, format!("L{ordinal}"), visible, counters[k], edits).unwrap());
    }
    let active = *ordinals.choose(rng).unwrap();
    LayerStack::from_parts(layers, active, 0).unwrap()
}

/// Exhaustive closest-total search with the fewest-changes, then
/// lexicographic tie-break. Index vectors are visited in lexicographic
/// order, so keeping only strict improvements keeps the smallest.
pub fn exhaustive_select(counts: &[Vec<usize>], target: usize) -> Vec<usize> {
    let n = counts.len();
    let mut idx = vec![0usize; n];
    let mut best: Option<((usize, usize), Vec<usize>)> = None;
    loop {
        let total: usize = idx.iter().enumerate().map(|(i, &j)| counts[i][j]).sum();
        let changes = idx.iter().filter(|&&j| j != 0).count();
        let key = (total.abs_diff(target), changes);
        if best.as_ref().is_none_or(|(k, _)| key < *k) {
            best = Some((key, idx.clone()));
        }
        // Odometer increment, last position fastest.
        let mut pos = n;
        loop {
            if pos == 0 {
                return best.map(|(_, v)| v).unwrap_or_default();
            }
            pos -= 1;
            idx[pos] += 1;
            if idx[pos] < counts[pos].len() {
                break;
            }
            idx[pos] = 0;
        }
    }
}

/// Longest common subsequence length over graphemes, by full DP.
pub fn lcs_len(a: &str, b: &str) -> usize {
    let a: Vec<&str> = a.graphemes(true).collect();
    let b: Vec<&str> = b.graphemes(true).collect();
    let mut prev = vec![0usize; b.len() + 1];
    for x in &a {
        let mut cur = vec![0usize; b.len() + 1];
        for (j, y) in b.iter().enumerate() {
            cur[j + 1] = if x == y { prev[j] + 1 } else { prev[j + 1].max(cur[j]) };
        }
        prev = cur;
    }
    prev[b.len()]
}

pub fn graphemes(s: &str) -> usize {
    grapheme_len(s)
}
