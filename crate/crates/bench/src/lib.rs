//! Workload builders shared by the benchmarks.

use textlayers_core::layers::{AnchorBoundary, AnchoredEdit, Cell, Layer, LayerStack, StableId};

/// A base layer of `chars` cells and `edits - 1` four-cell replacements
/// spread evenly over `layers - 1` upper layers, each anchored to base cells.
pub fn layered_document(chars: u32, layers: u32, edits: u32) -> LayerStack {
    assert!(layers >= 2 && edits >= 1 && chars >= edits * 4);
    let id = |layer, counter| StableId { layer, counter };
    let letters = b"abcdefghijklmnopqrstuvwxyz     .";
    let base: Vec<Cell> = (0..chars)
        .map(|i| Cell::new(&(letters[i as usize * 7 % letters.len()] as char).to_string(), id(0, i)))
        .collect();
    let first = AnchoredEdit { start: AnchorBoundary::Begin, end: AnchorBoundary::Begin, replacement: base };
    let mut out = vec![Layer::from_parts(0, "base".into(), true, chars, vec![first]).unwrap()];

    let slot = chars / edits;
    let mut per_layer: Vec<Vec<AnchoredEdit>> = vec![Vec::new(); layers as usize];
    let mut counters = vec![0u32; layers as usize];
    for i in 1..edits {
        let layer = (1 + (i - 1) % (layers - 1)) as usize;
        let at = i * slot;
        let replacement = ["W", "X", "Y", "Z"]
            .iter()
            .map(|t| {
                counters[layer] += 1;
                Cell::new(t, id(layer as u32, counters[layer] - 1))
            })
            .collect();
        per_layer[layer].push(AnchoredEdit {
            start: AnchorBoundary::before(id(0, at)),
            end: AnchorBoundary::after(id(0, at + 2)),
            replacement,
        });
    }
    for layer in 1..layers {
        let edits = std::mem::take(&mut per_layer[layer as usize]);
        out.push(Layer::from_parts(layer, format!("L{layer}"), true, counters[layer as usize], edits).unwrap());
    }
    LayerStack::from_parts(out, layers - 1, layers).unwrap()
}

/// A prose-like string of `words` words and a copy with every `stride`-th
/// word replaced.
pub fn edited_pair(words: usize, stride: usize) -> (String, String) {
    const VOCAB: &[&str] = &["alice", "sat", "by", "the", "river", "and", "was", "tired", "of", "reading"];
    let a: Vec<&str> = (0..words).map(|i| VOCAB[(i * 3 + i / 7) % VOCAB.len()]).collect();
    let b: Vec<&str> = a.iter().enumerate().map(|(i, w)| if i % stride == 0 { "rabbit" } else { w }).collect();
    (a.join(" "), b.join(" "))
}
