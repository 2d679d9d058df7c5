use std::time::{Duration, Instant};

use textlayers_core::layers::{AnchorBoundary, AnchoredEdit, Cell, Layer, LayerStack, StableId};

use crate::support::{cells_as_tuples, naive_compose};
use crate::{ensure, Outcome};

const CHARS: u32 = 100_000;
const LAYERS: u32 = 32;
const EDITS: u32 = 1_000;
const BUDGET: Duration = Duration::from_millis(100);

/// A base layer holding the whole text plus 999 small replacements spread
/// over 31 layers, each anchored to base cells.
pub fn large_stack() -> LayerStack {
    let id = |layer, counter| StableId { layer, counter };
    let letters = b"abcdefghijklmnopqrstuvwxyz     .";
    let base_cells: Vec<Cell> = (0..CHARS)
        .map(|i| {
            let c = letters[(i as usize * 7 + i as usize / 13) % letters.len()] as char;
            Cell::new(&c.to_string(), id(0, i))
        })
        .collect();
    let base = AnchoredEdit { start: AnchorBoundary::Begin, end: AnchorBoundary::Begin, replacement: base_cells };
    let mut layers = vec![Layer::from_parts(0, "base".into(), true, CHARS, vec![base]).unwrap()];

    let slot = CHARS / EDITS;
    let mut per_layer: Vec<Vec<AnchoredEdit>> = vec![Vec::new(); LAYERS as usize];
    let mut counters = vec![0u32; LAYERS as usize];
    for i in 1..EDITS {
        let layer = 1 + (i - 1) % (LAYERS - 1);
        let at = i * slot + 10;
        let replacement = (0..4)
            .map(|k| {
                let c = counters[layer as usize];
                counters[layer as usize] += 1;
                Cell::new(["W", "X", "Y", "Z"][k], id(layer, c))
            })
            .collect();
        per_layer[layer as usize].push(AnchoredEdit {
            start: AnchorBoundary::before(id(0, at)),
            end: AnchorBoundary::after(id(0, at + 2)),
            replacement,
        });
    }
    for layer in 1..LAYERS {
        let edits = std::mem::take(&mut per_layer[layer as usize]);
        layers.push(Layer::from_parts(layer, format!("L{layer}"), true, counters[layer as usize], edits).unwrap());
    }
    LayerStack::from_parts(layers, LAYERS - 1, LAYERS).unwrap()
}

pub fn compose_performance() -> Outcome {
    let stack = large_stack();
    let edits: usize = stack.layers().iter().map(|l| l.edits().len()).sum();
    ensure!(stack.layers().len() == LAYERS as usize && edits == EDITS as usize, "fixture shape is off");
    let composed = stack.compose();
    ensure!(composed.len() >= CHARS as usize, "composed only {} characters", composed.len());
    ensure!(cells_as_tuples(composed.cells()) == naive_compose(&stack), "large compose differs from the naive compositor");

    let mut times: Vec<Duration> = (0..5)
        .map(|_| {
            let t = Instant::now();
            std::hint::black_box(stack.compose());
            t.elapsed()
        })
        .collect();
    times.sort();
    let median = times[2];
    ensure!(median < BUDGET, "median compose {median:?}, budget {BUDGET:?}");
    Ok(format!(
        "{} chars, {LAYERS} layers, {EDITS} edits: median of 5 composes {:.1} ms (budget 100 ms)",
        composed.len(),
        median.as_secs_f64() * 1e3
    ))
}
