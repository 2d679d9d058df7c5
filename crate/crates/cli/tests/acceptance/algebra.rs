use std::collections::HashSet;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use textlayers_core::changeset::{diff, timeline, Bias, EventKind};
use textlayers_core::engine::{select_variants, VariantTable};
use textlayers_core::layers::LayerStack;
use textlayers_core::tone::{tone_to_wheel, wheel_to_tone, ToneVector};

use crate::support::{
    cells_as_tuples, exhaustive_select, graphemes, lcs_len, mutate_text, naive_compose, random_raw_stack,
    random_recorded_stack, random_text, MAX_CHARS, MAX_EDITS, MAX_LAYERS,
};
use crate::{ensure, Outcome};

const LAYER_SEEDS: u64 = 1000;

fn against_oracle(stack: &LayerStack, seed: u64, what: &str) -> Result<(), String> {
    let got = cells_as_tuples(stack.compose().cells());
    ensure!(got == naive_compose(stack), "seed {seed}: compose differs from the naive compositor ({what})");
    Ok(())
}

fn check_stack(mut stack: LayerStack, rng: &mut ChaCha8Rng, seed: u64) -> Result<(), String> {
    let edits: usize = stack.layers().iter().map(|l| l.edits().len()).sum();
    ensure!(stack.layers().len() <= MAX_LAYERS && edits <= MAX_EDITS, "seed {seed}: generator exceeded its bounds");
    against_oracle(&stack, seed, "initial")?;
    let before = stack.compose();
    let ordinals: Vec<u32> = stack.layers().iter().map(|l| l.ordinal()).collect();
    for &o in &ordinals {
        let v = stack.layer(o).unwrap().is_visible();
        stack.set_visibility(o, !v).map_err(|e| e.to_string())?;
        against_oracle(&stack, seed, "toggled")?;
        stack.set_visibility(o, v).map_err(|e| e.to_string())?;
        ensure!(stack.compose() == before, "seed {seed}: hide/show of layer {o} is not an identity");
    }
    let n = ordinals.len();
    for _ in 0..3 {
        let (from, to) = (rng.gen_range(0..n), rng.gen_range(0..n));
        stack.reorder_layer(from, to).map_err(|e| e.to_string())?;
        against_oracle(&stack, seed, "reordered")?;
        stack.reorder_layer(to, from).map_err(|e| e.to_string())?;
        ensure!(stack.compose() == before, "seed {seed}: reorder {from}->{to} and back is not an identity");
    }
    Ok(())
}

pub fn layer_algebra() -> Outcome {
    let started = Instant::now();
    let mut max_len = 0;
    for seed in 0..LAYER_SEEDS {
        let mut rng = ChaCha8Rng::seed_from_u64(0xA11CE + seed);
        let stack = if seed % 2 == 0 { random_recorded_stack(&mut rng) } else { random_raw_stack(&mut rng) };
        max_len = max_len.max(stack.compose().len());
        check_stack(stack, &mut rng, seed)?;
    }
    let secs = started.elapsed().as_secs_f64();
    ensure!(max_len <= MAX_CHARS + 10, "a stack composed to {max_len} characters");
    ensure!(secs < 30.0, "took {secs:.1} s, budget 30 s");
    Ok(format!("{LAYER_SEEDS} seeds match the naive compositor; hide/show and reorder round trips exact"))
}

pub fn resize_oracle() -> Outcome {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5E1EC7);
    let mut ties = 0;
    for case in 0..10_000 {
        let n = rng.gen_range(1..=6);
        let hi = if rng.gen_bool(0.5) { 6 } else { 30 };
        let counts: Vec<Vec<usize>> =
            (0..n).map(|_| (0..rng.gen_range(1..=9)).map(|_| rng.gen_range(1..=hi)).collect()).collect();
        let max: usize = counts.iter().map(|r| r.iter().max().unwrap()).sum();
        let target = rng.gen_range(0..=max + 5);
        let got = select_variants(&VariantTable::from_counts(&counts), target);
        let want = exhaustive_select(&counts, target);
        ensure!(got == want, "case {case}: {counts:?} target {target}: got {got:?}, want {want:?}");
        let row_ties = counts.iter().filter(|r| r.iter().collect::<HashSet<_>>().len() < r.len()).count();
        ties += (row_ties > 0) as usize;
    }
    let secs = started.elapsed().as_secs_f64();
    ensure!(secs < 60.0, "took {secs:.1} s, budget 60 s");
    Ok(format!("10000 instances agree with exhaustive search ({ties} with duplicate counts)"))
}

pub fn tone_bijection() -> Outcome {
    let started = Instant::now();
    let mut seen = HashSet::new();
    let mut n = 0;
    for t in ToneVector::lattice() {
        let w = tone_to_wheel(t);
        ensure!(wheel_to_tone(w) == t, "{t:?} maps to {w:?} and back to {:?}", wheel_to_tone(w));
        ensure!(
            seen.insert((w.hue_deg.to_bits(), w.saturation.to_bits(), w.value.to_bits())),
            "{t:?} shares a wheel position"
        );
        n += 1;
    }
    ensure!(n == 1331, "lattice has {n} tones");
    let secs = started.elapsed().as_secs_f64();
    ensure!(secs < 1.0, "took {secs:.2} s, budget 1 s");
    Ok("1331 lattice tones round trip exactly through the wheel".into())
}

pub fn changeset_suite() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0xD1FF);
    for case in 0..10_000 {
        let a = random_text(&mut rng, 40);
        let b = if rng.gen_bool(0.5) { mutate_text(&mut rng, &a) } else { random_text(&mut rng, 40) };
        let cs = diff(&a, &b);
        ensure!(cs.apply_str(&a).as_deref() == Ok(b.as_str()), "case {case}: apply(diff) differs for {a:?} -> {b:?}");
        let inv = cs.invert();
        ensure!(inv.apply_str(&b).as_deref() == Ok(a.as_str()), "case {case}: inverse does not restore {a:?}");
        ensure!(inv.invert() == cs, "case {case}: invert is not an involution");

        let n = cs.source_len();
        let m = cs.target_len();
        let mut prev = (0, 0);
        for p in 0..=n {
            let (l, r) = (cs.map_position(p, Bias::Left), cs.map_position(p, Bias::Right));
            ensure!(l <= r && r <= m, "case {case}: map({p}) gives {l}..{r} outside 0..{m}");
            ensure!(l >= prev.0 && r >= prev.1, "case {case}: map is not monotone at {p}");
            prev = (l, r);
        }

        let tl = timeline(&cs);
        let common = lcs_len(&a, &b);
        let deleted: usize = tl.events.iter().filter(|e| e.kind == EventKind::Delete).map(|e| e.end - e.start).sum();
        let inserted: usize = tl.events.iter().filter(|e| e.kind == EventKind::Insert).map(|e| e.end - e.start).sum();
        ensure!(
            deleted == graphemes(&a) - common && inserted == graphemes(&b) - common,
            "case {case}: timeline spans do not cover the edit"
        );
        if a == b {
            ensure!(tl.total_ms == 0 && tl.events.is_empty(), "case {case}: identity animates");
            continue;
        }
        ensure!(tl.total_ms == 1000, "case {case}: total {} ms", tl.total_ms);
        let last_delete = tl.events.iter().filter(|e| e.kind == EventKind::Delete).map(|e| e.end_ms).max();
        let first_insert = tl.events.iter().filter(|e| e.kind == EventKind::Insert).map(|e| e.start_ms).min();
        if let (Some(d), Some(i)) = (last_delete, first_insert) {
            ensure!(d <= i, "case {case}: an insertion starts before deletions finish");
        }
        ensure!(tl.events.iter().all(|e| e.end_ms <= 1000), "case {case}: event past the end");
    }
    Ok("10000 pairs: apply∘diff identity, invert involution, monotone map, delete-then-insert 1000 ms timeline".into())
}
