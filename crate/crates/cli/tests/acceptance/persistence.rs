use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use textlayers_core::backend::MockBackend;
use textlayers_core::document::{load_file, save_file, to_canonical_json, DocumentRecord};
use textlayers_core::engine::{BooleanOpKind, Engine, Number, SelectionRange, Tense, Tool};
use textlayers_core::text::PlainText;
use textlayers_core::tone::ToneVector;

use crate::support::{random_recorded_stack, random_text};
use crate::{ensure, Outcome};

fn random_selection(rng: &mut ChaCha8Rng, doc: &DocumentRecord) -> SelectionRange {
    let len = PlainText::new(doc.text()).len();
    let s = rng.gen_range(0..=len);
    SelectionRange::new(s, rng.gen_range(s..=len))
}

/// A document with layers, fragments, a tone and a populated op log.
fn random_document(seed: u64) -> DocumentRecord {
    let mut rng = ChaCha8Rng::seed_from_u64(0xF11E + seed);
    let engine = Engine::new(Arc::new(MockBackend), 4);
    let now = 1_700_000_000_000 + seed * 1000;
    let mut doc = DocumentRecord::new(format!("doc-{seed}"), "", now);
    doc.stack = random_recorded_stack(&mut rng);
    let tools = [
        Tool::Erase,
        Tool::Repair,
        Tool::Smudge,
        Tool::SetNumber { number: Number::Plural },
        Tool::SetTense { tense: Tense::Future },
        Tool::Prompt { prompt: "shout".into() },
        Tool::Rotate { angle_deg: 45.0 },
    ];
    for step in 0..rng.gen_range(2..12) {
        let t = now + step;
        let sel = random_selection(&mut rng, &doc);
        let _ = match rng.gen_range(0..6) {
            0 => doc.fragment_from_selection(sel, rng.gen_range(0.0..500.0), rng.gen_range(0.0..500.0), format!("f{step}"), t).map(|_| ()),
            1 => {
                let tone = ToneVector::new(rng.gen_range(0..=10), rng.gen_range(0..=10), rng.gen_range(0..=10)).unwrap();
                doc.set_tone(tone, t);
                Ok(())
            }
            2 => {
                doc.add_layer(&random_text(&mut rng, 6), t);
                Ok(())
            }
            3 if !doc.fragments.is_empty() => {
                let id = doc.fragments.choose(&mut rng).unwrap().id.clone();
                doc.drop_fragment(&engine, &id, BooleanOpKind::Unite, sel, t).map(|_| ())
            }
            _ => doc.transform(&engine, sel, tools.choose(&mut rng).unwrap(), t).map(|_| ()),
        };
    }
    doc
}

pub fn persistence_identity() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let (mut logged, mut with_fragments) = (0, 0);
    for seed in 0..100 {
        let doc = random_document(seed);
        logged += !doc.op_log.is_empty() as usize;
        with_fragments += !doc.fragments.is_empty() as usize;
        let first = dir.path().join(format!("{seed}-a.json"));
        let second = dir.path().join(format!("{seed}-b.json"));
        save_file(&first, &doc).map_err(|e| e.to_string())?;
        let loaded = load_file(&first).map_err(|e| format!("seed {seed}: {e}"))?;
        ensure!(loaded == doc, "seed {seed}: loaded document differs from the saved one");
        save_file(&second, &loaded).map_err(|e| e.to_string())?;
        let (a, b) = (std::fs::read(&first).unwrap(), std::fs::read(&second).unwrap());
        ensure!(a == b, "seed {seed}: save/load/save changed the bytes");
        ensure!(to_canonical_json(&loaded) == a, "seed {seed}: file is not the canonical encoding");
    }
    Ok(format!("100 documents byte-identical after save/load/save ({logged} with op logs, {with_fragments} with fragments)"))
}
