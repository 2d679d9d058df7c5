//! Golden transcripts of the worked examples, replayed through the remote
//! backend over a recording transport. A live run against a real model is
//! opt-in.

use std::sync::{Arc, Mutex};
use std::time::Duration;

use serde::Deserialize;
use serde_json::{json, Map, Value};
use textlayers_cli::ops::{parse_action, Action};
use textlayers_core::backend::{
    build_backend, BackendConfig, BackendKind, HttpReply, LanguageBackend, RemoteBackend, RemoteConfig, Transport,
    TransportError,
};
use textlayers_core::document::DocumentRecord;
use textlayers_core::engine::{tool_scope, Engine, SelectionRange};
use textlayers_core::text::PlainText;

use crate::{ensure, Outcome};

const DISTRACTOR: &str = "The rabbit ran past.";

#[derive(Deserialize)]
struct Example {
    name: String,
    tool: String,
    params: Map<String, Value>,
    text: String,
    start: usize,
    end: usize,
    reply: String,
    expected: String,
}

fn load() -> Vec<Example> {
    let raw = include_str!("../fixtures/paper_examples.json");
    serde_json::from_str(raw).expect("fixture file parses")
}

/// Answers every call with a fixed reply and keeps the request bodies.
struct Recorder {
    reply: String,
    bodies: Mutex<Vec<String>>,
}

impl Transport for Recorder {
    fn post_json(&self, _: &str, _: Option<&str>, body: &str, _: Duration) -> Result<HttpReply, TransportError> {
        self.bodies.lock().unwrap().push(body.to_string());
        let reply = json!({"choices": [{"message": {"role": "assistant", "content": self.reply}}]});
        Ok(HttpReply { status: 200, body: reply.to_string() })
    }
}

/// Text the model was shown in one request body.
fn prompt_text(body: &str) -> String {
    let v: Value = serde_json::from_str(body).expect("request body is JSON");
    v["messages"].as_array().into_iter().flatten().filter_map(|m| m["content"].as_str()).collect::<Vec<_>>().join("\n")
}

/// Applies one example to a fresh document and checks the plumbing:
/// the changeset is valid, changes stay in the tool's scope and the
/// distractor sentence is untouched. Returns the resulting text.
fn run_example(ex: &Example, backend: Arc<dyn LanguageBackend>) -> Result<String, String> {
    let engine = Engine::new(backend, 8);
    let mut doc = DocumentRecord::new("example", &ex.text, 0);
    let sel = SelectionRange::new(ex.start, ex.end);
    let action = parse_action(&ex.tool, ex.params.clone(), doc.current_tone).map_err(|e| e.to_string())?;
    let outcome = match action {
        Action::Tool(tool) => doc.transform(&engine, sel, &tool, 1).map_err(|e| e.to_string())?.1,
        Action::Boolean { op, fragment } => {
            let outcome = engine.boolean_merge(&ex.text, &fragment, sel, op).map_err(|e| e.to_string())?;
            doc.apply_outcome(outcome.clone(), 1, None, None).map_err(|e| e.to_string())?;
            outcome
        }
        Action::EstimateTone => return Err("no example estimates tone".into()),
    };
    let out = doc.text();
    let text = PlainText::new(ex.text.as_str());
    ensure!(outcome.changeset.source_len() == text.len(), "{}: changeset length mismatch", ex.name);
    ensure!(outcome.changeset.apply_str(&ex.text).as_deref() == Ok(out.as_str()), "{}: changeset disagrees with layers", ex.name);
    let scope = tool_scope(&text, sel);
    for h in outcome.changeset.hunks() {
        ensure!(
            h.source_start + 1 >= scope.start && h.source_end <= scope.end + 1,
            "{}: change at {}..{} leaves scope {}..{}",
            ex.name,
            h.source_start,
            h.source_end,
            scope.start,
            scope.end
        );
    }
    ensure!(out.ends_with(&format!(" {DISTRACTOR}")), "{}: the neighbouring sentence changed: {out:?}", ex.name);
    let new = PlainText::new(out.as_str());
    ensure!(outcome.new_selection.end <= new.len(), "{}: selection past the end", ex.name);
    Ok(out)
}

fn replay(ex: &Example) -> Result<(), String> {
    let recorder = Arc::new(Recorder { reply: ex.reply.clone(), bodies: Mutex::new(Vec::new()) });
    let config = RemoteConfig { timeout_ms: 5_000, ..RemoteConfig::default() };
    let backend = RemoteBackend::new(config).with_transport(recorder.clone()).with_cache(None);
    let out = run_example(ex, Arc::new(backend))?;
    ensure!(out == ex.expected, "{}: reintegrated {out:?}, transcript says {:?}", ex.name, ex.expected);

    let bodies = recorder.bodies.lock().unwrap();
    ensure!(bodies.len() == 1, "{}: {} backend calls", ex.name, bodies.len());
    let shown = prompt_text(&bodies[0]);
    ensure!(!shown.contains("rabbit"), "{}: the prompt leaked the neighbouring sentence", ex.name);
    let text = PlainText::new(ex.text.as_str());
    let selection = text.slice(ex.start, ex.end);
    ensure!(shown.contains(selection), "{}: the prompt lacks the selection {selection:?}", ex.name);
    if let Some(Value::String(f)) = ex.params.get("fragment") {
        ensure!(shown.contains(f.as_str()), "{}: the prompt lacks the fragment", ex.name);
    }
    Ok(())
}

fn live_backend() -> Option<Arc<dyn LanguageBackend>> {
    if std::env::var("TEXTOSHOP_LIVE_TESTS").ok().as_deref() != Some("1") {
        return None;
    }
    let mut config = BackendConfig::from_env().ok()?;
    config.remote.api_key.as_ref()?;
    config.kind = BackendKind::Remote;
    build_backend(&config).ok()
}

pub fn example_fixtures() -> Outcome {
    let examples = load();
    ensure!(examples.len() >= 9, "only {} transcripts", examples.len());
    for ex in &examples {
        replay(ex)?;
    }
    let live = match live_backend() {
        None => "live run skipped (set TEXTOSHOP_LIVE_TESTS=1 and TEXTOSHOP_API_KEY)".to_string(),
        Some(backend) => {
            for ex in &examples {
                let out = run_example(ex, backend.clone())?;
                println!("  live {}: {out:?}", ex.name);
            }
            format!("live run passed on {} examples", examples.len())
        }
    };
    Ok(format!("{} transcripts replayed with scope, reintegration and changeset checks; {live}", examples.len()))
}
