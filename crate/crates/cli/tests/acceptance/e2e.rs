//! The service over real HTTP with the mock backend.

use std::io::{BufRead, BufReader};
use std::net::SocketAddr;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{mpsc, Arc};
use std::time::Duration;

use serde_json::{json, Value};
use textlayers_cli::{build_app, AppState};
use textlayers_core::backend::{BackendError, BackendRequest, BackendResponse, LanguageBackend, MockBackend, ResizeVariants};
use textlayers_core::document::{load_file, Change, DocumentStore};

use crate::{ensure, Outcome};

/// The mock backend with a switch that makes every call fail.
struct Switchable {
    fail: Arc<AtomicBool>,
}

impl Switchable {
    fn check(&self) -> Result<(), BackendError> {
        if self.fail.load(Ordering::SeqCst) {
            Err(BackendError::Transport("injected failure".into()))
        } else {
            Ok(())
        }
    }
}

impl LanguageBackend for Switchable {
    fn kind(&self) -> &'static str {
        "mock"
    }

    fn model(&self) -> &str {
        "mock"
    }

    fn complete(&self, req: &BackendRequest) -> Result<BackendResponse, BackendError> {
        self.check()?;
        MockBackend.complete(req)
    }

    fn resize_variants(&self, sentence: &str, deltas: &[i64]) -> Result<ResizeVariants, BackendError> {
        self.check()?;
        MockBackend.resize_variants(sentence, deltas)
    }
}

struct Server {
    base: String,
    state: Arc<AppState>,
    fail: Arc<AtomicBool>,
    agent: ureq::Agent,
    _dir: tempfile::TempDir,
}

impl Server {
    fn start() -> Server {
        let dir = tempfile::tempdir().expect("temp dir");
        let store = DocumentStore::open(dir.path()).expect("store");
        let fail = Arc::new(AtomicBool::new(false));
        let state = Arc::new(AppState::new(store, Arc::new(Switchable { fail: fail.clone() }), 8));
        let app = build_app(state.clone());
        let (tx, rx) = mpsc::channel::<SocketAddr>();
        // The server lives until the test process exits.
        std::thread::spawn(move || {
            let rt = tokio::runtime::Builder::new_multi_thread().enable_all().build().expect("runtime");
            rt.block_on(async move {
                let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.expect("bind");
                tx.send(listener.local_addr().unwrap()).unwrap();
                axum::serve(listener, app).await.expect("serve");
            });
        });
        let addr = rx.recv_timeout(Duration::from_secs(10)).expect("server start");
        let agent = ureq::Agent::config_builder()
            .http_status_as_error(false)
            .timeout_global(Some(Duration::from_secs(30)))
            .build()
            .into();
        Server { base: format!("http://{addr}"), state, fail, agent, _dir: dir }
    }

    fn call(&self, method: &str, path: &str, body: Option<Value>) -> (u16, Value) {
        let url = format!("{}{path}", self.base);
        let result = match (method, body) {
            ("GET", _) => self.agent.get(&url).call(),
            ("DELETE", _) => self.agent.delete(&url).call(),
            ("POST", b) => self.agent.post(&url).send_json(b.unwrap_or(json!({}))),
            ("PUT", b) => self.agent.put(&url).send_json(b.unwrap_or(json!({}))),
            ("PATCH", b) => self.agent.patch(&url).send_json(b.unwrap_or(json!({}))),
            _ => panic!("unsupported method {method}"),
        };
        let mut resp = result.unwrap_or_else(|e| panic!("{method} {path}: {e}"));
        let status = resp.status().as_u16();
        let text = resp.body_mut().read_to_string().expect("body");
        (status, serde_json::from_str(&text).unwrap_or(Value::String(text)))
    }

    fn create(&self, text: &str) -> Result<String, String> {
        let (status, v) = self.call("POST", "/api/docs", Some(json!({ "text": text })));
        ensure!(status == 201, "create returned {status}: {v}");
        Ok(v["id"].as_str().unwrap().to_string())
    }

    fn file_bytes(&self, id: &str) -> Vec<u8> {
        std::fs::read(self.state.store().path_for(id).unwrap()).expect("persisted file")
    }

    /// GET text and the file on disk both hold `expected`.
    fn check_text(&self, id: &str, expected: &str, label: &str) -> Result<Value, String> {
        let (status, view) = self.call("GET", &format!("/api/docs/{id}"), None);
        ensure!(status == 200, "{label}: GET returned {status}");
        ensure!(view["text"] == expected, "{label}: GET text {} != {expected:?}", view["text"]);
        let path = self.state.store().path_for(id).unwrap();
        let disk = load_file(&path).map_err(|e| format!("{label}: {e}"))?;
        ensure!(disk.text() == expected, "{label}: file holds {:?}", disk.text());
        ensure!(view["revision"] == json!(disk.revision), "{label}: file revision lags");
        Ok(view)
    }

    /// Subscribes to a document's change stream.
    fn subscribe(&self, id: &str) -> mpsc::Receiver<Change> {
        let url = format!("{}/api/docs/{id}/events", self.base);
        let resp = ureq::get(&url).call().expect("event stream");
        let (tx, rx) = mpsc::channel();
        std::thread::spawn(move || {
            let reader = BufReader::new(resp.into_body().into_reader());
            let (mut event, mut data) = (String::new(), String::new());
            for line in reader.lines() {
                let Ok(line) = line else { return };
                if let Some(v) = line.strip_prefix("event:") {
                    event = v.trim().to_string();
                } else if let Some(v) = line.strip_prefix("data:") {
                    data.push_str(v.trim_start());
                } else if line.is_empty() {
                    if event == "change" && tx.send(serde_json::from_str(&data).expect("change payload")).is_err() {
                        return;
                    }
                    event.clear();
                    data.clear();
                }
            }
        });
        rx
    }
}

fn as_change(v: &Value) -> Change {
    serde_json::from_value(json!({
        "changeset": v["changeset"], "timeline": v["timeline"], "revision": v["revision"]
    }))
    .expect("response carries a change")
}

struct Case {
    tool: &'static str,
    text: &'static str,
    start: usize,
    end: usize,
    params: Value,
    expected: &'static str,
}

const fn case(tool: &'static str, text: &'static str, start: usize, end: usize, expected: &'static str) -> Case {
    Case { tool, text, start, end, params: Value::Null, expected }
}

fn with(mut c: Case, params: Value) -> Case {
    c.params = params;
    c
}

fn tool_cases() -> Vec<Case> {
    vec![
        case("erase", "Alice was beginning to get very tired. Bob slept.", 10, 19, "Alice was to get very tired. Bob slept."),
        case("erase", "Alice ran. Bob slept.", 0, 10, "Bob slept."),
        case("repair", "alice  vry   tire. Bob slept.", 0, 5, "Alice vry tire. Bob slept."),
        case("smudge", "Alice sat by the river. Bob slept.", 6, 16, "Alice the sat by river. Bob slept."),
        with(case("set_number", "The cat sat. Bob slept.", 4, 7, "The cats sat. Bob slept."), json!({"number": "plural"})),
        with(case("set_number", "The cats sat. Bob slept.", 4, 8, "The cat sat. Bob slept."), json!({"number": "singular"})),
        with(case("set_tense", "Alice was tired. Bob slept.", 6, 9, "Alice will was tired. Bob slept."), json!({"tense": "future"})),
        with(case("set_tense", "Alice will was tired. Bob slept.", 6, 14, "Alice was tired. Bob slept."), json!({"tense": "present"})),
        with(case("set_tense", "They walk home. Bob slept.", 5, 9, "They walked home. Bob slept."), json!({"tense": "past"})),
        with(
            case("apply_tone", "Alice was utterly exhausted. Bob slept.", 0, 28, "Alice Was Utterly Exhausted! Bob slept."),
            json!({"tone": {"formality": 10, "sentiment": 10, "complexity": 0}}),
        ),
        with(case("prompt", "The cat sat. Bob slept.", 4, 7, "The [make] cat sat. Bob slept."), json!({"prompt": "make it rhyme"})),
        with(case("resize", "Alice sat by the river bank. Bob slept.", 0, 5, "Alice sat by. Bob slept."), json!({"target_words": 3})),
        with(case("rotate", "Alice sat by them. Bob slept.", 0, 17, "By them Alice sat. Bob slept."), json!({"angle_deg": 90.0})),
        case("split", "Alice sat by the river, and her sister read. Bob slept.", 0, 5, "Alice sat by the river. And her sister read. Bob slept."),
        case("combine", "Alice ran. Bob slept. Carl sat.", 0, 31, "Alice ran, bob slept, carl sat."),
        with(
            case("unite", "Look, the cat and the dog play.", 6, 30, "Look, the dog runs cat and the play."),
            json!({"fragment": "the dog runs"}),
        ),
    ]
}

fn run_tools(srv: &Server) -> Result<usize, String> {
    let cases = tool_cases();
    for c in &cases {
        let label = format!("{} on {:?}", c.tool, c.text);
        let id = srv.create(c.text)?;
        let mut body = json!({ "tool": c.tool, "start": c.start, "end": c.end });
        if let Value::Object(p) = &c.params {
            body.as_object_mut().unwrap().extend(p.clone());
        }
        let (status, v) = srv.call("POST", &format!("/api/docs/{id}/transform"), Some(body));
        ensure!(status == 200, "{label}: status {status}: {v}");
        ensure!(v["new_composition"] == c.expected, "{label}: got {}, want {:?}", v["new_composition"], c.expected);
        let cs = as_change(&v).changeset;
        ensure!(cs.apply_str(c.text).ok().as_deref() == Some(c.expected), "{label}: changeset does not map old to new");
        srv.check_text(&id, c.expected, &label)?;
    }

    // Tone estimation changes the current tone, not the text.
    let text = "Alice was utterly exhausted. Bob slept.";
    let id = srv.create(text)?;
    let (status, v) =
        srv.call("POST", &format!("/api/docs/{id}/transform"), Some(json!({"tool": "estimate_tone", "start": 0, "end": 27})));
    let want = json!({"formality": 6, "sentiment": 4, "complexity": 1});
    ensure!(status == 200 && v["tone"] == want, "estimate_tone: {status} {v}");
    let view = srv.check_text(&id, text, "estimate_tone")?;
    ensure!(view["current_tone"] == want, "estimate_tone did not update the current tone");
    let (status, v) = srv.call("POST", "/api/tone/estimate", Some(json!({"text": "Alice was utterly exhausted"})));
    ensure!(status == 200 && v["tone"] == want, "tone endpoint: {status} {v}");
    Ok(cases.len() + 1)
}

fn run_errors(srv: &Server) -> Result<(), String> {
    let id = srv.create("No comma here. Bob slept.")?;
    let t = format!("/api/docs/{id}/transform");
    for (body, want) in [
        (json!({"tool": "split", "start": 0, "end": 2}), 422),
        (json!({"tool": "sharpen", "start": 0, "end": 2}), 422),
        (json!({"tool": "erase", "start": 5, "end": 99}), 422),
        (json!({"tool": "erase", "start": 2, "end": 3}), 422),
    ] {
        let (status, v) = srv.call("POST", &t, Some(body.clone()));
        ensure!(status == want, "{body} returned {status}, want {want}: {v}");
    }
    let (status, _) = srv.call("GET", "/api/docs/nope", None);
    ensure!(status == 404, "unknown document returned {status}");
    let (status, _) = srv.call("POST", "/api/docs/nope/undo", None);
    ensure!(status == 404, "undo on unknown document returned {status}");
    srv.check_text(&id, "No comma here. Bob slept.", "rejected requests")?;
    Ok(())
}

/// Fragments, every boolean operation, an injected failure, undo, layers
/// and the event stream on one document.
fn run_session(srv: &Server) -> Result<usize, String> {
    let text = "Look, the cat and the dog play.\nthe dog runs";
    let cut = "Look, the cat and the dog play.\n";
    let id = srv.create(text)?;
    let events = srv.subscribe(&id);
    let doc = format!("/api/docs/{id}");
    let mut changes = Vec::new();

    let (status, v) = srv.call("POST", &format!("{doc}/fragments"), Some(json!({"start": 32, "end": 44, "x": 10.0, "y": 20.0})));
    ensure!(status == 201 && v["fragment"]["text"] == "the dog runs", "fragment: {status} {v}");
    ensure!(v["new_composition"] == cut, "fragment cut left {}", v["new_composition"]);
    let fid = v["fragment"]["id"].as_str().unwrap().to_string();
    changes.push(as_change(&v));
    srv.check_text(&id, cut, "fragment cut")?;

    let (status, v) = srv.call("PATCH", &format!("{doc}/fragments/{fid}"), Some(json!({"x": 50.0})));
    ensure!(status == 200 && v["fragment"]["x"] == 50.0, "fragment move: {status} {v}");
    changes.push(as_change(&v));

    // A failing backend leaves the document untouched, on disk and in memory.
    let before = srv.file_bytes(&id);
    srv.fail.store(true, Ordering::SeqCst);
    let (drop_status, _) =
        srv.call("POST", &format!("{doc}/fragments/{fid}/drop"), Some(json!({"op": "unite", "start": 6, "end": 30})));
    let (tool_status, _) = srv.call("POST", &format!("{doc}/transform"), Some(json!({"tool": "erase", "start": 6, "end": 9})));
    srv.fail.store(false, Ordering::SeqCst);
    ensure!(drop_status == 502 && tool_status == 502, "injected failure returned {drop_status}/{tool_status}, want 502");
    ensure!(srv.file_bytes(&id) == before, "failed operation changed the stored file");
    let view = srv.check_text(&id, cut, "after injected failure")?;
    ensure!(view["fragments"][0]["id"] == fid.as_str(), "failed drop consumed the fragment");

    let drops = [
        ("unite", 6, 30, "Look, the dog runs cat and the play.\n"),
        ("intersect", 6, 30, "Look, the dog.\n"),
        ("subtract", 6, 30, "Look, cat and the play.\n"),
        ("exclude", 6, 30, "Look, runs cat and the play.\n"),
        ("insert_raw", 6, 6, "Look, the dog runsthe cat and the dog play.\n"),
    ];
    for (op, start, end, want) in drops {
        let (status, v) =
            srv.call("POST", &format!("{doc}/fragments/{fid}/drop"), Some(json!({"op": op, "start": start, "end": end})));
        ensure!(status == 200 && v["new_composition"] == want, "{op}: {status} {v}");
        changes.push(as_change(&v));
        let view = srv.check_text(&id, want, op)?;
        ensure!(view["fragments"].as_array().unwrap().is_empty(), "{op} did not consume the fragment");
        let (status, v) = srv.call("POST", &format!("{doc}/undo"), None);
        ensure!(status == 200 && v["new_composition"] == cut, "undo {op}: {status} {v}");
        changes.push(as_change(&v));
        let view = srv.check_text(&id, cut, &format!("undo {op}"))?;
        ensure!(view["fragments"][0]["text"] == "the dog runs", "undo {op} did not restore the fragment");
    }

    let (status, v) = srv.call("POST", &format!("{doc}/layers"), Some(json!({"name": "edits"})));
    ensure!(status == 201 && v["ordinal"] == 1, "add layer: {status} {v}");
    changes.push(as_change(&v));
    let plural = "Look, the cats and the dog play.\n";
    let (status, v) = srv.call(
        "POST",
        &format!("{doc}/transform"),
        Some(json!({"tool": "set_number", "number": "plural", "start": 10, "end": 13})),
    );
    ensure!(status == 200 && v["new_composition"] == plural, "plural on layer: {status} {v}");
    changes.push(as_change(&v));
    for (visible, want) in [(false, cut), (true, plural)] {
        let (status, v) = srv.call("PATCH", &format!("{doc}/layers/1"), Some(json!({"visible": visible})));
        ensure!(status == 200 && v["new_composition"] == want, "visible={visible}: {status} {v}");
        changes.push(as_change(&v));
        srv.check_text(&id, want, "layer toggle")?;
    }
    let (status, v) = srv.call("DELETE", &format!("{doc}/layers/1"), None);
    ensure!(status == 200 && v["new_composition"] == cut, "delete layer: {status} {v}");
    changes.push(as_change(&v));
    srv.check_text(&id, cut, "layer deleted")?;

    for (k, want) in changes.iter().enumerate() {
        let got = events
            .recv_timeout(Duration::from_secs(10))
            .map_err(|_| format!("event {k} of {} never arrived", changes.len()))?;
        ensure!(&got == want, "event {k} differs: {got:?} vs {want:?}");
    }
    ensure!(events.recv_timeout(Duration::from_millis(300)).is_err(), "extra events after the last mutation");
    Ok(changes.len())
}

pub fn mock_end_to_end() -> Outcome {
    let srv = Server::start();
    let tools = run_tools(&srv)?;
    run_errors(&srv)?;
    let events = run_session(&srv)?;
    Ok(format!(
        "{tools} tool requests and 5 fragment drops byte-exact over HTTP and on disk; injected failure left file intact; {events} SSE events matched"
    ))
}
