//! JSON-over-HTTP document service with a server-sent event stream per
//! document.

use std::collections::HashMap;
use std::convert::Infallible;
use std::sync::{Arc, Mutex};

use axum::body::Bytes;
use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::response::sse::{Event, KeepAlive, Sse};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, patch, post};
use axum::{Json, Router};
use futures_util::stream::{self, Stream};
use serde::de::DeserializeOwned;
use serde::Deserialize;
use serde_json::{json, Value};
use tokio::sync::broadcast;

use textlayers_core::backend::LanguageBackend;
use textlayers_core::document::{now_ms, Change, DocumentError, DocumentStore, FragmentPatch, LayerPatch};
use textlayers_core::engine::{BooleanOpKind, Engine, SelectionRange};
use textlayers_core::tone::{tone_to_colour, tone_to_wheel, ToneVector};

use crate::ops::{classify, parse_action, Action, Failure, TransformBody};

const EVENT_BUFFER: usize = 256;

pub struct AppState {
    store: DocumentStore,
    engine: Engine,
    channels: Mutex<HashMap<String, broadcast::Sender<Change>>>,
}

impl AppState {
    pub fn new(store: DocumentStore, backend: Arc<dyn LanguageBackend>, resize_variants: usize) -> Self {
        AppState { store, engine: Engine::new(backend, resize_variants), channels: Mutex::new(HashMap::new()) }
    }

    pub fn store(&self) -> &DocumentStore {
        &self.store
    }

    fn sender(&self, id: &str) -> broadcast::Sender<Change> {
        self.channels
            .lock()
            .unwrap()
            .entry(id.to_string())
            .or_insert_with(|| broadcast::channel(EVENT_BUFFER).0)
            .clone()
    }

    fn publish(&self, id: &str, change: &Change) {
        // Without subscribers there is nobody to tell.
        let _ = self.sender(id).send(change.clone());
    }

    /// Runs a mutation and broadcasts its change once persisted.
    fn mutate<T>(
        &self,
        id: &str,
        f: impl FnOnce(&mut textlayers_core::document::DocumentRecord, &Engine) -> Result<(Change, T), DocumentError>,
    ) -> Result<(Change, T), DocumentError> {
        self.store.mutate_then(id, |doc| f(doc, &self.engine), |(change, _)| self.publish(id, change))
    }
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    message: String,
}

impl ApiError {
    fn new(status: StatusCode, message: impl Into<String>) -> Self {
        ApiError { status, message: message.into() }
    }
}

impl From<DocumentError> for ApiError {
    fn from(e: DocumentError) -> Self {
        let status = match classify(&e) {
            Failure::NotFound => StatusCode::NOT_FOUND,
            Failure::Invalid => StatusCode::UNPROCESSABLE_ENTITY,
            Failure::Conflict => StatusCode::CONFLICT,
            Failure::Backend => StatusCode::BAD_GATEWAY,
            Failure::Internal => StatusCode::INTERNAL_SERVER_ERROR,
        };
        ApiError::new(status, e.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(json!({ "error": self.message, "status": self.status.as_u16() }))).into_response()
    }
}

type ApiResult = Result<Response, ApiError>;
type Shared = State<Arc<AppState>>;

/// Parses a JSON body; an empty body reads as `{}`.
fn body<T: DeserializeOwned>(bytes: &Bytes) -> Result<T, ApiError> {
    let raw: &[u8] = if bytes.iter().all(u8::is_ascii_whitespace) { b"{}" } else { bytes };
    serde_json::from_slice(raw).map_err(|e| ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, format!("bad request body: {e}")))
}

async fn blocking<T: Send + 'static>(f: impl FnOnce() -> Result<T, ApiError> + Send + 'static) -> Result<T, ApiError> {
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))?
}

fn change_json(change: &Change, text: String) -> serde_json::Map<String, Value> {
    let mut m = serde_json::Map::new();
    m.insert("changeset".into(), serde_json::to_value(&change.changeset).unwrap());
    m.insert("timeline".into(), serde_json::to_value(&change.timeline).unwrap());
    m.insert("revision".into(), json!(change.revision));
    m.insert("new_composition".into(), Value::String(text));
    m
}

fn ok(status: StatusCode, map: serde_json::Map<String, Value>) -> Response {
    (status, Json(Value::Object(map))).into_response()
}

pub fn build_app(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/api/docs", post(create_doc))
        .route("/api/docs/{id}", get(get_doc))
        .route("/api/docs/{id}/transform", post(transform))
        .route("/api/docs/{id}/undo", post(undo))
        .route("/api/docs/{id}/tone", axum::routing::put(set_tone))
        .route("/api/docs/{id}/fragments", post(create_fragment))
        .route("/api/docs/{id}/fragments/{fid}", patch(update_fragment))
        .route("/api/docs/{id}/fragments/{fid}/drop", post(drop_fragment))
        .route("/api/docs/{id}/layers", post(add_layer))
        .route("/api/docs/{id}/layers/{ordinal}", patch(update_layer).delete(delete_layer))
        .route("/api/docs/{id}/events", get(events))
        .route("/api/tone/estimate", post(estimate_tone))
        .with_state(state)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CreateBody {
    #[serde(default)]
    text: String,
}

async fn create_doc(State(app): Shared, bytes: Bytes) -> ApiResult {
    let req: CreateBody = body(&bytes)?;
    let view = blocking(move || {
        let doc = app.store.create(&req.text)?;
        let view = doc.lock().unwrap().view();
        Ok(view)
    })
    .await?;
    Ok((StatusCode::CREATED, Json(view)).into_response())
}

async fn get_doc(State(app): Shared, Path(id): Path<String>) -> ApiResult {
    let view = blocking(move || Ok(app.store.read(&id, |d| d.view())?)).await?;
    Ok(Json(view).into_response())
}

async fn transform(State(app): Shared, Path(id): Path<String>, bytes: Bytes) -> ApiResult {
    let req: TransformBody = body(&bytes)?;
    blocking(move || {
        let sel = req.selection();
        let (change, (extra, text)) = app.mutate(&id, |doc, engine| {
            let now = now_ms();
            let (change, extra) = match parse_action(&req.tool, req.params, doc.current_tone)? {
                Action::Tool(tool) => {
                    let (change, outcome) = doc.transform(engine, sel, &tool, now)?;
                    (change, json!({ "new_selection": outcome.new_selection, "provenance": outcome.provenance }))
                }
                Action::EstimateTone => {
                    let (tone, change) = doc.estimate_tone(engine, sel, now)?;
                    (change, json!({ "tone": tone }))
                }
                Action::Boolean { op, fragment } => {
                    let outcome = engine.boolean_merge(&doc.text(), &fragment, sel, op)?;
                    let change = doc.apply_outcome(outcome.clone(), now, None, None)?;
                    (change, json!({ "new_selection": outcome.new_selection, "provenance": outcome.provenance }))
                }
            };
            Ok((change, (extra, doc.text())))
        })?;
        let mut m = change_json(&change, text);
        m.extend(extra.as_object().cloned().unwrap_or_default());
        Ok(ok(StatusCode::OK, m))
    })
    .await
}

async fn undo(State(app): Shared, Path(id): Path<String>) -> ApiResult {
    blocking(move || {
        let (change, text) = app.mutate(&id, |doc, _| {
            let change = doc.undo(now_ms())?;
            Ok((change, doc.text()))
        })?;
        Ok(ok(StatusCode::OK, change_json(&change, text)))
    })
    .await
}

async fn set_tone(State(app): Shared, Path(id): Path<String>, bytes: Bytes) -> ApiResult {
    let tone: ToneVector = body(&bytes)?;
    blocking(move || {
        let (change, text) = app.mutate(&id, |doc, _| {
            let change = doc.set_tone(tone, now_ms());
            Ok((change, doc.text()))
        })?;
        let mut m = change_json(&change, text);
        m.insert("tone".into(), serde_json::to_value(tone).unwrap());
        Ok(ok(StatusCode::OK, m))
    })
    .await
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct FragmentBody {
    start: usize,
    end: usize,
    #[serde(default)]
    x: f64,
    #[serde(default)]
    y: f64,
}

async fn create_fragment(State(app): Shared, Path(id): Path<String>, bytes: Bytes) -> ApiResult {
    let req: FragmentBody = body(&bytes)?;
    blocking(move || {
        let fid = textlayers_core::document::new_id();
        let (change, (fragment, text)) = app.mutate(&id, |doc, _| {
            let (fragment, change) =
                doc.fragment_from_selection(SelectionRange::new(req.start, req.end), req.x, req.y, fid, now_ms())?;
            Ok((change, (fragment, doc.text())))
        })?;
        let mut m = change_json(&change, text);
        m.insert("fragment".into(), serde_json::to_value(fragment).unwrap());
        Ok(ok(StatusCode::CREATED, m))
    })
    .await
}

async fn update_fragment(State(app): Shared, Path((id, fid)): Path<(String, String)>, bytes: Bytes) -> ApiResult {
    let patch: FragmentPatch = body(&bytes)?;
    blocking(move || {
        let (change, (fragment, text)) = app.mutate(&id, |doc, _| {
            let (fragment, change) = doc.update_fragment(&fid, &patch, now_ms())?;
            Ok((change, (fragment, doc.text())))
        })?;
        let mut m = change_json(&change, text);
        m.insert("fragment".into(), serde_json::to_value(fragment).unwrap());
        Ok(ok(StatusCode::OK, m))
    })
    .await
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct DropBody {
    op: BooleanOpKind,
    start: usize,
    end: usize,
}

async fn drop_fragment(State(app): Shared, Path((id, fid)): Path<(String, String)>, bytes: Bytes) -> ApiResult {
    let req: DropBody = body(&bytes)?;
    blocking(move || {
        let (change, (outcome, text)) = app.mutate(&id, |doc, engine| {
            let (change, outcome) =
                doc.drop_fragment(engine, &fid, req.op, SelectionRange::new(req.start, req.end), now_ms())?;
            Ok((change, (outcome, doc.text())))
        })?;
        let mut m = change_json(&change, text);
        m.insert("new_selection".into(), serde_json::to_value(outcome.new_selection).unwrap());
        m.insert("provenance".into(), serde_json::to_value(outcome.provenance).unwrap());
        Ok(ok(StatusCode::OK, m))
    })
    .await
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct LayerBody {
    #[serde(default)]
    name: Option<String>,
}

async fn add_layer(State(app): Shared, Path(id): Path<String>, bytes: Bytes) -> ApiResult {
    let req: LayerBody = body(&bytes)?;
    blocking(move || {
        let (change, (ordinal, text)) = app.mutate(&id, |doc, _| {
            let name = req.name.unwrap_or_else(|| format!("Layer {}", doc.stack.next_ordinal()));
            let (ordinal, change) = doc.add_layer(&name, now_ms());
            Ok((change, (ordinal, doc.text())))
        })?;
        let mut m = change_json(&change, text);
        m.insert("ordinal".into(), json!(ordinal));
        Ok(ok(StatusCode::CREATED, m))
    })
    .await
}

async fn update_layer(State(app): Shared, Path((id, ordinal)): Path<(String, u32)>, bytes: Bytes) -> ApiResult {
    let patch: LayerPatch = body(&bytes)?;
    blocking(move || {
        let (change, text) = app.mutate(&id, |doc, _| {
            let change = doc.update_layer(ordinal, &patch, now_ms())?;
            Ok((change, doc.text()))
        })?;
        Ok(ok(StatusCode::OK, change_json(&change, text)))
    })
    .await
}

async fn delete_layer(State(app): Shared, Path((id, ordinal)): Path<(String, u32)>) -> ApiResult {
    blocking(move || {
        let (change, text) = app.mutate(&id, |doc, _| {
            let change = doc.delete_layer(ordinal, now_ms())?;
            Ok((change, doc.text()))
        })?;
        Ok(ok(StatusCode::OK, change_json(&change, text)))
    })
    .await
}

async fn events(
    State(app): Shared,
    Path(id): Path<String>,
) -> Result<Sse<impl Stream<Item = Result<Event, Infallible>>>, ApiError> {
    let check = app.clone();
    let probe = id.clone();
    blocking(move || Ok(check.store.get(&probe).map(|_| ())?)).await?;
    let rx = app.sender(&id).subscribe();
    let stream = stream::unfold(rx, |mut rx| async move {
        loop {
            match rx.recv().await {
                Ok(change) => {
                    let event = Event::default().event("change").json_data(&change).expect("changes serialize");
                    return Some((Ok(event), rx));
                }
                // A slow subscriber skips what it missed and resyncs by revision.
                Err(broadcast::error::RecvError::Lagged(_)) => continue,
                Err(broadcast::error::RecvError::Closed) => return None,
            }
        }
    });
    Ok(Sse::new(stream).keep_alive(KeepAlive::default()))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct EstimateBody {
    text: String,
}

async fn estimate_tone(State(app): Shared, bytes: Bytes) -> ApiResult {
    let req: EstimateBody = body(&bytes)?;
    let tone = blocking(move || Ok(app.engine.estimate_text_tone(&req.text).map_err(DocumentError::from)?)).await?;
    Ok(Json(json!({ "tone": tone, "colour": tone_to_colour(tone), "wheel": tone_to_wheel(tone) })).into_response())
}
