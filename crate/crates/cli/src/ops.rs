//! Request parsing shared by the HTTP service and the batch commands.

use serde::Deserialize;
use serde_json::{Map, Value};
use textlayers_core::backend::BackendError;
use textlayers_core::document::DocumentError;
use textlayers_core::engine::{BooleanOpKind, EngineError, SelectionRange, Tool};
use textlayers_core::tone::ToneVector;

/// What a transform request asks for.
#[derive(Clone, Debug, PartialEq)]
pub enum Action {
    Tool(Tool),
    EstimateTone,
    Boolean { op: BooleanOpKind, fragment: String },
}

fn invalid(msg: impl Into<String>) -> DocumentError {
    DocumentError::Invalid(msg.into())
}

/// Builds an action from a tool name and its parameters. `apply_tone`
/// without a `tone` uses `current_tone`.
pub fn parse_action(kind: &str, mut params: Map<String, Value>, current_tone: ToneVector) -> Result<Action, DocumentError> {
    if kind == "estimate_tone" {
        return Ok(Action::EstimateTone);
    }
    if let Ok(op) = serde_json::from_value::<BooleanOpKind>(Value::String(kind.to_string())) {
        let fragment = match params.remove("fragment") {
            Some(Value::String(s)) => s,
            _ => return Err(invalid(format!("`{kind}` needs a string `fragment` parameter"))),
        };
        return Ok(Action::Boolean { op, fragment });
    }
    if kind == "apply_tone" && !params.contains_key("tone") {
        params.insert("tone".into(), serde_json::to_value(current_tone).expect("tones serialize"));
    }
    params.insert("tool".into(), Value::String(kind.to_string()));
    serde_json::from_value(Value::Object(params))
        .map(Action::Tool)
        .map_err(|e| invalid(format!("bad `{kind}` request: {e}")))
}

/// Body of `POST /transform`: the tool name, the selection and any tool
/// parameters side by side.
#[derive(Debug, Deserialize)]
pub struct TransformBody {
    pub tool: String,
    pub start: usize,
    pub end: usize,
    #[serde(flatten)]
    pub params: Map<String, Value>,
}

impl TransformBody {
    pub fn selection(&self) -> SelectionRange {
        SelectionRange::new(self.start, self.end)
    }
}

/// Coarse failure classes used for HTTP statuses and exit codes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Failure {
    NotFound,
    Invalid,
    Conflict,
    Backend,
    Internal,
}

pub fn classify(e: &DocumentError) -> Failure {
    match e {
        DocumentError::NotFound(_) => Failure::NotFound,
        DocumentError::Invalid(_) => Failure::Invalid,
        DocumentError::Conflict(_) => Failure::Conflict,
        DocumentError::Engine(EngineError::Backend(BackendError::NoSplitPoint)) => Failure::Invalid,
        DocumentError::Engine(EngineError::Backend(_)) => Failure::Backend,
        DocumentError::Engine(_) => Failure::Invalid,
        DocumentError::Corrupt(_) | DocumentError::Io(_) => Failure::Internal,
    }
}
