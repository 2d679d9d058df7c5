//! Batch commands over document files.

use std::path::Path;

use serde_json::{Map, Value};
use textlayers_core::document::{load_file, now_ms, save_file, DocumentError, DocumentRecord};
use textlayers_core::engine::{Engine, SelectionRange};

use crate::ops::{classify, parse_action, Action, Failure};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_VALIDATION: i32 = 3;
pub const EXIT_BACKEND: i32 = 4;

#[derive(Debug, PartialEq, Eq)]
pub struct CommandError {
    pub code: i32,
    pub message: String,
}

impl CommandError {
    pub fn usage(message: impl Into<String>) -> Self {
        CommandError { code: EXIT_USAGE, message: message.into() }
    }
}

impl From<DocumentError> for CommandError {
    fn from(e: DocumentError) -> Self {
        let code = match classify(&e) {
            Failure::Backend => EXIT_BACKEND,
            _ => EXIT_VALIDATION,
        };
        CommandError { code, message: e.to_string() }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExportFormat {
    Txt,
    Json,
}

/// Writes a new document file holding `text`. Refuses to overwrite.
pub fn init(path: &Path, text: &str) -> Result<String, CommandError> {
    if path.exists() {
        return Err(CommandError { code: EXIT_VALIDATION, message: format!("{} already exists", path.display()) });
    }
    let doc = DocumentRecord::new(textlayers_core::document::new_id(), text, now_ms());
    save_file(path, &doc)?;
    Ok(doc.id)
}

pub fn compose(path: &Path) -> Result<String, CommandError> {
    Ok(load_file(path)?.text())
}

pub fn export(path: &Path, format: ExportFormat) -> Result<String, CommandError> {
    let doc = load_file(path)?;
    Ok(match format {
        ExportFormat::Txt => doc.text(),
        ExportFormat::Json => serde_json::to_string_pretty(&doc.view()).expect("views serialize"),
    })
}

/// Runs one operation on a document file in place and returns the new
/// composition. The file is rewritten only on success.
pub fn apply(
    path: &Path,
    engine: &Engine,
    kind: &str,
    start: usize,
    end: usize,
    params: Option<&str>,
) -> Result<String, CommandError> {
    let params: Map<String, Value> = match params {
        None => Map::new(),
        Some(raw) => match serde_json::from_str(raw) {
            Ok(Value::Object(m)) => m,
            _ => return Err(CommandError::usage("--params must be a JSON object")),
        },
    };
    let mut doc = load_file(path)?;
    let sel = SelectionRange::new(start, end);
    let now = now_ms();
    match parse_action(kind, params, doc.current_tone)? {
        Action::Tool(tool) => {
            doc.transform(engine, sel, &tool, now)?;
        }
        Action::EstimateTone => {
            doc.estimate_tone(engine, sel, now)?;
        }
        Action::Boolean { op, fragment } => {
            let outcome = engine.boolean_merge(&doc.text(), &fragment, sel, op).map_err(DocumentError::from)?;
            doc.apply_outcome(outcome, now, None, None)?;
        }
    }
    save_file(path, &doc)?;
    Ok(doc.text())
}
