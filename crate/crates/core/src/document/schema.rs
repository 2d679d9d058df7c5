//! On-disk document format (version 1).

use serde::{Deserialize, Serialize};

use super::{DocumentError, DocumentRecord, Fragment, OpLogEntry};
use crate::layers::{AnchorBoundary, AnchoredEdit, Cell, Layer, LayerStack, Side, StableId};
use crate::tone::ToneVector;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileDocument {
    version: u32,
    id: String,
    active_layer: u32,
    next_layer_ordinal: u32,
    current_tone: ToneVector,
    layers: Vec<FileLayer>,
    fragments: Vec<Fragment>,
    op_log: Vec<OpLogEntry>,
    revision: u64,
    created: u64,
    modified: u64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileLayer {
    ordinal: u32,
    name: String,
    visible: bool,
    id_counter: u32,
    edits: Vec<FileEdit>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileEdit {
    start: FileAnchor,
    end: FileAnchor,
    replacement: Vec<FileCell>,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum FileAnchor {
    Sentinel(Sentinel),
    Id { layer: u32, counter: u32, side: Side },
}

#[derive(Serialize, Deserialize)]
enum Sentinel {
    #[serde(rename = "BEGIN")]
    Begin,
    #[serde(rename = "END")]
    End,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileCell {
    ch: String,
    id: StableId,
}

impl From<AnchorBoundary> for FileAnchor {
    fn from(a: AnchorBoundary) -> Self {
        match a {
            AnchorBoundary::Begin => FileAnchor::Sentinel(Sentinel::Begin),
            AnchorBoundary::End => FileAnchor::Sentinel(Sentinel::End),
            AnchorBoundary::Id { id, side } => FileAnchor::Id { layer: id.layer, counter: id.counter, side },
        }
    }
}

impl From<FileAnchor> for AnchorBoundary {
    fn from(a: FileAnchor) -> Self {
        match a {
            FileAnchor::Sentinel(Sentinel::Begin) => AnchorBoundary::Begin,
            FileAnchor::Sentinel(Sentinel::End) => AnchorBoundary::End,
            FileAnchor::Id { layer, counter, side } => AnchorBoundary::Id { id: StableId { layer, counter }, side },
        }
    }
}

/// Canonical JSON of a record: sorted keys, two-space indentation and
/// shortest round-trip floats.
pub fn to_canonical_json(doc: &DocumentRecord) -> Vec<u8> {
    let stack = &doc.stack;
    let file = FileDocument {
        version: FORMAT_VERSION,
        id: doc.id.clone(),
        active_layer: stack.active_ordinal(),
        next_layer_ordinal: stack.next_ordinal(),
        current_tone: doc.current_tone,
        layers: stack
            .layers()
            .iter()
            .map(|l| FileLayer {
                ordinal: l.ordinal(),
                name: l.name().to_string(),
                visible: l.is_visible(),
                id_counter: l.id_counter(),
                edits: l
                    .edits()
                    .iter()
                    .map(|e| FileEdit {
                        start: e.start.into(),
                        end: e.end.into(),
                        replacement: e.replacement.iter().map(|c| FileCell { ch: c.text.to_string(), id: c.id }).collect(),
                    })
                    .collect(),
            })
            .collect(),
        fragments: doc.fragments.clone(),
        op_log: doc.op_log.clone(),
        revision: doc.revision,
        created: doc.created_ms,
        modified: doc.modified_ms,
    };
    // Going through `Value` sorts every object's keys.
    let value = serde_json::to_value(&file).expect("documents serialize");
    let mut out = serde_json::to_vec_pretty(&value).expect("values serialize");
    out.push(b'\n');
    out
}

pub fn from_json(bytes: &[u8]) -> Result<DocumentRecord, DocumentError> {
    let bad = |e: String| DocumentError::Corrupt(e);
    let version = serde_json::from_slice::<serde_json::Value>(bytes)
        .map_err(|e| bad(e.to_string()))?
        .get("version")
        .and_then(serde_json::Value::as_u64)
        .ok_or_else(|| bad("missing version".into()))?;
    if version != u64::from(FORMAT_VERSION) {
        return Err(bad(format!("unsupported version {version}")));
    }
    let file: FileDocument = serde_json::from_slice(bytes).map_err(|e| bad(e.to_string()))?;
    let mut layers = Vec::with_capacity(file.layers.len());
    for l in file.layers {
        let edits = l
            .edits
            .into_iter()
            .map(|e| AnchoredEdit {
                start: e.start.into(),
                end: e.end.into(),
                replacement: e.replacement.into_iter().map(|c| Cell::new(&c.ch, c.id)).collect(),
            })
            .collect();
        layers.push(Layer::from_parts(l.ordinal, l.name, l.visible, l.id_counter, edits).map_err(|e| bad(e.to_string()))?);
    }
    let stack = LayerStack::from_parts(layers, file.active_layer, file.next_layer_ordinal).map_err(|e| bad(e.to_string()))?;
    for f in &file.fragments {
        f.validate().map_err(|e| bad(e.to_string()))?;
    }
    Ok(DocumentRecord {
        id: file.id,
        stack,
        fragments: file.fragments,
        current_tone: file.current_tone,
        op_log: file.op_log,
        revision: file.revision,
        created_ms: file.created,
        modified_ms: file.modified,
    })
}
