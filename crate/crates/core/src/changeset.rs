//! Retain/delete/insert edit scripts over grapheme clusters.
//!
//! A [`ChangeSet`] is kept in canonical form: no empty ops, no two adjacent
//! ops of the same kind, and inside every changed run the deletion precedes
//! the insertion.

use serde::{Deserialize, Serialize};
use thiserror::Error;
use unicode_segmentation::UnicodeSegmentation;

use crate::text::{grapheme_len, PlainText};

/// Interior cell budget for the LCS table. Larger interiors fall back to a
/// single delete/insert pair.
pub const DIFF_CELL_CAP: usize = 5000;

/// Duration of the deletion phase of the change-highlight animation.
pub const DELETE_PHASE_MS: u32 = 500;
/// Duration of the insertion phase of the change-highlight animation.
pub const INSERT_PHASE_MS: u32 = 500;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ChangeSetError {
    #[error("changeset expects a source of {expected} graphemes, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },
    #[error("deleted text does not match the source at offset {offset}")]
    ContentMismatch { offset: usize },
    #[error("invalid changeset: {0}")]
    Invalid(&'static str),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Op {
    Retain(usize),
    Delete(String),
    Insert(String),
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Op>", into = "Vec<Op>")]
pub struct ChangeSet {
    ops: Vec<Op>,
}

/// Which side a position sticks to when text is inserted exactly at it.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Bias {
    Left,
    Right,
}

/// One changed region: `source_start..source_end` is deleted and `insert`
/// takes its place at `target_start`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Hunk {
    pub source_start: usize,
    pub source_end: usize,
    pub target_start: usize,
    pub deleted: String,
    pub insert: String,
}

impl ChangeSet {
    pub fn new() -> Self {
        ChangeSet::default()
    }

    /// Builds a changeset from arbitrary ops, normalizing them.
    pub fn from_ops(ops: impl IntoIterator<Item = Op>) -> Self {
        let mut cs = ChangeSet::new();
        for op in ops {
            match op {
                Op::Retain(n) => cs.retain(n),
                Op::Delete(s) => cs.delete(&s),
                Op::Insert(s) => cs.insert(&s),
            }
        }
        cs
    }

    pub fn ops(&self) -> &[Op] {
        &self.ops
    }

    pub fn retain(&mut self, n: usize) {
        if n == 0 {
            return;
        }
        if let Some(Op::Retain(last)) = self.ops.last_mut() {
            *last += n;
        } else {
            self.ops.push(Op::Retain(n));
        }
    }

    pub fn delete(&mut self, s: &str) {
        if s.is_empty() {
            return;
        }
        let len = self.ops.len();
        match self.ops.as_mut_slice() {
            [.., Op::Delete(d)] => d.push_str(s),
            [.., Op::Delete(d), Op::Insert(_)] => d.push_str(s),
            [.., Op::Insert(_)] => self.ops.insert(len - 1, Op::Delete(s.to_string())),
            _ => self.ops.push(Op::Delete(s.to_string())),
        }
    }

    pub fn insert(&mut self, s: &str) {
        if s.is_empty() {
            return;
        }
        if let Some(Op::Insert(last)) = self.ops.last_mut() {
            last.push_str(s);
        } else {
            self.ops.push(Op::Insert(s.to_string()));
        }
    }

    pub fn source_len(&self) -> usize {
        self.ops
            .iter()
            .map(|op| match op {
                Op::Retain(n) => *n,
                Op::Delete(s) => grapheme_len(s),
                Op::Insert(_) => 0,
            })
            .sum()
    }

    pub fn target_len(&self) -> usize {
        self.ops
            .iter()
            .map(|op| match op {
                Op::Retain(n) => *n,
                Op::Insert(s) => grapheme_len(s),
                Op::Delete(_) => 0,
            })
            .sum()
    }

    /// True when the changeset only retains.
    pub fn is_identity(&self) -> bool {
        self.ops.iter().all(|op| matches!(op, Op::Retain(_)))
    }

    /// Applies the changeset to `old`, checking length and deleted content.
    pub fn apply(&self, old: &PlainText) -> Result<String, ChangeSetError> {
        let expected = self.source_len();
        if expected != old.len() {
            return Err(ChangeSetError::LengthMismatch { expected, actual: old.len() });
        }
        let mut out = String::with_capacity(old.as_str().len());
        let mut pos = 0;
        for op in &self.ops {
            match op {
                Op::Retain(n) => {
                    out.push_str(old.slice(pos, pos + n));
                    pos += n;
                }
                Op::Delete(s) => {
                    let n = grapheme_len(s);
                    if old.slice(pos, pos + n) != s {
                        return Err(ChangeSetError::ContentMismatch { offset: pos });
                    }
                    pos += n;
                }
                Op::Insert(s) => out.push_str(s),
            }
        }
        Ok(out)
    }

    /// Convenience wrapper over [`ChangeSet::apply`] for `&str` input.
    pub fn apply_str(&self, old: &str) -> Result<String, ChangeSetError> {
        self.apply(&PlainText::new(old))
    }

    /// The changeset that undoes this one.
    pub fn invert(&self) -> ChangeSet {
        ChangeSet::from_ops(self.ops.iter().map(|op| match op {
            Op::Retain(n) => Op::Retain(*n),
            Op::Delete(s) => Op::Insert(s.clone()),
            Op::Insert(s) => Op::Delete(s.clone()),
        }))
    }

    /// Maps a source offset to the corresponding target offset.
    ///
    /// An insertion exactly at `p` pushes it forward only with
    /// [`Bias::Right`]; a position inside a deleted region collapses to the
    /// start of that region.
    pub fn map_position(&self, p: usize, bias: Bias) -> usize {
        let mut src = 0;
        let mut mapped = p;
        for op in &self.ops {
            match op {
                Op::Retain(n) => src += n,
                Op::Insert(s) => {
                    if src < p || (src == p && bias == Bias::Right) {
                        mapped += grapheme_len(s);
                    }
                }
                Op::Delete(s) => {
                    let n = grapheme_len(s);
                    if p >= src + n {
                        mapped -= n;
                    } else if p > src {
                        mapped -= p - src;
                    }
                    src += n;
                }
            }
            if src > p {
                break;
            }
        }
        mapped
    }

    /// The changed regions in order.
    pub fn hunks(&self) -> Vec<Hunk> {
        let mut hunks: Vec<Hunk> = Vec::new();
        let (mut src, mut dst) = (0, 0);
        let mut open: Option<Hunk> = None;
        for op in &self.ops {
            match op {
                Op::Retain(n) => {
                    hunks.extend(open.take());
                    src += n;
                    dst += n;
                }
                Op::Delete(s) => {
                    let h = open.get_or_insert_with(|| Hunk {
                        source_start: src,
                        source_end: src,
                        target_start: dst,
                        deleted: String::new(),
                        insert: String::new(),
                    });
                    let n = grapheme_len(s);
                    h.source_end += n;
                    h.deleted.push_str(s);
                    src += n;
                }
                Op::Insert(s) => {
                    let h = open.get_or_insert_with(|| Hunk {
                        source_start: src,
                        source_end: src,
                        target_start: dst,
                        deleted: String::new(),
                        insert: String::new(),
                    });
                    h.insert.push_str(s);
                    dst += grapheme_len(s);
                }
            }
        }
        hunks.extend(open);
        hunks
    }

    /// Builds a changeset over a source of `source_len` graphemes from
    /// sorted, non-overlapping hunks.
    pub fn from_hunks(source_len: usize, hunks: &[Hunk]) -> ChangeSet {
        let mut cs = ChangeSet::new();
        let mut pos = 0;
        for h in hunks {
            cs.retain(h.source_start - pos);
            cs.delete(&h.deleted);
            cs.insert(&h.insert);
            pos = h.source_end;
        }
        cs.retain(source_len - pos);
        cs
    }
}

impl TryFrom<Vec<Op>> for ChangeSet {
    type Error = ChangeSetError;

    fn try_from(ops: Vec<Op>) -> Result<Self, Self::Error> {
        for op in &ops {
            match op {
                Op::Retain(0) => return Err(ChangeSetError::Invalid("zero-length retain")),
                Op::Delete(s) | Op::Insert(s) if s.is_empty() => {
                    return Err(ChangeSetError::Invalid("empty delete or insert"))
                }
                _ => {}
            }
        }
        Ok(ChangeSet::from_ops(ops))
    }
}

impl From<ChangeSet> for Vec<Op> {
    fn from(cs: ChangeSet) -> Self {
        cs.ops
    }
}

/// Computes a valid edit script from `old` to `new`.
///
/// The common prefix and suffix are always retained. The interior is aligned
/// by a longest-common-subsequence table when it has at most
/// [`DIFF_CELL_CAP`] graphemes in total, and replaced wholesale otherwise.
pub fn diff(old: &str, new: &str) -> ChangeSet {
    let a: Vec<&str> = old.graphemes(true).collect();
    let b: Vec<&str> = new.graphemes(true).collect();
    let prefix = a.iter().zip(&b).take_while(|(x, y)| x == y).count();
    let max_suffix = a.len().min(b.len()) - prefix;
    let suffix = a
        .iter()
        .rev()
        .zip(b.iter().rev())
        .take(max_suffix)
        .take_while(|(x, y)| x == y)
        .count();
    let ai = &a[prefix..a.len() - suffix];
    let bi = &b[prefix..b.len() - suffix];

    let mut cs = ChangeSet::new();
    cs.retain(prefix);
    if ai.len() + bi.len() > DIFF_CELL_CAP || ai.is_empty() || bi.is_empty() {
        cs.delete(&ai.concat());
        cs.insert(&bi.concat());
    } else {
        lcs_script(ai, bi, &mut cs);
    }
    cs.retain(suffix);
    cs
}

fn lcs_script(a: &[&str], b: &[&str], cs: &mut ChangeSet) {
    let (n, m) = (a.len(), b.len());
    let w = m + 1;
    // table[i * w + j] = LCS length of a[i..] and b[j..]; n + m <= 5000 keeps it under u16.
    let mut table = vec![0u16; (n + 1) * w];
    for i in (0..n).rev() {
        for j in (0..m).rev() {
            table[i * w + j] = if a[i] == b[j] {
                table[(i + 1) * w + j + 1] + 1
            } else {
                table[(i + 1) * w + j].max(table[i * w + j + 1])
            };
        }
    }
    let (mut i, mut j) = (0, 0);
    while i < n && j < m {
        if a[i] == b[j] {
            cs.retain(1);
            i += 1;
            j += 1;
        } else if table[(i + 1) * w + j] >= table[i * w + j + 1] {
            cs.delete(a[i]);
            i += 1;
        } else {
            cs.insert(b[j]);
            j += 1;
        }
    }
    cs.delete(&a[i..].concat());
    cs.insert(&b[j..].concat());
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EventKind {
    Delete,
    Insert,
}

/// One animated span. Deletions are measured in source offsets, insertions
/// in target offsets.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimelineEvent {
    pub kind: EventKind,
    pub start: usize,
    pub end: usize,
    pub start_ms: u32,
    pub end_ms: u32,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnimationTimeline {
    pub events: Vec<TimelineEvent>,
    pub total_ms: u32,
}

/// Two-phase change-highlight schedule: every deletion fades out together,
/// then every insertion fades in together.
pub fn timeline(cs: &ChangeSet) -> AnimationTimeline {
    let mut events = Vec::new();
    let mut inserts = Vec::new();
    for h in cs.hunks() {
        if h.source_end > h.source_start {
            events.push(TimelineEvent {
                kind: EventKind::Delete,
                start: h.source_start,
                end: h.source_end,
                start_ms: 0,
                end_ms: DELETE_PHASE_MS,
            });
        }
        if !h.insert.is_empty() {
            inserts.push(TimelineEvent {
                kind: EventKind::Insert,
                start: h.target_start,
                end: h.target_start + grapheme_len(&h.insert),
                start_ms: DELETE_PHASE_MS,
                end_ms: DELETE_PHASE_MS + INSERT_PHASE_MS,
            });
        }
    }
    events.extend(inserts);
    let total_ms = if events.is_empty() { 0 } else { DELETE_PHASE_MS + INSERT_PHASE_MS };
    AnimationTimeline { events, total_ms }
}
