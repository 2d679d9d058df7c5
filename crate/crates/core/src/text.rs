//! Grapheme-aware text primitives: sentence segmentation, word counting and
//! format-preserving reintegration of rewritten passages.
//!
//! Every public position in this crate is a grapheme-cluster offset. Byte
//! offsets never escape this module.

use std::fmt;

use serde::{Deserialize, Serialize};
use unicode_segmentation::UnicodeSegmentation;

/// Abbreviations that never end a sentence, compared case-insensitively
/// against the whitespace-delimited token that carries the period.
pub const ABBREVIATIONS: &[&str] = &[
    "mr.", "mrs.", "dr.", "e.g.", "i.e.", "etc.", "vs.", "prof.", "st.",
];

/// An immutable string addressed by grapheme-cluster offsets.
#[derive(Clone, Default, PartialEq, Eq, Hash)]
pub struct PlainText {
    text: String,
    // Byte offset of each grapheme boundary, `0` and `text.len()` included.
    bounds: Vec<usize>,
}

impl PlainText {
    pub fn new(text: impl Into<String>) -> Self {
        let text = text.into();
        let mut bounds: Vec<usize> = text.grapheme_indices(true).map(|(b, _)| b).collect();
        bounds.push(text.len());
        PlainText { text, bounds }
    }

    pub fn as_str(&self) -> &str {
        &self.text
    }

    pub fn into_string(self) -> String {
        self.text
    }

    /// Length in grapheme clusters.
    pub fn len(&self) -> usize {
        self.bounds.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.text.is_empty()
    }

    /// Byte offset of grapheme boundary `offset`.
    ///
    /// # Panics
    /// If `offset > self.len()`.
    pub fn byte_offset(&self, offset: usize) -> usize {
        self.bounds[offset]
    }

    /// The text between two grapheme offsets.
    ///
    /// # Panics
    /// If the range is reversed or out of bounds.
    pub fn slice(&self, start: usize, end: usize) -> &str {
        assert!(start <= end && end <= self.len(), "grapheme range {start}..{end} out of bounds");
        &self.text[self.bounds[start]..self.bounds[end]]
    }

    pub fn grapheme(&self, index: usize) -> &str {
        self.slice(index, index + 1)
    }

    pub fn graphemes(&self) -> impl DoubleEndedIterator<Item = &str> + '_ {
        self.bounds.windows(2).map(move |w| &self.text[w[0]..w[1]])
    }

    /// Converts a byte offset that lies on a grapheme boundary to a grapheme offset.
    pub fn grapheme_offset(&self, byte: usize) -> Option<usize> {
        self.bounds.binary_search(&byte).ok()
    }
}

impl fmt::Debug for PlainText {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(&self.text, f)
    }
}

impl fmt::Display for PlainText {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.text)
    }
}

impl AsRef<str> for PlainText {
    fn as_ref(&self) -> &str {
        &self.text
    }
}

impl From<&str> for PlainText {
    fn from(s: &str) -> Self {
        PlainText::new(s)
    }
}

impl From<String> for PlainText {
    fn from(s: String) -> Self {
        PlainText::new(s)
    }
}

/// Number of grapheme clusters in `s`.
pub fn grapheme_len(s: &str) -> usize {
    s.graphemes(true).count()
}

pub(crate) fn is_whitespace_grapheme(g: &str) -> bool {
    !g.is_empty() && g.chars().all(char::is_whitespace)
}

/// A half-open sentence range in grapheme offsets.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SentenceSpan {
    pub start: usize,
    pub end: usize,
}

impl SentenceSpan {
    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.start == self.end
    }

    pub fn intersects(&self, start: usize, end: usize) -> bool {
        self.start < end && start < self.end
    }
}

fn is_sentence_terminator(g: &str) -> bool {
    matches!(g, "." | "!" | "?")
}

fn is_abbreviation(token: &str) -> bool {
    let token = token.trim_start_matches(|c: char| !c.is_alphanumeric());
    ABBREVIATIONS.iter().any(|a| a.eq_ignore_ascii_case(token))
}

/// Splits text into sentences.
///
/// A sentence ends after `.`, `!` or `?` when the terminator is followed by
/// whitespace and then an uppercase letter, or by the end of the text
/// (trailing whitespace allowed). A period that closes one of
/// [`ABBREVIATIONS`] never ends a sentence. Spans exclude surrounding
/// whitespace.
pub fn segment_sentences(text: &PlainText) -> Vec<SentenceSpan> {
    let graphemes: Vec<&str> = text.graphemes().collect();
    let n = graphemes.len();
    let mut spans = Vec::new();
    let mut start: Option<usize> = None;
    // Start of the current whitespace-delimited token.
    let mut token_start = 0;

    let mut i = 0;
    while i < n {
        let g = graphemes[i];
        if is_whitespace_grapheme(g) {
            token_start = i + 1;
            i += 1;
            continue;
        }
        if start.is_none() {
            start = Some(i);
        }
        if is_sentence_terminator(g) {
            let next = i + 1;
            let mut j = next;
            while j < n && is_whitespace_grapheme(graphemes[j]) {
                j += 1;
            }
            let boundary = if next == n || j == n {
                true
            } else if j > next {
                graphemes[j].chars().next().is_some_and(char::is_uppercase)
            } else {
                false
            };
            let abbreviated = g == "." && is_abbreviation(&graphemes[token_start..=i].concat());
            if boundary && !(abbreviated && j < n) {
                spans.push(SentenceSpan { start: start.take().unwrap(), end: i + 1 });
            }
        }
        i += 1;
    }
    if let Some(s) = start {
        let mut end = n;
        while end > s && is_whitespace_grapheme(graphemes[end - 1]) {
            end -= 1;
        }
        spans.push(SentenceSpan { start: s, end });
    }
    spans
}

/// Number of maximal runs of non-whitespace characters.
pub fn word_count(text: &str) -> usize {
    text.split_whitespace().count()
}

/// Sentence-final punctuation. `...` and `…` both map to [`TerminalPunct::Ellipsis`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TerminalPunct {
    Period,
    Exclamation,
    Question,
    Ellipsis,
}

impl TerminalPunct {
    pub fn as_str(self) -> &'static str {
        match self {
            TerminalPunct::Period => ".",
            TerminalPunct::Exclamation => "!",
            TerminalPunct::Question => "?",
            TerminalPunct::Ellipsis => "…",
        }
    }

    /// Terminal punctuation of already-trimmed text.
    pub fn of(trimmed: &str) -> Option<TerminalPunct> {
        if trimmed.ends_with("...") || trimmed.ends_with('…') {
            return Some(TerminalPunct::Ellipsis);
        }
        match trimmed.chars().last()? {
            '.' => Some(TerminalPunct::Period),
            '!' => Some(TerminalPunct::Exclamation),
            '?' => Some(TerminalPunct::Question),
            _ => None,
        }
    }
}

/// Surface formatting of a selection that survives a rewrite.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FormatSignature {
    pub leading_ws: String,
    pub trailing_ws: String,
    /// Whether the first letter is uppercase; `false` when there is no letter.
    pub starts_uppercase: bool,
    pub terminal_punct: Option<TerminalPunct>,
    has_letter: bool,
}

pub fn format_signature(selection: &str) -> FormatSignature {
    let trimmed_start = selection.trim_start();
    let leading_ws = selection[..selection.len() - trimmed_start.len()].to_string();
    let core = trimmed_start.trim_end();
    let trailing_ws = trimmed_start[core.len()..].to_string();
    let first_letter = core.chars().find(|c| c.is_alphabetic());
    FormatSignature {
        leading_ws,
        trailing_ws,
        starts_uppercase: first_letter.is_some_and(char::is_uppercase),
        terminal_punct: TerminalPunct::of(core),
        has_letter: first_letter.is_some(),
    }
}

fn set_first_letter_case(text: &str, upper: bool) -> String {
    let Some((idx, c)) = text.char_indices().find(|(_, c)| c.is_alphabetic()) else {
        return text.to_string();
    };
    if c.is_uppercase() == upper {
        return text.to_string();
    }
    let mut out = String::with_capacity(text.len() + 2);
    out.push_str(&text[..idx]);
    if upper {
        out.extend(c.to_uppercase());
    } else {
        out.extend(c.to_lowercase());
    }
    out.push_str(&text[idx + c.len_utf8()..]);
    out
}

/// Capitalizes the first letter of `text`.
pub fn capitalize_first(text: &str) -> String {
    set_first_letter_case(text, true)
}

/// Lowercases the first letter of `text`.
pub fn decapitalize_first(text: &str) -> String {
    set_first_letter_case(text, false)
}

/// Adjusts a rewritten passage to the formatting of the passage it replaces.
///
/// The original's surrounding whitespace is re-applied, the case of the first
/// letter is matched, a missing terminal punctuation mark is restored and a
/// spurious one (`.`, `!`, `?`) is dropped. A replacement that is blank, or
/// that is nothing but punctuation to be dropped, reintegrates to `""`.
pub fn reintegrate(original: &str, replacement: &str) -> String {
    let sig = format_signature(original);
    let mut core = replacement.trim().to_string();
    if sig.has_letter {
        core = set_first_letter_case(&core, sig.starts_uppercase);
    }
    match sig.terminal_punct {
        Some(p) => {
            if TerminalPunct::of(&core).is_none() && !core.is_empty() {
                core.push_str(p.as_str());
            }
        }
        None => {
            let kept = core.trim_end_matches(['.', '!', '?']).trim_end().len();
            core.truncate(kept);
        }
    }
    if core.is_empty() {
        return String::new();
    }
    format!("{}{}{}", sig.leading_ws, core, sig.trailing_ws)
}
