//! Deterministic stand-in rules for every request kind.
//!
//! The rules are test fixtures, not linguistics. They exercise scoping,
//! reintegration and recording exactly the way a real model reply would.

use unicode_segmentation::UnicodeSegmentation;

use super::{
    keys, BackendError, BackendRequest, BackendResponse, Constraint, LanguageBackend, RequestKind, ResizeVariants,
    Slot,
};
use crate::text::{capitalize_first, decapitalize_first, segment_sentences, word_count, PlainText};
use crate::tone::ToneVector;

/// Words counted as positive by the mock tone estimate.
pub const POSITIVE_WORDS: &[&str] = &[
    "good", "great", "happy", "joy", "love", "lovely", "wonderful", "excellent", "nice", "glad", "pleasant",
    "bright", "beautiful", "kind", "calm", "fun", "best", "cheerful", "hope", "delighted",
];

/// Words counted as negative by the mock tone estimate.
pub const NEGATIVE_WORDS: &[&str] = &[
    "bad", "sad", "tired", "exhausted", "angry", "terrible", "awful", "hate", "poor", "worst", "pain", "fear",
    "wet", "cold", "dark", "miserable", "sick", "boring", "ugly", "cry",
];

#[derive(Clone, Copy, Debug, Default)]
pub struct MockBackend;

impl LanguageBackend for MockBackend {
    fn kind(&self) -> &'static str {
        "mock"
    }

    fn model(&self) -> &str {
        "mock"
    }

    fn complete(&self, req: &BackendRequest) -> Result<BackendResponse, BackendError> {
        req.validate()?;
        run(req).map(BackendResponse::single)
    }

    fn resize_variants(&self, sentence: &str, deltas: &[i64]) -> Result<ResizeVariants, BackendError> {
        if sentence.trim().is_empty() || deltas.is_empty() {
            return Err(BackendError::Validation("resize needs a sentence and at least one delta".into()));
        }
        let candidates = deltas.iter().map(|&d| (d, resize(sentence, d))).collect();
        Ok(ResizeVariants { candidates, partial: false })
    }
}

fn slot(req: &BackendRequest, s: Slot) -> &str {
    req.get_slot(s).unwrap_or("")
}

fn int(req: &BackendRequest, name: &str) -> Result<i64, BackendError> {
    req.get(name)
        .and_then(Constraint::as_int)
        .ok_or_else(|| BackendError::Validation(format!("constraint `{name}` must be an integer")))
}

fn text<'a>(req: &'a BackendRequest, name: &str) -> Result<&'a str, BackendError> {
    req.get(name)
        .and_then(Constraint::as_text)
        .ok_or_else(|| BackendError::Validation(format!("constraint `{name}` must be text")))
}

fn run(req: &BackendRequest) -> Result<String, BackendError> {
    let sentence = slot(req, Slot::Sentence);
    let selection = slot(req, Slot::Selection);
    let span = || -> Result<(usize, usize), BackendError> {
        Ok((int(req, keys::SELECTION_START)? as usize, int(req, keys::SELECTION_END)? as usize))
    };
    Ok(match req.kind {
        RequestKind::Erase => {
            let (s, e) = span()?;
            erase(sentence, s, e)
        }
        RequestKind::Repair => repair(sentence),
        RequestKind::Smudge => {
            let (s, e) = span()?;
            let t = PlainText::new(sentence);
            format!("{}{}{}", t.slice(0, s), shift_words(t.slice(s, e), true, 1), t.slice(e, t.len()))
        }
        RequestKind::SetNumber => {
            let (s, e) = span()?;
            let plural = match text(req, keys::NUMBER)? {
                "plural" => true,
                "singular" => false,
                other => return Err(BackendError::Validation(format!("unknown number `{other}`"))),
            };
            set_number(sentence, s, e, plural)
        }
        RequestKind::SetTense => {
            let (s, e) = span()?;
            set_tense(sentence, s, e, text(req, keys::TENSE)?)?
        }
        RequestKind::ApplyTone => {
            let tone = req
                .get(keys::TONE)
                .and_then(Constraint::as_tone)
                .ok_or_else(|| BackendError::Validation("constraint `tone` must be a tone vector".into()))?;
            apply_tone(selection, tone)
        }
        RequestKind::EstimateTone => serde_json::to_string(&estimate_tone(selection)).expect("tone serializes"),
        RequestKind::Prompt => {
            let word = slot(req, Slot::Prompt).split_whitespace().next().unwrap_or_default();
            format!("[{word}] {selection}")
        }
        RequestKind::Resize => resize(sentence, int(req, keys::DELTA)?),
        RequestKind::Rotate => {
            let d = req
                .get(keys::INTENSITY)
                .and_then(Constraint::as_real)
                .ok_or_else(|| BackendError::Validation("constraint `intensity` must be a number".into()))?;
            rotate(selection, d)
        }
        RequestKind::Split => split(sentence).ok_or(BackendError::NoSplitPoint)?,
        RequestKind::Combine => combine(sentence),
        RequestKind::Unite | RequestKind::Intersect | RequestKind::Subtract | RequestKind::Exclude => {
            boolean(req.kind, slot(req, Slot::Fragment), slot(req, Slot::Target))
        }
    })
}

/// A word with its byte and grapheme range.
struct Word {
    bytes: (usize, usize),
    graphemes: (usize, usize),
}

fn words(s: &str) -> Vec<Word> {
    let mut out = Vec::new();
    let mut current: Option<Word> = None;
    for (g, (b, gr)) in s.grapheme_indices(true).enumerate() {
        if crate::text::is_whitespace_grapheme(gr) {
            out.extend(current.take());
        } else {
            match &mut current {
                Some(w) => {
                    w.bytes.1 = b + gr.len();
                    w.graphemes.1 = g + 1;
                }
                None => current = Some(Word { bytes: (b, b + gr.len()), graphemes: (g, g + 1) }),
            }
        }
    }
    out.extend(current);
    out
}

/// Rebuilds `s` with each word replaced by `f(index, word)`. `None` removes
/// the word together with the whitespace that follows it.
fn map_words(s: &str, mut f: impl FnMut(usize, &str) -> Option<String>) -> String {
    let ws = words(s);
    let Some(first) = ws.first() else {
        return s.to_string();
    };
    let mut out = String::with_capacity(s.len() + 8);
    out.push_str(&s[..first.bytes.0]);
    let mut prev: Option<usize> = None;
    for (i, w) in ws.iter().enumerate() {
        let Some(rep) = f(i, &s[w.bytes.0..w.bytes.1]) else {
            continue;
        };
        if let Some(k) = prev {
            out.push_str(&s[ws[k].bytes.1..ws[k + 1].bytes.0]);
        }
        out.push_str(&rep);
        prev = Some(i);
    }
    out.push_str(&s[ws[ws.len() - 1].bytes.1..]);
    out
}

fn collapse_whitespace(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Removes spaces directly before `, . ; : ! ?`.
fn fix_space_before_punct(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        if matches!(c, ',' | '.' | ';' | ':' | '!' | '?') {
            let trimmed = out.trim_end_matches(' ').len();
            out.truncate(trimmed);
        }
        out.push(c);
    }
    out
}

fn erase(sentence: &str, start: usize, end: usize) -> String {
    let t = PlainText::new(sentence);
    let joined = format!("{}{}", t.slice(0, start), t.slice(end, t.len()));
    fix_space_before_punct(&collapse_whitespace(&joined))
}

fn repair(sentence: &str) -> String {
    let mut s = capitalize_first(&collapse_whitespace(sentence));
    if !s.is_empty() && crate::text::TerminalPunct::of(&s).is_none() {
        s.push('.');
    }
    s
}

/// Splits off the trailing run of sentence-final punctuation.
fn split_terminal(s: &str) -> (&str, &str) {
    let core = s.trim_end_matches(['.', '!', '?', '…']);
    (core, &s[core.len()..])
}

/// Cyclically shifts the words of `s` by `k` (right or left), keeping
/// whitespace and terminal punctuation in place.
fn shift_words(s: &str, right: bool, k: usize) -> String {
    let lead = &s[..s.len() - s.trim_start().len()];
    let body = s.trim();
    let trail = &s[lead.len() + body.len()..];
    let (core, punct) = split_terminal(body);
    let ws = words(core);
    let n = ws.len();
    if n < 2 || k.is_multiple_of(n) {
        return s.to_string();
    }
    let texts: Vec<&str> = ws.iter().map(|w| &core[w.bytes.0..w.bytes.1]).collect();
    let k = k % n;
    let shifted = map_words(core, |i, _| {
        let src = if right { (i + n - k) % n } else { (i + k) % n };
        Some(texts[src].to_string())
    });
    format!("{lead}{shifted}{punct}{trail}")
}

fn rotate(selection: &str, intensity: f64) -> String {
    let (core, _) = split_terminal(selection.trim());
    let n = words(core).len();
    if n == 0 {
        return selection.to_string();
    }
    let k = (intensity.clamp(0.0, 1.0) * n as f64).round() as usize % n;
    shift_words(selection, false, k)
}

/// Splits `word` into its alphanumeric-led body and trailing punctuation.
fn word_parts(word: &str) -> (&str, &str) {
    let body = word.trim_end_matches(|c: char| !c.is_alphanumeric());
    (body, &word[body.len()..])
}

fn in_selection(w: &Word, start: usize, end: usize) -> bool {
    w.graphemes.0 < end && w.graphemes.1 > start
}

fn set_number(sentence: &str, start: usize, end: usize, plural: bool) -> String {
    let ws = words(sentence);
    map_words(sentence, |i, word| {
        if !in_selection(&ws[i], start, end) {
            return Some(word.to_string());
        }
        let (body, tail) = word_parts(word);
        if body.is_empty() {
            return Some(word.to_string());
        }
        Some(if plural {
            format!("{body}s{tail}")
        } else if body.len() > 1 && (body.ends_with('s') || body.ends_with('S')) {
            format!("{}{tail}", &body[..body.len() - 1])
        } else {
            word.to_string()
        })
    })
}

fn normalized(word: &str) -> String {
    word.trim_matches(|c: char| !c.is_alphanumeric()).to_lowercase()
}

fn set_tense(sentence: &str, start: usize, end: usize, tense: &str) -> Result<String, BackendError> {
    let ws = words(sentence);
    let Some(first) = ws.iter().position(|w| in_selection(w, start, end)) else {
        return Ok(sentence.to_string());
    };
    let texts: Vec<&str> = ws.iter().map(|w| &sentence[w.bytes.0..w.bytes.1]).collect();
    let preceded_by_will = first > 0 && normalized(texts[first - 1]) == "will";
    let drop_will = |i: usize| {
        normalized(texts[i]) == "will" && (in_selection(&ws[i], start, end) || (i + 1 == first && preceded_by_will))
    };
    match tense {
        "future" => Ok(if preceded_by_will {
            sentence.to_string()
        } else {
            map_words(sentence, |i, w| Some(if i == first { format!("will {w}") } else { w.to_string() }))
        }),
        "present" => Ok(map_words(sentence, |i, w| (!drop_will(i)).then(|| w.to_string()))),
        "past" => {
            let target = (first..ws.len()).find(|&i| in_selection(&ws[i], start, end) && !drop_will(i));
            Ok(map_words(sentence, |i, w| {
                if drop_will(i) {
                    return None;
                }
                if Some(i) != target {
                    return Some(w.to_string());
                }
                let (body, tail) = word_parts(w);
                Some(if body.is_empty() || body.ends_with("ed") { w.to_string() } else { format!("{body}ed{tail}") })
            }))
        }
        other => Err(BackendError::Validation(format!("unknown tense `{other}`"))),
    }
}

/// Mock tone estimate.
pub fn estimate_tone(text: &str) -> ToneVector {
    let list: Vec<&str> = text.split_whitespace().collect();
    let lengths: Vec<usize> =
        list.iter().map(|w| w.chars().filter(|c| c.is_alphanumeric()).count()).filter(|&n| n > 0).collect();
    let formality = if lengths.is_empty() {
        0.0
    } else {
        (lengths.iter().sum::<usize>() as f64 / lengths.len() as f64).round().min(10.0)
    };
    let (mut pos, mut neg) = (0i64, 0i64);
    for w in &list {
        let key = normalized(w);
        pos += POSITIVE_WORDS.contains(&key.as_str()) as i64;
        neg += NEGATIVE_WORDS.contains(&key.as_str()) as i64;
    }
    let sentiment = (5 + pos - neg).clamp(0, 10);
    let sentences = segment_sentences(&PlainText::new(text));
    let complexity = if sentences.is_empty() {
        0.0
    } else {
        let t = PlainText::new(text);
        let total: usize = sentences.iter().map(|s| word_count(t.slice(s.start, s.end))).sum();
        (total as f64 / sentences.len() as f64 / 3.0).round().min(10.0)
    };
    ToneVector { formality: formality as u8, sentiment: sentiment as u8, complexity: complexity as u8 }
}

fn apply_tone(selection: &str, tone: ToneVector) -> String {
    let current = estimate_tone(selection);
    let mut out = selection.to_string();
    if tone.formality > current.formality {
        out = map_words(&out, |_, w| Some(capitalize_first(w)));
    } else if tone.formality < current.formality {
        out = out.to_lowercase();
    }
    if tone.sentiment != current.sentiment {
        let lead = &out[..out.len() - out.trim_start().len()];
        let body = out.trim();
        let trail = &out[lead.len() + body.len()..];
        let (core, _) = split_terminal(body);
        let mark = if tone.sentiment > current.sentiment { "!" } else { "." };
        out = format!("{lead}{core}{mark}{trail}");
    }
    out
}

fn resize(sentence: &str, delta: i64) -> String {
    let body = sentence.trim();
    let (core, punct) = split_terminal(body);
    let ws = words(core);
    let n = ws.len();
    if n == 0 || delta == 0 {
        return sentence.to_string();
    }
    let resized = if delta < 0 {
        let keep = (n as i64 + delta).max(1) as usize;
        core[..ws[keep - 1].bytes.1].to_string()
    } else {
        let last = &core[ws[n - 1].bytes.0..ws[n - 1].bytes.1];
        let mut s = core.to_string();
        for _ in 0..delta {
            s.push(' ');
            s.push_str(last);
        }
        s
    };
    format!("{resized}{punct}")
}

fn split(sentence: &str) -> Option<String> {
    let t = PlainText::new(sentence);
    let mid = t.len() as f64 / 2.0;
    let best = sentence
        .match_indices(", ")
        .map(|(b, _)| b)
        .min_by(|&a, &b| {
            let da = (t.grapheme_offset(a).unwrap_or(0) as f64 - mid).abs();
            let db = (t.grapheme_offset(b).unwrap_or(0) as f64 - mid).abs();
            da.total_cmp(&db).then(a.cmp(&b))
        })?;
    Some(format!("{}. {}", &sentence[..best], capitalize_first(&sentence[best + 2..])))
}

fn combine(sentence: &str) -> String {
    let mut parts = sentence.split(". ");
    let mut out = parts.next().unwrap_or_default().to_string();
    for p in parts {
        out.push_str(", ");
        out.push_str(&decapitalize_first(p));
    }
    out
}

/// Splits `xs` into items matched one-for-one by key in `ys` and the rest,
/// both in order.
fn match_words<'a>(xs: &[&'a str], ys: &[&str]) -> (Vec<&'a str>, Vec<&'a str>) {
    let mut pool: Vec<String> = ys.iter().map(|w| normalized(w)).collect();
    xs.iter().copied().partition(|w| {
        let key = normalized(w);
        match pool.iter().position(|p| *p == key) {
            Some(i) => {
                pool.swap_remove(i);
                true
            }
            None => false,
        }
    })
}

fn boolean(kind: RequestKind, fragment: &str, target: &str) -> String {
    let a: Vec<&str> = fragment.split_whitespace().collect();
    let b: Vec<&str> = target.split_whitespace().collect();
    let a_only = || match_words(&a, &b).1;
    let b_only = || match_words(&b, &a).1;
    let out: Vec<&str> = match kind {
        RequestKind::Unite => a.iter().copied().chain(b_only()).collect(),
        RequestKind::Intersect => match_words(&a, &b).0,
        RequestKind::Subtract => b_only(),
        _ => a_only().into_iter().chain(b_only()).collect(),
    };
    out.join(" ")
}
