use serde::{Deserialize, Serialize};

use crate::text::word_count;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Candidate {
    pub text: String,
    pub word_count: usize,
}

impl Candidate {
    pub fn new(text: impl Into<String>) -> Self {
        let text = text.into();
        let word_count = word_count(&text);
        Candidate { text, word_count }
    }
}

/// Per-sentence rewrite candidates; candidate 0 is the original sentence.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct VariantTable {
    pub sentences: Vec<Vec<Candidate>>,
}

impl VariantTable {
    /// A table holding only word counts, for optimizer-only use.
    pub fn from_counts(counts: &[Vec<usize>]) -> Self {
        let sentences = counts
            .iter()
            .map(|row| row.iter().map(|&n| Candidate { text: String::new(), word_count: n }).collect())
            .collect();
        VariantTable { sentences }
    }

    pub fn total(&self, choice: &[usize]) -> usize {
        self.sentences.iter().zip(choice).map(|(row, &j)| row[j].word_count).sum()
    }
}

const UNREACHABLE: u32 = u32::MAX;

/// Picks one candidate per sentence so the total word count is closest to
/// `target`.
///
/// Ties go to the choice changing the fewest sentences (index ≠ 0), then to
/// the lexicographically smallest index vector. Sentences without
/// candidates are not allowed.
pub fn select_variants(table: &VariantTable, target: usize) -> Vec<usize> {
    let rows = &table.sentences;
    let n = rows.len();
    if n == 0 {
        return Vec::new();
    }
    assert!(rows.iter().all(|r| !r.is_empty()), "every sentence needs candidate 0");
    let max_total: usize = rows.iter().map(|r| r.iter().map(|c| c.word_count).max().unwrap_or(0)).sum();
    let width = max_total + 1;

    // fewest[i][t]: fewest changed sentences among i.. that sum to exactly t.
    let mut fewest = vec![UNREACHABLE; (n + 1) * width];
    fewest[n * width] = 0;
    for i in (0..n).rev() {
        let (head, tail) = fewest.split_at_mut((i + 1) * width);
        let here = &mut head[i * width..];
        let next = &tail[..width];
        for (j, c) in rows[i].iter().enumerate() {
            let cost = (j != 0) as u32;
            for t in c.word_count..width {
                let rest = next[t - c.word_count];
                if rest != UNREACHABLE && rest + cost < here[t] {
                    here[t] = rest + cost;
                }
            }
        }
    }

    let reachable = |t: usize| t < width && fewest[t] != UNREACHABLE;
    let mut best: Option<(usize, u32, Vec<usize>)> = None;
    for d in 0..=target.max(max_total) {
        let mut totals = Vec::with_capacity(2);
        if d <= target && reachable(target - d) {
            totals.push(target - d);
        }
        if d > 0 && reachable(target + d) {
            totals.push(target + d);
        }
        for t in totals {
            let changes = fewest[t];
            let choice = reconstruct(rows, &fewest, width, t);
            let better = match &best {
                None => true,
                Some((_, c, v)) => changes < *c || (changes == *c && choice < *v),
            };
            if better {
                best = Some((d, changes, choice));
            }
        }
        if best.is_some() {
            break;
        }
    }
    best.expect("at least the all-original total is reachable").2
}

/// Lexicographically smallest index vector summing to `total` with the
/// fewest changes.
fn reconstruct(rows: &[Vec<Candidate>], fewest: &[u32], width: usize, total: usize) -> Vec<usize> {
    let mut out = Vec::with_capacity(rows.len());
    let mut rem = total;
    for (i, row) in rows.iter().enumerate() {
        let need = fewest[i * width + rem];
        let j = row
            .iter()
            .enumerate()
            .position(|(j, c)| {
                c.word_count <= rem && {
                    let rest = fewest[(i + 1) * width + rem - c.word_count];
                    rest != UNREACHABLE && rest + (j != 0) as u32 == need
                }
            })
            .expect("an optimal continuation exists");
        out.push(j);
        rem -= row[j].word_count;
    }
    out
}
