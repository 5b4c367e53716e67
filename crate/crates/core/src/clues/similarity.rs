//! Character-level string similarity used to group near-duplicate clues.

use serde::{Deserialize, Serialize};

/// Which similarity drives clustering.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SimilarityMetric {
    /// Ratcliff/Obershelp gestalt ratio.
    #[default]
    Gestalt,
    /// `1 - levenshtein(a, b) / max(|a|, |b|)`.
    Levenshtein,
}

impl SimilarityMetric {
    pub fn ratio(self, a: &str, b: &str) -> f64 {
        match self {
            SimilarityMetric::Gestalt => similarity_ratio(a, b),
            SimilarityMetric::Levenshtein => levenshtein_ratio(a, b),
        }
    }
}

/// Longest common substring of `a[alo..ahi]` and `b[blo..bhi]`.
///
/// Among equally long matches the one starting earliest in `a` wins, then
/// earliest in `b`. Returns `(i, j, len)`.
fn longest_match(
    a: &[char],
    b: &[char],
    (alo, ahi): (usize, usize),
    (blo, bhi): (usize, usize),
    prev: &mut Vec<usize>,
    cur: &mut Vec<usize>,
) -> (usize, usize, usize) {
    let width = bhi - blo + 1;
    prev.clear();
    prev.resize(width, 0);
    cur.clear();
    cur.resize(width, 0);

    let (mut best_i, mut best_j, mut best) = (alo, blo, 0);
    for (i, ca) in a.iter().enumerate().take(ahi).skip(alo) {
        for j in blo..bhi {
            let k = if *ca == b[j] { prev[j - blo] + 1 } else { 0 };
            cur[j - blo + 1] = k;
            if k > best {
                best = k;
                best_i = i + 1 - k;
                best_j = j + 1 - k;
            }
        }
        std::mem::swap(prev, cur);
    }
    (best_i, best_j, best)
}

/// Total length of the matching blocks found by recursive
/// longest-common-substring decomposition.
pub fn matching_characters(a: &[char], b: &[char]) -> usize {
    let mut total = 0;
    let mut stack = vec![(0, a.len(), 0, b.len())];
    let (mut prev, mut cur) = (Vec::new(), Vec::new());
    while let Some((alo, ahi, blo, bhi)) = stack.pop() {
        if alo >= ahi || blo >= bhi {
            continue;
        }
        let (i, j, k) = longest_match(a, b, (alo, ahi), (blo, bhi), &mut prev, &mut cur);
        if k == 0 {
            continue;
        }
        total += k;
        stack.push((alo, i, blo, j));
        stack.push((i + k, ahi, j + k, bhi));
    }
    total
}

/// Ratcliff/Obershelp ratio `2M / (|a| + |b|)` over Unicode scalar values.
///
/// Matches Python's `difflib.SequenceMatcher(None, a, b, autojunk=False).ratio()`.
/// The result can depend on argument order: `("tide", "diet")` gives 0.25
/// while `("diet", "tide")` gives 0.5. Two empty strings compare as 1.0.
pub fn similarity_ratio(a: &str, b: &str) -> f64 {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    let total = a.len() + b.len();
    if total == 0 {
        return 1.0;
    }
    2.0 * matching_characters(&a, &b) as f64 / total as f64
}

pub fn levenshtein(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    let mut row: Vec<usize> = (0..=b.len()).collect();
    for (i, ca) in a.iter().enumerate() {
        let mut diag = row[0];
        row[0] = i + 1;
        for (j, cb) in b.iter().enumerate() {
            let above = row[j + 1];
            row[j + 1] = if ca == cb {
                diag
            } else {
                1 + diag.min(above).min(row[j])
            };
            diag = above;
        }
    }
    row[b.len()]
}

pub fn levenshtein_ratio(a: &str, b: &str) -> f64 {
    let longest = a.chars().count().max(b.chars().count());
    if longest == 0 {
        return 1.0;
    }
    1.0 - levenshtein(a, b) as f64 / longest as f64
}
