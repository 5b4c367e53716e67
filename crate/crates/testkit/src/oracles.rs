//! Straightforward, slow reference computations.

use std::cmp::Ordering;
use std::collections::BTreeSet;

/// BM25 with `ln(1 + (N - df + 0.5) / (df + 0.5))` idf, evaluated term by
/// term for every query token occurrence. Returns one score per document.
pub fn bm25_scores(docs: &[Vec<String>], query: &[String], k1: f64, b: f64) -> Vec<f64> {
    let n = docs.len() as f64;
    let avgdl = docs.iter().map(|d| d.len() as f64).sum::<f64>() / n;
    docs.iter()
        .map(|doc| {
            let dl = doc.len() as f64;
            let mut score = 0.0;
            for term in query {
                let df = docs.iter().filter(|d| d.contains(term)).count() as f64;
                if df == 0.0 {
                    continue;
                }
                let tf = doc.iter().filter(|t| *t == term).count() as f64;
                if tf == 0.0 {
                    continue;
                }
                let idf = (1.0 + (n - df + 0.5) / (df + 0.5)).ln();
                score += idf * tf * (k1 + 1.0) / (tf + k1 * (1.0 - b + b * dl / avgdl));
            }
            score
        })
        .collect()
}

/// Positive-scoring documents sorted by score descending, id ascending.
pub fn rank(ids: &[String], scores: &[f64]) -> Vec<(String, f64)> {
    let mut out: Vec<(String, f64)> = ids
        .iter()
        .cloned()
        .zip(scores.iter().copied())
        .filter(|(_, s)| *s > 0.0)
        .collect();
    out.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap_or(Ordering::Equal).then_with(|| a.0.cmp(&b.0)));
    out
}

/// Ratcliff/Obershelp matching characters by exhaustive search: the longest
/// common block is found by trying every pair of start positions, keeping the
/// first one in (i, j) order, then both flanks are handled recursively.
pub fn gestalt_matches(a: &[char], b: &[char]) -> usize {
    let mut best = (0, 0, 0);
    for i in 0..a.len() {
        for j in 0..b.len() {
            let mut k = 0;
            while i + k < a.len() && j + k < b.len() && a[i + k] == b[j + k] {
                k += 1;
            }
            if k > best.2 {
                best = (i, j, k);
            }
        }
    }
    let (i, j, k) = best;
    if k == 0 {
        return 0;
    }
    k + gestalt_matches(&a[..i], &b[..j]) + gestalt_matches(&a[i + k..], &b[j + k..])
}

pub fn gestalt_ratio(a: &str, b: &str) -> f64 {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    if a.is_empty() && b.is_empty() {
        return 1.0;
    }
    2.0 * gestalt_matches(&a, &b) as f64 / (a.len() + b.len()) as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fill {
    Min,
    Zero,
}

/// Weighted fusion evaluated passage by passage over the union pool.
/// Lists are `(passage, score)` pairs in any order.
pub fn fuse(lists: &[Vec<(String, f64)>], weights: &[f64], fill: Fill) -> Vec<(String, f64)> {
    let pool: BTreeSet<&String> = lists.iter().flatten().map(|(p, _)| p).collect();
    let mut out: Vec<(String, f64)> = pool
        .into_iter()
        .map(|p| {
            let mut total = 0.0;
            for (list, w) in lists.iter().zip(weights) {
                let score = match list.iter().find(|(q, _)| q == p) {
                    Some((_, s)) => *s,
                    None => match fill {
                        Fill::Zero => 0.0,
                        Fill::Min => list.iter().map(|(_, s)| *s).fold(f64::INFINITY, f64::min),
                    },
                };
                let score = if score.is_finite() { score } else { 0.0 };
                total += w * score;
            }
            (p.clone(), total)
        })
        .collect();
    out.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap_or(Ordering::Equal).then_with(|| a.0.cmp(&b.0)));
    out
}

/// Clipped n-gram overlap by removing matched n-grams from the reference.
pub fn ngram_overlap(cand: &[String], reference: &[String], n: usize) -> (usize, usize, usize) {
    let grams = |t: &[String]| -> Vec<Vec<String>> {
        if t.len() < n {
            Vec::new()
        } else {
            (0..=t.len() - n).map(|i| t[i..i + n].to_vec()).collect()
        }
    };
    let c = grams(cand);
    let mut r = grams(reference);
    let (c_total, r_total) = (c.len(), r.len());
    let mut overlap = 0;
    for g in &c {
        if let Some(pos) = r.iter().position(|x| x == g) {
            r.remove(pos);
            overlap += 1;
        }
    }
    (overlap, c_total, r_total)
}

/// Full quadratic LCS table.
pub fn lcs(a: &[String], b: &[String]) -> usize {
    let mut t = vec![vec![0usize; b.len() + 1]; a.len() + 1];
    for i in 1..=a.len() {
        for j in 1..=b.len() {
            t[i][j] = if a[i - 1] == b[j - 1] {
                t[i - 1][j - 1] + 1
            } else {
                t[i - 1][j].max(t[i][j - 1])
            };
        }
    }
    t[a.len()][b.len()]
}

pub fn f1(overlap: usize, c_total: usize, r_total: usize) -> f64 {
    if overlap == 0 {
        return 0.0;
    }
    let p = overlap as f64 / c_total as f64;
    let r = overlap as f64 / r_total as f64;
    2.0 * p * r / (p + r)
}

/// (ROUGE-1 F, ROUGE-2 F, ROUGE-L F) for one token-sequence pair.
pub fn rouge(cand: &[String], reference: &[String]) -> (f64, f64, f64) {
    let (o1, c1, r1) = ngram_overlap(cand, reference, 1);
    let (o2, c2, r2) = ngram_overlap(cand, reference, 2);
    (
        f1(o1, c1, r1),
        f1(o2, c2, r2),
        f1(lcs(cand, reference), cand.len(), reference.len()),
    )
}
