//! ROUGE-1/2/L F-measures over lowercased alphanumeric tokens.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::index::tokenizer::{tokenize, TokenizerConfig};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RougeScores {
    pub r1_f: f64,
    pub r2_f: f64,
    pub rl_f: f64,
}

/// How scores against one reference are combined over many candidates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RougeAggregation {
    /// Best candidate per reference (each metric independently).
    #[default]
    Max,
    Mean,
}

fn f_measure(overlap: usize, cand_total: usize, ref_total: usize) -> f64 {
    if overlap == 0 || cand_total == 0 || ref_total == 0 {
        return 0.0;
    }
    let p = overlap as f64 / cand_total as f64;
    let r = overlap as f64 / ref_total as f64;
    2.0 * p * r / (p + r)
}

fn ngram_counts(tokens: &[String], n: usize) -> HashMap<&[String], usize> {
    let mut counts = HashMap::new();
    if tokens.len() >= n {
        for gram in tokens.windows(n) {
            *counts.entry(gram).or_insert(0) += 1;
        }
    }
    counts
}

/// ROUGE-N F1 with clipped n-gram counts.
pub fn rouge_n(candidate: &[String], reference: &[String], n: usize) -> f64 {
    let cand = ngram_counts(candidate, n);
    let refs = ngram_counts(reference, n);
    let overlap: usize = cand
        .iter()
        .map(|(gram, &c)| refs.get(gram).map_or(0, |&r| c.min(r)))
        .sum();
    let total = |len: usize| len.saturating_sub(n - 1);
    f_measure(overlap, total(candidate.len()), total(reference.len()))
}

/// Length of the longest common subsequence, computed bit-parallel over
/// the positions of `a`.
pub fn lcs_length(a: &[String], b: &[String]) -> usize {
    if a.is_empty() || b.is_empty() {
        return 0;
    }
    let words = a.len().div_ceil(64);
    let mut masks: HashMap<&str, Vec<u64>> = HashMap::new();
    for (i, tok) in a.iter().enumerate() {
        masks.entry(tok.as_str()).or_insert_with(|| vec![0; words])[i / 64] |= 1 << (i % 64);
    }

    let mut v = vec![u64::MAX; words];
    for tok in b {
        let Some(m) = masks.get(tok.as_str()) else {
            continue;
        };
        // v = (v + (v & m)) | (v & !m), with carries across words.
        let mut carry = 0u64;
        for w in 0..words {
            let u = v[w] & m[w];
            let (s1, c1) = v[w].overflowing_add(u);
            let (s2, c2) = s1.overflowing_add(carry);
            carry = u64::from(c1 || c2);
            v[w] = s2 | (v[w] & !m[w]);
        }
    }

    let mut zeros = 0;
    for (w, &word) in v.iter().enumerate() {
        let bits = if w + 1 == words && !a.len().is_multiple_of(64) { a.len() % 64 } else { 64 };
        let mask = if bits == 64 { u64::MAX } else { (1u64 << bits) - 1 };
        zeros += (!word & mask).count_ones() as usize;
    }
    zeros
}

pub fn rouge_l(candidate: &[String], reference: &[String]) -> f64 {
    f_measure(lcs_length(candidate, reference), candidate.len(), reference.len())
}

/// All three F-measures for one tokenized pair.
pub fn rouge_pair(candidate: &[String], reference: &[String]) -> RougeScores {
    RougeScores {
        r1_f: rouge_n(candidate, reference, 1),
        r2_f: rouge_n(candidate, reference, 2),
        rl_f: rouge_l(candidate, reference),
    }
}

/// Scores every candidate against every reference, aggregates over
/// candidates per reference, then averages over references.
pub fn rouge_f(candidates: &[String], references: &[String]) -> Result<RougeScores, EvalError> {
    rouge_f_with(candidates, references, RougeAggregation::Max)
}

pub fn rouge_f_with(
    candidates: &[String],
    references: &[String],
    aggregation: RougeAggregation,
) -> Result<RougeScores, EvalError> {
    if candidates.is_empty() {
        return Err(EvalError::EmptyInput("candidates"));
    }
    if references.is_empty() {
        return Err(EvalError::EmptyInput("references"));
    }
    let config = TokenizerConfig::default();
    let cands: Vec<Vec<String>> = candidates.iter().map(|c| tokenize(c, &config)).collect();

    let mut total = RougeScores::default();
    for reference in references {
        let r = tokenize(reference, &config);
        let pairs = cands.iter().map(|c| rouge_pair(c, &r));
        let agg = match aggregation {
            RougeAggregation::Max => pairs.fold(RougeScores::default(), |acc, s| RougeScores {
                r1_f: acc.r1_f.max(s.r1_f),
                r2_f: acc.r2_f.max(s.r2_f),
                rl_f: acc.rl_f.max(s.rl_f),
            }),
            RougeAggregation::Mean => {
                let n = cands.len() as f64;
                let sum = pairs.fold(RougeScores::default(), |acc, s| RougeScores {
                    r1_f: acc.r1_f + s.r1_f,
                    r2_f: acc.r2_f + s.r2_f,
                    rl_f: acc.rl_f + s.rl_f,
                });
                RougeScores {
                    r1_f: sum.r1_f / n,
                    r2_f: sum.r2_f / n,
                    rl_f: sum.rl_f / n,
                }
            }
        };
        total.r1_f += agg.r1_f;
        total.r2_f += agg.r2_f;
        total.rl_f += agg.rl_f;
    }
    let n = references.len() as f64;
    Ok(RougeScores {
        r1_f: total.r1_f / n,
        r2_f: total.r2_f / n,
        rl_f: total.rl_f / n,
    })
}
