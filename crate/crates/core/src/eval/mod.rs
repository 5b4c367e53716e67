//! Retrieval and clue-quality metrics.

pub mod report;
pub mod rouge;

use std::collections::{BTreeMap, HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::clues::ClueMap;
use crate::corpus::Passage;
use crate::index::tokenizer::{tokenize, TokenizerConfig};
use crate::query::QueryRecord;
use crate::ranked::RankedList;

pub use report::{compare_runs, DeltaRow, DeltaTable, EvalReport, QueryBreakdown};
pub use rouge::{rouge_f, rouge_f_with, RougeAggregation, RougeScores};

/// Cutoffs reported by default.
pub const DEFAULT_KS: [usize; 3] = [5, 20, 100];

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EvalError {
    #[error("query {qid:?} references unknown passage {passage_id:?}")]
    UnknownPassage { qid: String, passage_id: String },
    #[error("run contains query {0:?} that is not in the query file")]
    UnknownQuery(String),
    #[error("no clues for query {0:?}")]
    MissingQid(String),
    #[error("{0} must be non-empty")]
    EmptyInput(&'static str),
    #[error("k sets differ: {a:?} vs {b:?}")]
    KsMismatch { a: Vec<usize>, b: Vec<usize> },
}

/// Text lookup for passages referenced by a run.
pub trait PassageLookup {
    fn passage_text(&self, passage_id: &str) -> Option<&str>;
}

impl PassageLookup for HashMap<String, Passage> {
    fn passage_text(&self, passage_id: &str) -> Option<&str> {
        self.get(passage_id).map(|p| p.text.as_str())
    }
}

impl PassageLookup for HashMap<String, String> {
    fn passage_text(&self, passage_id: &str) -> Option<&str> {
        self.get(passage_id).map(String::as_str)
    }
}

fn normalize(text: &str) -> Vec<String> {
    tokenize(text, &TokenizerConfig::default())
}

fn contains_tokens(haystack: &[String], answers: &[Vec<String>]) -> bool {
    answers
        .iter()
        .filter(|a| !a.is_empty())
        .any(|a| haystack.len() >= a.len() && haystack.windows(a.len()).any(|w| w == a.as_slice()))
}

/// True iff some answer's normalized token sequence occurs contiguously in
/// the normalized passage. Answers that normalize to nothing never match.
pub fn contains_answer(passage_text: &str, answers: &[String]) -> bool {
    let answers: Vec<Vec<String>> = answers.iter().map(|a| normalize(a)).collect();
    contains_tokens(&normalize(passage_text), &answers)
}

/// 1-based rank of the first answer-bearing passage of each query, `None`
/// when no listed passage contains an answer or the query is absent.
pub fn first_hit_ranks<L: PassageLookup>(
    run: &BTreeMap<&str, &RankedList>,
    queries: &[QueryRecord],
    lookup: &L,
) -> Result<Vec<(String, Option<usize>)>, EvalError> {
    let known: HashSet<&str> = queries.iter().map(|q| q.qid.as_str()).collect();
    if let Some(qid) = run.keys().find(|q| !known.contains(*q)) {
        return Err(EvalError::UnknownQuery(qid.to_string()));
    }
    let mut out = Vec::with_capacity(queries.len());
    for q in queries {
        let answers: Vec<Vec<String>> = q.answers.iter().map(|a| normalize(a)).collect();
        let mut hit = None;
        if let Some(list) = run.get(q.qid.as_str()) {
            for (rank, e) in list.entries().iter().enumerate() {
                let text = lookup
                    .passage_text(&e.passage_id)
                    .ok_or_else(|| EvalError::UnknownPassage {
                        qid: q.qid.clone(),
                        passage_id: e.passage_id.clone(),
                    })?;
                if hit.is_none() && contains_tokens(&normalize(text), &answers) {
                    hit = Some(rank + 1);
                }
            }
        }
        out.push((q.qid.clone(), hit));
    }
    Ok(out)
}

/// Accuracy at each k from first-hit ranks.
pub fn accuracy_from_ranks(ranks: &[(String, Option<usize>)], ks: &[usize]) -> BTreeMap<usize, f64> {
    ks.iter()
        .map(|&k| {
            let hits = ranks.iter().filter(|(_, r)| r.is_some_and(|r| r <= k)).count();
            let acc = if ranks.is_empty() { 0.0 } else { hits as f64 / ranks.len() as f64 };
            (k, acc)
        })
        .collect()
}

/// Fraction of queries with an answer-bearing passage among the top k, for
/// each k. Queries missing from the run count as misses; every passage in
/// the run must resolve through `lookup`.
pub fn topk_accuracy<'a, L, I>(
    run: I,
    queries: &[QueryRecord],
    lookup: &L,
    ks: &[usize],
) -> Result<BTreeMap<usize, f64>, EvalError>
where
    L: PassageLookup,
    I: IntoIterator<Item = &'a RankedList>,
{
    let run: BTreeMap<&str, &RankedList> = run.into_iter().map(|l| (l.query_id.as_str(), l)).collect();
    let ranks = first_hit_ranks(&run, queries, lookup)?;
    Ok(accuracy_from_ranks(&ranks, ks))
}

/// Denominator for answer coverage.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoverageMode {
    /// Share of questions with at least one answer-bearing clue.
    #[default]
    PerQuestion,
    /// Share of all clues (pooled over questions) that bear an answer.
    PerClue,
}

pub fn answer_coverage(clue_sets: &ClueMap, queries: &[QueryRecord]) -> Result<f64, EvalError> {
    answer_coverage_with(clue_sets, queries, CoverageMode::PerQuestion)
}

pub fn answer_coverage_with(
    clue_sets: &ClueMap,
    queries: &[QueryRecord],
    mode: CoverageMode,
) -> Result<f64, EvalError> {
    let known: HashSet<&str> = queries.iter().map(|q| q.qid.as_str()).collect();
    if let Some(qid) = clue_sets.keys().find(|q| !known.contains(q.as_str())) {
        return Err(EvalError::UnknownQuery(qid.clone()));
    }
    let (mut covered, mut total) = (0usize, 0usize);
    for q in queries {
        let set = clue_sets.get(&q.qid).ok_or_else(|| EvalError::MissingQid(q.qid.clone()))?;
        let answers: Vec<Vec<String>> = q.answers.iter().map(|a| normalize(a)).collect();
        let mut hits = set.clues.iter().filter(|c| contains_tokens(&normalize(&c.text), &answers));
        match mode {
            CoverageMode::PerQuestion => {
                total += 1;
                covered += usize::from(hits.next().is_some());
            }
            CoverageMode::PerClue => {
                total += set.clues.len();
                covered += hits.count();
            }
        }
    }
    Ok(if total == 0 { 0.0 } else { covered as f64 / total as f64 })
}
