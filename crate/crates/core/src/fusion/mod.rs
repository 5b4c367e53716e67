//! Likelihood-weighted fusion of per-clue retrieval results.
//!
//! Every clue yields an augmented query (`question + " " + clue`), each
//! augmented query is searched on its own, and the resulting lists are merged
//! into one score per passage:
//!
//! ```text
//! s_f(d) = Σ_i w_i · s_i(d)
//! ```
//!
//! where `s_i(d)` is the passage's score in list `i`, or the backfill value
//! when the passage is missing from that list.

pub mod grid;

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::clues::{ClueSet, ContextualClue};
use crate::index::InvertedIndex;
use crate::ranked::{rank_order, RankedList, ScoredPassage};

pub use grid::{grid_search_weights, simplex_grid, Qrels};

/// Tolerance for "weights sum to one".
pub const WEIGHT_SUM_TOLERANCE: f64 = 1e-9;

/// Score used for a passage that is missing from one of the fused lists.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Backfill {
    /// Lowest score of that list (0 when the list is empty).
    #[default]
    MinScore,
    Zero,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FusionConfig {
    /// Depth of every per-clue search.
    pub per_clue_k: usize,
    pub backfill: Backfill,
    /// Truncation of the fused list; `None` keeps the whole pool.
    pub output_size: Option<usize>,
    /// Interpolation weights across generators, keyed by source tag.
    pub interpolation_weights: BTreeMap<String, f64>,
}

impl Default for FusionConfig {
    fn default() -> Self {
        Self {
            per_clue_k: 1000,
            backfill: Backfill::MinScore,
            output_size: Some(100),
            interpolation_weights: BTreeMap::new(),
        }
    }
}

impl FusionConfig {
    pub fn validate(&self) -> Result<(), FusionError> {
        if self.per_clue_k == 0 {
            return Err(FusionError::ZeroDepth);
        }
        if !self.interpolation_weights.is_empty() {
            check_weights(self.interpolation_weights.values().copied())?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FusionError {
    #[error("question is empty")]
    EmptyQuestion,
    #[error("query {0:?} has no clues")]
    EmptyClueSet(String),
    #[error("nothing to fuse")]
    NothingToFuse,
    #[error("{lists} lists but {weights} weights")]
    LengthMismatch { lists: usize, weights: usize },
    #[error("weight {0} is negative or not finite")]
    BadWeight(f64),
    #[error("weights sum to {0}, expected 1")]
    WeightSum(f64),
    #[error("weight keys {weights:?} do not match run keys {runs:?}")]
    KeyMismatch { runs: Vec<String>, weights: Vec<String> },
    #[error("runs belong to different queries: {0:?} and {1:?}")]
    QueryMismatch(String, String),
    #[error("per-clue depth must be at least 1")]
    ZeroDepth,
    #[error("grid search supports 2 or 3 runs, got {0}")]
    RunCount(usize),
    #[error("grid step {0} outside (0, 0.5]")]
    BadGridStep(f64),
}

/// Fused ranking for one query plus, per passage, the weighted contribution
/// of every input list (in input order).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FusedRun {
    pub query_id: String,
    pub entries: RankedList,
    pub provenance: BTreeMap<String, Vec<f64>>,
}

impl FusedRun {
    pub fn empty(query_id: impl Into<String>) -> Self {
        let query_id = query_id.into();
        Self {
            entries: RankedList::empty(query_id.clone()),
            query_id,
            provenance: BTreeMap::new(),
        }
    }

    /// Wraps a plain ranked list (e.g. an external run) as a fused run whose
    /// only contribution is the list itself.
    pub fn from_list(list: RankedList) -> Self {
        let provenance = list
            .entries()
            .iter()
            .map(|e| (e.passage_id.clone(), vec![e.score]))
            .collect();
        Self {
            query_id: list.query_id.clone(),
            entries: list,
            provenance,
        }
    }

    /// Keeps the top `k` entries and drops provenance for the rest.
    pub fn truncate(&mut self, k: usize) {
        if self.entries.len() <= k {
            return;
        }
        for e in &self.entries.entries()[k..] {
            self.provenance.remove(&e.passage_id);
        }
        self.entries.truncate(k);
    }
}

/// `question + " " + clue`, both trimmed.
pub fn augment_query(question: &str, clue: &ContextualClue) -> Result<String, FusionError> {
    let question = question.trim();
    if question.is_empty() {
        return Err(FusionError::EmptyQuestion);
    }
    let clue = clue.text.trim();
    if clue.is_empty() {
        return Ok(question.to_string());
    }
    Ok(format!("{question} {clue}"))
}

/// One top-`k` search per clue, in clue order.
pub fn retrieve_per_clue(
    index: &InvertedIndex,
    question: &str,
    clue_set: &ClueSet,
    k: usize,
) -> Result<Vec<RankedList>, FusionError> {
    if clue_set.clues.is_empty() {
        return Err(FusionError::EmptyClueSet(clue_set.query_id.clone()));
    }
    clue_set
        .clues
        .iter()
        .map(|clue| {
            let text = augment_query(question, clue)?;
            Ok(index.search(&clue_set.query_id, &text, k))
        })
        .collect()
}

fn check_weights(weights: impl Iterator<Item = f64>) -> Result<(), FusionError> {
    let mut sum = 0.0;
    for w in weights {
        if !w.is_finite() || w < 0.0 {
            return Err(FusionError::BadWeight(w));
        }
        sum += w;
    }
    if (sum - 1.0).abs() > WEIGHT_SUM_TOLERANCE {
        return Err(FusionError::WeightSum(sum));
    }
    Ok(())
}

/// Sums contributions in ascending value order so the result does not
/// depend on the order of the input lists.
fn canonical_sum(values: &[f64]) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_unstable_by(f64::total_cmp);
    sorted.iter().sum()
}

/// Weighted sum over `lists` with a per-list fill value for missing passages.
fn combine(query_id: &str, lists: &[&RankedList], weights: &[f64], fills: &[f64]) -> FusedRun {
    let n = lists.len();
    let mut slot: HashMap<&str, usize> = HashMap::new();
    let mut ids: Vec<&str> = Vec::new();
    let mut contributions: Vec<f64> = Vec::new();
    for (i, list) in lists.iter().enumerate() {
        for e in list.entries() {
            let row = *slot.entry(e.passage_id.as_str()).or_insert_with(|| {
                ids.push(e.passage_id.as_str());
                contributions.extend((0..n).map(|j| weights[j] * fills[j]));
                ids.len() - 1
            });
            contributions[row * n + i] = weights[i] * e.score;
        }
    }

    let mut scored: Vec<(usize, f64)> = (0..ids.len())
        .map(|row| (row, canonical_sum(&contributions[row * n..(row + 1) * n])))
        .collect();
    scored.sort_unstable_by(|a, b| rank_order(a.1, ids[a.0], b.1, ids[b.0]));

    let mut provenance = BTreeMap::new();
    let mut entries = Vec::with_capacity(scored.len());
    for (row, score) in scored {
        provenance.insert(ids[row].to_string(), contributions[row * n..(row + 1) * n].to_vec());
        entries.push(ScoredPassage::new(ids[row], score));
    }
    FusedRun {
        query_id: query_id.to_string(),
        entries: RankedList::from_sorted_unchecked(query_id.to_string(), entries),
        provenance,
    }
}

/// Merges per-clue lists using `weights` (parallel to `lists`, summing to 1).
///
/// The candidate pool is the union of all lists. A passage absent from list
/// `i` takes that list's minimum score (or 0 under [`Backfill::Zero`]); an
/// empty list contributes 0 to everyone.
pub fn fuse(lists: &[RankedList], weights: &[f64], config: &FusionConfig) -> Result<FusedRun, FusionError> {
    if lists.is_empty() {
        return Err(FusionError::NothingToFuse);
    }
    if lists.len() != weights.len() {
        return Err(FusionError::LengthMismatch {
            lists: lists.len(),
            weights: weights.len(),
        });
    }
    check_weights(weights.iter().copied())?;
    let query_id = &lists[0].query_id;
    if let Some(other) = lists.iter().find(|l| &l.query_id != query_id) {
        return Err(FusionError::QueryMismatch(query_id.clone(), other.query_id.clone()));
    }

    let fills: Vec<f64> = lists
        .iter()
        .map(|l| match config.backfill {
            Backfill::MinScore => l.min_score().unwrap_or(0.0),
            Backfill::Zero => 0.0,
        })
        .collect();
    let refs: Vec<&RankedList> = lists.iter().collect();
    let mut run = combine(query_id, &refs, weights, &fills);
    if let Some(k) = config.output_size {
        run.truncate(k);
    }
    Ok(run)
}

/// Linear interpolation of fused runs from several generators. A passage
/// missing from a run takes that run's minimum fused score.
pub fn interpolate_runs(
    runs: &BTreeMap<String, FusedRun>,
    weights: &BTreeMap<String, f64>,
) -> Result<FusedRun, FusionError> {
    if runs.is_empty() {
        return Err(FusionError::NothingToFuse);
    }
    if !runs.keys().eq(weights.keys()) {
        return Err(FusionError::KeyMismatch {
            runs: runs.keys().cloned().collect(),
            weights: weights.keys().cloned().collect(),
        });
    }
    check_weights(weights.values().copied())?;
    let mut iter = runs.values();
    let query_id = &iter.next().expect("non-empty").query_id;
    if let Some(other) = iter.find(|r| &r.query_id != query_id) {
        return Err(FusionError::QueryMismatch(query_id.clone(), other.query_id.clone()));
    }

    let lists: Vec<&RankedList> = runs.values().map(|r| &r.entries).collect();
    let w: Vec<f64> = weights.values().copied().collect();
    let fills: Vec<f64> = lists.iter().map(|l| l.min_score().unwrap_or(0.0)).collect();
    Ok(combine(query_id, &lists, &w, &fills))
}

/// True when both runs list the same passages in the same order with
/// bit-identical scores.
pub fn same_ranking(a: &FusedRun, b: &FusedRun) -> bool {
    a.entries.len() == b.entries.len()
        && a
            .entries
            .entries()
            .iter()
            .zip(b.entries.entries())
            .all(|(x, y)| x.passage_id == y.passage_id && x.score.total_cmp(&y.score) == Ordering::Equal)
}
