//! Ranked result lists with a deterministic total order.

use std::cmp::Ordering;
use std::collections::HashSet;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredPassage {
    pub passage_id: String,
    pub score: f64,
}

impl ScoredPassage {
    pub fn new(passage_id: impl Into<String>, score: f64) -> Self {
        Self {
            passage_id: passage_id.into(),
            score,
        }
    }
}

/// Score descending, then passage id ascending.
pub fn rank_order(a_score: f64, a_id: &str, b_score: f64, b_id: &str) -> Ordering {
    b_score.total_cmp(&a_score).then_with(|| a_id.cmp(b_id))
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RankedListError {
    #[error("duplicate passage id {passage_id:?} in ranked list for query {query_id:?}")]
    DuplicatePassage { query_id: String, passage_id: String },
    #[error("non-finite score for passage {passage_id:?} in ranked list for query {query_id:?}")]
    NonFiniteScore { query_id: String, passage_id: String },
}

/// Ordered `(passage_id, score)` pairs for one query.
///
/// Entries are always sorted by [`rank_order`] and hold no duplicate ids.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankedList {
    pub query_id: String,
    entries: Vec<ScoredPassage>,
}

impl RankedList {
    pub fn empty(query_id: impl Into<String>) -> Self {
        Self {
            query_id: query_id.into(),
            entries: Vec::new(),
        }
    }

    /// Sorts `entries` into rank order, rejecting duplicates and non-finite scores.
    pub fn from_unsorted(
        query_id: impl Into<String>,
        mut entries: Vec<ScoredPassage>,
    ) -> Result<Self, RankedListError> {
        let query_id = query_id.into();
        let mut seen = HashSet::with_capacity(entries.len());
        for e in &entries {
            if !e.score.is_finite() {
                return Err(RankedListError::NonFiniteScore {
                    query_id,
                    passage_id: e.passage_id.clone(),
                });
            }
            if !seen.insert(e.passage_id.as_str()) {
                return Err(RankedListError::DuplicatePassage {
                    query_id,
                    passage_id: e.passage_id.clone(),
                });
            }
        }
        entries.sort_by(|a, b| rank_order(a.score, &a.passage_id, b.score, &b.passage_id));
        Ok(Self { query_id, entries })
    }

    /// Caller guarantees rank order and uniqueness.
    pub(crate) fn from_sorted_unchecked(query_id: String, entries: Vec<ScoredPassage>) -> Self {
        debug_assert!(entries
            .windows(2)
            .all(|w| rank_order(w[0].score, &w[0].passage_id, w[1].score, &w[1].passage_id)
                == Ordering::Less));
        Self { query_id, entries }
    }

    pub fn entries(&self) -> &[ScoredPassage] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn truncate(&mut self, k: usize) {
        self.entries.truncate(k);
    }

    /// Lowest score in the list, `None` when empty.
    pub fn min_score(&self) -> Option<f64> {
        self.entries.last().map(|e| e.score)
    }

    pub fn into_entries(self) -> Vec<ScoredPassage> {
        self.entries
    }
}
