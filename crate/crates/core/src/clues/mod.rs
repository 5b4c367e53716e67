//! Generated contextual clues: clustering near-duplicates, keeping the most
//! likely member of each cluster, and turning log-probabilities into fusion
//! weights.

pub mod ingest;
pub mod similarity;

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

pub use ingest::{
    ingest_from_endpoint, ingest_from_path, read_clue_file, parse_endpoint_response, ClueMap,
    EndpointConfig, IngestError,
};
pub use similarity::{levenshtein_ratio, similarity_ratio, SimilarityMetric};

pub const DEFAULT_SOURCE_TAG: &str = "context";
pub const DEFAULT_CUTOFF: f64 = 0.8;

fn default_source_tag() -> String {
    DEFAULT_SOURCE_TAG.to_string()
}

/// One generated text with its natural-log sequence probability.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContextualClue {
    pub text: String,
    pub logprob: f64,
    #[serde(default = "default_source_tag")]
    pub source_tag: String,
}

impl ContextualClue {
    pub fn new(text: impl Into<String>, logprob: f64) -> Self {
        Self {
            text: text.into(),
            logprob,
            source_tag: default_source_tag(),
        }
    }

    pub fn with_tag(mut self, tag: impl Into<String>) -> Self {
        self.source_tag = tag.into();
        self
    }
}

/// Most likely first; equal probabilities fall back to text order.
fn likelihood_order(a: &ContextualClue, b: &ContextualClue) -> Ordering {
    b.logprob.total_cmp(&a.logprob).then_with(|| a.text.cmp(&b.text))
}

/// Lexically similar clues. `representative` indexes the member with the
/// highest logprob (ties: smallest text).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClueCluster {
    pub members: Vec<ContextualClue>,
    pub representative: usize,
}

impl ClueCluster {
    pub fn representative(&self) -> &ContextualClue {
        &self.members[self.representative]
    }
}

/// Clues generated for one query, with optional fusion weights parallel to
/// `clues`.
#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct ClueSet {
    pub query_id: String,
    pub clues: Vec<ContextualClue>,
    pub weights: Option<Vec<f64>>,
}

impl ClueSet {
    pub fn new(query_id: impl Into<String>, clues: Vec<ContextualClue>) -> Self {
        Self {
            query_id: query_id.into(),
            clues,
            weights: None,
        }
    }

    /// Distinct source tags in first-appearance order.
    pub fn source_tags(&self) -> Vec<&str> {
        let mut tags: Vec<&str> = Vec::new();
        for c in &self.clues {
            if !tags.contains(&c.source_tag.as_str()) {
                tags.push(&c.source_tag);
            }
        }
        tags
    }

    /// The clues carrying `tag`, in original order.
    pub fn with_tag(&self, tag: &str) -> ClueSet {
        ClueSet::new(
            self.query_id.clone(),
            self.clues.iter().filter(|c| c.source_tag == tag).cloned().collect(),
        )
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ClueError {
    #[error("cannot normalize weights of an empty clue list")]
    Empty,
    #[error("non-finite logprob {0} for clue {1:?}")]
    NonFinite(f64, String),
    #[error("cutoff {0} outside [0, 1]")]
    BadCutoff(f64),
}

/// Options for clustering and weighting.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClusterConfig {
    pub cutoff: f64,
    pub metric: SimilarityMetric,
}

impl Default for ClusterConfig {
    fn default() -> Self {
        Self {
            cutoff: DEFAULT_CUTOFF,
            metric: SimilarityMetric::Gestalt,
        }
    }
}

/// Greedy leader clustering with the gestalt ratio.
pub fn cluster_clues(clues: &[ContextualClue], cutoff: f64) -> Result<Vec<ClueCluster>, ClueError> {
    cluster_clues_with(
        clues,
        &ClusterConfig {
            cutoff,
            metric: SimilarityMetric::Gestalt,
        },
    )
}

/// Greedy leader clustering.
///
/// Clues are visited most likely first (ties by text). Each joins the first
/// existing cluster whose representative scores at least `cutoff` against
/// it, computed as `metric.ratio(representative, clue)` on raw text, or
/// founds a new cluster. Because of the visiting order the founder is always
/// the representative. Clusters come back in founding order.
pub fn cluster_clues_with(
    clues: &[ContextualClue],
    config: &ClusterConfig,
) -> Result<Vec<ClueCluster>, ClueError> {
    if !(0.0..=1.0).contains(&config.cutoff) {
        return Err(ClueError::BadCutoff(config.cutoff));
    }
    if let Some(bad) = clues.iter().find(|c| !c.logprob.is_finite()) {
        return Err(ClueError::NonFinite(bad.logprob, bad.text.clone()));
    }
    let mut ordered: Vec<&ContextualClue> = clues.iter().collect();
    ordered.sort_by(|a, b| likelihood_order(a, b));

    let mut clusters: Vec<ClueCluster> = Vec::new();
    for clue in ordered {
        let home = clusters
            .iter_mut()
            .find(|c| config.metric.ratio(&c.representative().text, &clue.text) >= config.cutoff);
        match home {
            Some(cluster) => cluster.members.push(clue.clone()),
            None => clusters.push(ClueCluster {
                members: vec![clue.clone()],
                representative: 0,
            }),
        }
    }
    Ok(clusters)
}

/// Keeps one clue per cluster, the representative, in cluster order.
pub fn filter_clues(clusters: &[ClueCluster]) -> Vec<ContextualClue> {
    clusters.iter().map(|c| c.representative().clone()).collect()
}

/// Softmax over logprobs, shifted by the maximum for stability.
pub fn normalize_weights(clues: &[ContextualClue]) -> Result<Vec<f64>, ClueError> {
    let logprobs: Vec<f64> = clues.iter().map(|c| c.logprob).collect();
    softmax(&logprobs).map_err(|e| match e {
        ClueError::NonFinite(v, _) => {
            let text = clues.iter().find(|c| c.logprob.to_bits() == v.to_bits()).map(|c| c.text.clone());
            ClueError::NonFinite(v, text.unwrap_or_default())
        }
        other => other,
    })
}

/// Like [`normalize_weights`], dividing each logprob by the clue's
/// whitespace-separated word count first.
pub fn normalize_weights_length_normalized(clues: &[ContextualClue]) -> Result<Vec<f64>, ClueError> {
    let adjusted: Vec<ContextualClue> = clues
        .iter()
        .map(|c| {
            let words = c.text.split_whitespace().count().max(1);
            ContextualClue {
                logprob: c.logprob / words as f64,
                ..c.clone()
            }
        })
        .collect();
    normalize_weights(&adjusted)
}

fn softmax(values: &[f64]) -> Result<Vec<f64>, ClueError> {
    if values.is_empty() {
        return Err(ClueError::Empty);
    }
    if let Some(&bad) = values.iter().find(|v| !v.is_finite()) {
        return Err(ClueError::NonFinite(bad, String::new()));
    }
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = values.iter().map(|v| (v - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    Ok(exps.into_iter().map(|e| e / total).collect())
}
