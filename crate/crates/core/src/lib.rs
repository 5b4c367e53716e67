//! Query expansion with generated contextual clues.
//!
//! The pipeline takes clues produced by a generator for each question,
//! groups near-duplicates and keeps the most likely member of each group
//! ([`clues`]), searches a BM25 index once per clue-augmented query
//! ([`index`]), and merges the ranked lists with likelihood weights
//! ([`fusion`]). [`eval`] provides the retrieval and clue-quality metrics.

pub mod clues;
pub mod corpus;
pub mod eval;
pub mod fusion;
pub mod index;
pub mod jsonl;
pub mod query;
pub mod ranked;
pub mod trec;

pub use clues::{ClueCluster, ClueSet, ContextualClue};
pub use corpus::Passage;
pub use fusion::{Backfill, FusedRun, FusionConfig};
pub use index::{Bm25Params, InvertedIndex, TokenizerConfig};
pub use query::QueryRecord;
pub use ranked::{RankedList, ScoredPassage};
