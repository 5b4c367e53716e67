//! Inverted index with BM25 scoring.
//!
//! The index is built once by a single writer and is immutable afterwards,
//! so a shared reference can be handed to any number of searching threads.

pub mod persist;
pub mod tokenizer;

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::corpus::Passage;
use crate::ranked::{rank_order, RankedList, ScoredPassage};

pub use persist::{decode_index, encode_index, load_index, save_index, PersistError};
pub use tokenizer::{tokenize, Stemming, TokenizerConfig};

/// Position of a passage inside the index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct DocOrdinal(pub u32);

impl fmt::Display for DocOrdinal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

/// BM25 free parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Bm25Params {
    pub k1: f64,
    pub b: f64,
}

impl Default for Bm25Params {
    fn default() -> Self {
        Self { k1: 0.9, b: 0.4 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Posting {
    pub doc: u32,
    pub tf: u32,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum IndexError {
    #[error("corpus is empty")]
    EmptyCorpus,
    #[error("duplicate passage id {0:?}")]
    DuplicateId(String),
    #[error("unknown document ordinal {0}")]
    UnknownDoc(DocOrdinal),
    #[error("invalid BM25 parameters k1={k1}, b={b}")]
    InvalidParams { k1: f64, b: f64 },
    #[error("corpus too large for 32-bit ordinals")]
    TooLarge,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InvertedIndex {
    pub(crate) vocabulary: HashMap<String, u32>,
    /// term-id → term, in first-seen order
    pub(crate) terms: Vec<String>,
    pub(crate) postings: Vec<Vec<Posting>>,
    pub(crate) doc_lengths: Vec<u32>,
    pub(crate) doc_ids: Vec<String>,
    pub(crate) avgdl: f64,
    pub(crate) params: Bm25Params,
    pub(crate) tokenizer: TokenizerConfig,
    /// per-document `k1 * (1 - b + b * dl / avgdl)`, derived from the fields above
    length_norms: Vec<f64>,
}

/// Query terms resolved against the vocabulary: (term-id, occurrences, idf),
/// in first-occurrence order. Unknown terms are dropped.
struct ResolvedQuery {
    terms: Vec<(u32, u32, f64)>,
}

fn validate_params(params: &Bm25Params) -> Result<(), IndexError> {
    let ok = params.k1.is_finite() && params.k1 >= 0.0 && params.b.is_finite() && (0.0..=1.0).contains(&params.b);
    if ok {
        Ok(())
    } else {
        Err(IndexError::InvalidParams {
            k1: params.k1,
            b: params.b,
        })
    }
}

/// Builds an index over `corpus`. Each passage is indexed as its title and
/// text joined by a single space.
pub fn build_index<I>(
    corpus: I,
    config: TokenizerConfig,
    params: Bm25Params,
) -> Result<InvertedIndex, IndexError>
where
    I: IntoIterator<Item = Passage>,
{
    validate_params(&params)?;
    let mut vocabulary: HashMap<String, u32> = HashMap::new();
    let mut terms = Vec::new();
    let mut postings: Vec<Vec<Posting>> = Vec::new();
    let mut doc_lengths = Vec::new();
    let mut doc_ids = Vec::new();
    let mut id_set = std::collections::HashSet::new();

    let mut tokens = Vec::new();
    let mut tf: HashMap<u32, u32> = HashMap::new();
    let mut order: Vec<u32> = Vec::new();
    for passage in corpus {
        if !id_set.insert(passage.id.clone()) {
            return Err(IndexError::DuplicateId(passage.id));
        }
        let ordinal = u32::try_from(doc_ids.len()).map_err(|_| IndexError::TooLarge)?;
        tokens.clear();
        tokenizer::tokenize_into(&passage.indexed_text(), &config, &mut tokens);

        tf.clear();
        order.clear();
        for token in tokens.drain(..) {
            let id = match vocabulary.get(&token) {
                Some(&id) => id,
                None => {
                    let id = u32::try_from(terms.len()).map_err(|_| IndexError::TooLarge)?;
                    vocabulary.insert(token.clone(), id);
                    terms.push(token);
                    postings.push(Vec::new());
                    id
                }
            };
            let count = tf.entry(id).or_insert(0);
            if *count == 0 {
                order.push(id);
            }
            *count += 1;
        }
        let mut length = 0u32;
        for &id in &order {
            let count = tf[&id];
            length += count;
            postings[id as usize].push(Posting { doc: ordinal, tf: count });
        }
        doc_lengths.push(length);
        doc_ids.push(passage.id);
    }

    if doc_ids.is_empty() {
        return Err(IndexError::EmptyCorpus);
    }
    Ok(InvertedIndex::assemble(
        vocabulary,
        terms,
        postings,
        doc_lengths,
        doc_ids,
        params,
        config,
    ))
}

#[inline]
fn term_weight(idf: f64, tf: u32, norm: f64, k1: f64) -> f64 {
    let tf = f64::from(tf);
    idf * (tf * (k1 + 1.0)) / (tf + norm)
}

impl InvertedIndex {
    pub(crate) fn assemble(
        vocabulary: HashMap<String, u32>,
        terms: Vec<String>,
        postings: Vec<Vec<Posting>>,
        doc_lengths: Vec<u32>,
        doc_ids: Vec<String>,
        params: Bm25Params,
        tokenizer: TokenizerConfig,
    ) -> Self {
        let total: u64 = doc_lengths.iter().map(|&l| u64::from(l)).sum();
        let avgdl = total as f64 / doc_lengths.len() as f64;
        let length_norms = doc_lengths
            .iter()
            .map(|&dl| {
                let rel = if avgdl > 0.0 { f64::from(dl) / avgdl } else { 0.0 };
                params.k1 * (1.0 - params.b + params.b * rel)
            })
            .collect();
        Self {
            vocabulary,
            terms,
            postings,
            doc_lengths,
            doc_ids,
            avgdl,
            params,
            tokenizer,
            length_norms,
        }
    }

    pub fn num_docs(&self) -> usize {
        self.doc_ids.len()
    }

    pub fn vocabulary_size(&self) -> usize {
        self.terms.len()
    }

    pub fn avgdl(&self) -> f64 {
        self.avgdl
    }

    pub fn params(&self) -> Bm25Params {
        self.params
    }

    pub fn tokenizer_config(&self) -> &TokenizerConfig {
        &self.tokenizer
    }

    pub fn doc_id(&self, doc: DocOrdinal) -> Option<&str> {
        self.doc_ids.get(doc.0 as usize).map(String::as_str)
    }

    pub fn doc_length(&self, doc: DocOrdinal) -> Option<u32> {
        self.doc_lengths.get(doc.0 as usize).copied()
    }

    pub fn term_id(&self, term: &str) -> Option<u32> {
        self.vocabulary.get(term).copied()
    }

    pub fn postings(&self, term: &str) -> &[Posting] {
        match self.vocabulary.get(term) {
            Some(&id) => &self.postings[id as usize],
            None => &[],
        }
    }

    /// Number of documents containing `term`.
    pub fn doc_freq(&self, term: &str) -> usize {
        self.postings(term).len()
    }

    /// `ln(1 + (N - df + 0.5) / (df + 0.5))`, never negative.
    pub fn idf(&self, df: usize) -> f64 {
        let n = self.num_docs() as f64;
        let df = df as f64;
        (1.0 + (n - df + 0.5) / (df + 0.5)).ln()
    }

    pub fn tokenize(&self, text: &str) -> Vec<String> {
        tokenize(text, &self.tokenizer)
    }

    fn resolve(&self, query_tokens: &[String]) -> ResolvedQuery {
        let mut terms: Vec<(u32, u32, f64)> = Vec::new();
        for token in query_tokens {
            let Some(&id) = self.vocabulary.get(token) else {
                continue;
            };
            match terms.iter_mut().find(|t| t.0 == id) {
                Some(t) => t.1 += 1,
                None => {
                    let idf = self.idf(self.postings[id as usize].len());
                    terms.push((id, 1, idf));
                }
            }
        }
        ResolvedQuery { terms }
    }

    /// BM25 score of `doc` for an already tokenized query. Repeated query
    /// tokens count once per occurrence; unknown tokens contribute nothing.
    pub fn bm25_score(&self, query_tokens: &[String], doc: DocOrdinal) -> Result<f64, IndexError> {
        let d = doc.0 as usize;
        if d >= self.num_docs() {
            return Err(IndexError::UnknownDoc(doc));
        }
        let query = self.resolve(query_tokens);
        let norm = self.length_norms[d];
        let mut score = 0.0;
        for &(id, count, idf) in &query.terms {
            let list = &self.postings[id as usize];
            if let Ok(pos) = list.binary_search_by_key(&doc.0, |p| p.doc) {
                score += f64::from(count) * term_weight(idf, list[pos].tf, norm, self.params.k1);
            }
        }
        Ok(score)
    }

    /// Tokenizes `query_text` with the index's tokenizer and returns the top
    /// `k` passages with a positive score.
    pub fn search(&self, query_id: &str, query_text: &str, k: usize) -> RankedList {
        let tokens = self.tokenize(query_text);
        self.search_tokens(query_id, &tokens, k)
    }

    pub fn search_tokens(&self, query_id: &str, query_tokens: &[String], k: usize) -> RankedList {
        let query = self.resolve(query_tokens);
        if k == 0 || query.terms.is_empty() {
            return RankedList::empty(query_id);
        }

        // Term-at-a-time accumulation in query-term order, which matches the
        // summation order of `bm25_score` exactly.
        let expected: usize = query
            .terms
            .iter()
            .map(|t| self.postings[t.0 as usize].len())
            .sum();
        let mut acc: HashMap<u32, f64> = HashMap::with_capacity(expected.min(self.num_docs()));
        for &(id, count, idf) in &query.terms {
            let weight = f64::from(count);
            for p in &self.postings[id as usize] {
                let norm = self.length_norms[p.doc as usize];
                *acc.entry(p.doc).or_insert(0.0) += weight * term_weight(idf, p.tf, norm, self.params.k1);
            }
        }

        let mut hits: Vec<(u32, f64)> = acc.into_iter().filter(|&(_, s)| s > 0.0).collect();
        let cmp = |a: &(u32, f64), b: &(u32, f64)| {
            rank_order(
                a.1,
                &self.doc_ids[a.0 as usize],
                b.1,
                &self.doc_ids[b.0 as usize],
            )
        };
        if hits.len() > k {
            hits.select_nth_unstable_by(k - 1, cmp);
            hits.truncate(k);
        }
        hits.sort_unstable_by(cmp);
        let entries = hits
            .into_iter()
            .map(|(d, s)| ScoredPassage::new(self.doc_ids[d as usize].clone(), s))
            .collect();
        RankedList::from_sorted_unchecked(query_id.to_string(), entries)
    }
}
