//! Text analysis shared by indexing, querying and answer matching.

use std::fmt;
use std::sync::OnceLock;

use rust_stemmers::{Algorithm, Stemmer};
use serde::{Deserialize, Serialize};

/// Stemming applied after splitting and lowercasing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stemming {
    #[default]
    None,
    Porter,
}

impl fmt::Display for Stemming {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Stemming::None => f.write_str("none"),
            Stemming::Porter => f.write_str("porter"),
        }
    }
}

/// Options controlling how text becomes a token sequence.
///
/// The default configuration lowercases, splits on every maximal run of
/// non-alphanumeric characters, and does nothing else.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TokenizerConfig {
    pub lowercase: bool,
    pub stemming: Stemming,
    pub stopword_removal: bool,
}

impl Default for TokenizerConfig {
    fn default() -> Self {
        Self {
            lowercase: true,
            stemming: Stemming::None,
            stopword_removal: false,
        }
    }
}

/// English stopword set used by Lucene's `StandardAnalyzer`.
pub const STOPWORDS: &[&str] = &[
    "a", "an", "and", "are", "as", "at", "be", "but", "by", "for", "if", "in", "into", "is", "it",
    "no", "not", "of", "on", "or", "such", "that", "the", "their", "then", "there", "these",
    "they", "this", "to", "was", "will", "with",
];

fn is_stopword(token: &str) -> bool {
    STOPWORDS.binary_search(&token).is_ok()
}

fn english_stemmer() -> &'static Stemmer {
    static STEMMER: OnceLock<Stemmer> = OnceLock::new();
    STEMMER.get_or_init(|| Stemmer::create(Algorithm::English))
}

/// Splits `text` into tokens according to `config`.
///
/// Lowercasing happens before splitting, so characters that only appear
/// through case mapping (e.g. combining marks) act as separators.
pub fn tokenize(text: &str, config: &TokenizerConfig) -> Vec<String> {
    let mut out = Vec::new();
    tokenize_into(text, config, &mut out);
    out
}

pub(crate) fn tokenize_into(text: &str, config: &TokenizerConfig, out: &mut Vec<String>) {
    let lowered;
    let source = if config.lowercase {
        lowered = text.to_lowercase();
        lowered.as_str()
    } else {
        text
    };

    for raw in source.split(|c: char| !c.is_alphanumeric()) {
        if raw.is_empty() {
            continue;
        }
        if config.stopword_removal && is_stopword(raw) {
            continue;
        }
        let token = match config.stemming {
            Stemming::None => raw.to_string(),
            Stemming::Porter => {
                let stemmed = english_stemmer().stem(raw);
                // The stemmer never introduces separators, but may empty a token.
                if stemmed.is_empty() {
                    continue;
                }
                stemmed.into_owned()
            }
        };
        out.push(token);
    }
}
