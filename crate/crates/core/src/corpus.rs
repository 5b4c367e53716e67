//! Passages and the JSON-Lines corpus reader.

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::jsonl::{self, JsonlError, LineError};

/// A retrievable corpus document.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Passage {
    pub id: String,
    #[serde(default)]
    pub title: String,
    #[serde(default)]
    pub text: String,
}

impl Passage {
    pub fn new(id: impl Into<String>, title: impl Into<String>, text: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            title: title.into(),
            text: text.into(),
        }
    }

    /// The text that gets indexed: title and body joined by one space.
    pub fn indexed_text(&self) -> String {
        if self.title.is_empty() {
            self.text.clone()
        } else if self.text.is_empty() {
            self.title.clone()
        } else {
            format!("{} {}", self.title, self.text)
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("cannot open corpus {path}: {source}")]
    Open {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("corpus read failed: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed corpus record at {0}")]
    Malformed(LineError),
    #[error("corpus schema violation at {0}")]
    Schema(LineError),
    #[error("duplicate passage id {0:?}")]
    DuplicateId(String),
}

impl From<JsonlError> for CorpusError {
    fn from(e: JsonlError) -> Self {
        match e {
            JsonlError::Io(e) => CorpusError::Io(e),
            JsonlError::Malformed(e) => CorpusError::Malformed(e),
        }
    }
}

/// Parses a JSON-Lines corpus. Unknown keys are ignored; `title` defaults
/// to empty. A passage needs an id and at least one of title/text.
pub fn read_corpus<R: BufRead>(reader: R) -> Result<Vec<Passage>, CorpusError> {
    let records: Vec<(usize, Passage)> = jsonl::read_records(reader)?;
    let mut seen = HashSet::with_capacity(records.len());
    let mut out = Vec::with_capacity(records.len());
    for (line, passage) in records {
        if passage.id.is_empty() {
            return Err(CorpusError::Schema(LineError {
                line,
                message: "empty passage id".into(),
            }));
        }
        if passage.title.trim().is_empty() && passage.text.trim().is_empty() {
            return Err(CorpusError::Schema(LineError {
                line,
                message: format!("passage {:?} has neither title nor text", passage.id),
            }));
        }
        if !seen.insert(passage.id.clone()) {
            return Err(CorpusError::DuplicateId(passage.id));
        }
        out.push(passage);
    }
    Ok(out)
}

pub fn load_corpus(path: &Path) -> Result<Vec<Passage>, CorpusError> {
    let file = File::open(path).map_err(|source| CorpusError::Open {
        path: path.to_path_buf(),
        source,
    })?;
    read_corpus(BufReader::new(file))
}
