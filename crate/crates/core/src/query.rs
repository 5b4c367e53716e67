//! Question records with gold answers.

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::jsonl::{self, JsonlError, LineError};

/// A question, its gold answers, and optionally the reference answer
/// contexts used for ROUGE.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueryRecord {
    pub qid: String,
    pub question: String,
    pub answers: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub contexts: Vec<String>,
}

impl QueryRecord {
    pub fn new(qid: impl Into<String>, question: impl Into<String>, answers: Vec<String>) -> Self {
        Self {
            qid: qid.into(),
            question: question.into(),
            answers,
            contexts: Vec::new(),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum QueryError {
    #[error("cannot open query file {path}: {source}")]
    Open {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("query file read failed: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed query record at {0}")]
    Malformed(LineError),
    #[error("query schema violation at {0}")]
    Schema(LineError),
    #[error("duplicate qid {0:?}")]
    DuplicateQid(String),
}

impl From<JsonlError> for QueryError {
    fn from(e: JsonlError) -> Self {
        match e {
            JsonlError::Io(e) => QueryError::Io(e),
            JsonlError::Malformed(e) => QueryError::Malformed(e),
        }
    }
}

pub fn read_queries<R: BufRead>(reader: R) -> Result<Vec<QueryRecord>, QueryError> {
    let records: Vec<(usize, QueryRecord)> = jsonl::read_records(reader)?;
    let mut seen = HashSet::new();
    let mut out = Vec::with_capacity(records.len());
    for (line, q) in records {
        let schema = |message: &str| {
            QueryError::Schema(LineError {
                line,
                message: message.to_string(),
            })
        };
        if q.qid.is_empty() {
            return Err(schema("empty qid"));
        }
        if q.question.trim().is_empty() {
            return Err(schema("empty question"));
        }
        if q.answers.is_empty() {
            return Err(schema("answers must be non-empty"));
        }
        if !seen.insert(q.qid.clone()) {
            return Err(QueryError::DuplicateQid(q.qid));
        }
        out.push(q);
    }
    Ok(out)
}

pub fn load_queries(path: &Path) -> Result<Vec<QueryRecord>, QueryError> {
    let file = File::open(path).map_err(|source| QueryError::Open {
        path: path.to_path_buf(),
        source,
    })?;
    read_queries(BufReader::new(file))
}
