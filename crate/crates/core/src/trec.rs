//! TREC run files: `qid Q0 passage_id rank score run_tag`.

use std::fs::File;
use std::io::{self, BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use indexmap::IndexMap;

use crate::ranked::{RankedList, RankedListError, ScoredPassage};

/// Per-query ranked lists in first-appearance order.
pub type Run = IndexMap<String, RankedList>;

#[derive(Debug, thiserror::Error)]
pub enum TrecError {
    #[error("cannot open run file {path}: {source}")]
    Open { path: PathBuf, source: io::Error },
    #[error("run file read failed: {0}")]
    Io(#[from] io::Error),
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error(transparent)]
    Ranking(#[from] RankedListError),
}

/// Writes `list` with ranks starting at 1 and six-decimal scores.
pub fn write_ranked_list<W: Write>(out: &mut W, list: &RankedList, run_tag: &str) -> io::Result<()> {
    for (i, e) in list.entries().iter().enumerate() {
        writeln!(out, "{} Q0 {} {} {:.6} {}", list.query_id, e.passage_id, i + 1, e.score, run_tag)?;
    }
    Ok(())
}

/// Parses a run. Lines of one query need not be contiguous; each query's
/// entries are re-sorted into rank order by score.
pub fn read_run<R: BufRead>(reader: R) -> Result<Run, TrecError> {
    let mut grouped: IndexMap<String, Vec<ScoredPassage>> = IndexMap::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let malformed = |message: String| TrecError::Malformed { line: lineno, message };
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 6 {
            return Err(malformed(format!("expected 6 fields, found {}", fields.len())));
        }
        fields[3]
            .parse::<u64>()
            .map_err(|_| malformed(format!("bad rank {:?}", fields[3])))?;
        let score: f64 = fields[4]
            .parse()
            .map_err(|_| malformed(format!("bad score {:?}", fields[4])))?;
        if !score.is_finite() {
            return Err(malformed(format!("non-finite score {:?}", fields[4])));
        }
        grouped
            .entry(fields[0].to_string())
            .or_default()
            .push(ScoredPassage::new(fields[2], score));
    }
    grouped
        .into_iter()
        .map(|(qid, entries)| Ok((qid.clone(), RankedList::from_unsorted(qid, entries)?)))
        .collect()
}

pub fn load_run(path: &Path) -> Result<Run, TrecError> {
    let file = File::open(path).map_err(|source| TrecError::Open {
        path: path.to_path_buf(),
        source,
    })?;
    read_run(BufReader::new(file))
}
