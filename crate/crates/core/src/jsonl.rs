//! Line-oriented JSON helpers shared by the corpus, query and clue readers.

use std::io::BufRead;

use serde::de::DeserializeOwned;

/// A record that could not be decoded, tagged with its 1-based line number.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("line {line}: {message}")]
pub struct LineError {
    pub line: usize,
    pub message: String,
}

/// Failure while reading a JSON-Lines stream.
#[derive(Debug, thiserror::Error)]
pub enum JsonlError {
    #[error("read failed: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed record at {0}")]
    Malformed(LineError),
}

/// Decodes every non-blank line of `reader` as a `T`, returning the records
/// with their line numbers.
pub fn read_records<T, R>(reader: R) -> Result<Vec<(usize, T)>, JsonlError>
where
    T: DeserializeOwned,
    R: BufRead,
{
    let mut out = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = idx + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let record = serde_json::from_str(trimmed).map_err(|e| {
            JsonlError::Malformed(LineError {
                line: lineno,
                message: e.to_string(),
            })
        })?;
        out.push((lineno, record));
    }
    Ok(out)
}
