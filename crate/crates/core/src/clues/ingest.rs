//! Reading generated clues from JSON-Lines files or a generation endpoint.
//!
//! File lines look like
//! `{"qid": "q1", "clues": [{"text": "...", "logprob": -1.23, "source_tag": "context"}]}`,
//! one line per (query, generator) pair. The endpoint receives
//! `{"question": "...", "num_candidates": 100}` and answers with
//! `{"clues": [{"text": "...", "logprob": -0.5}]}`.

use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};
use std::thread;
use std::time::Duration;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use super::{ClueSet, ContextualClue};
use crate::jsonl::{self, JsonlError, LineError};

/// Per-query clue sets in first-appearance order.
pub type ClueMap = IndexMap<String, ClueSet>;

pub const TOKEN_ENV: &str = "CLUEFUSE_API_TOKEN";

#[derive(Debug, thiserror::Error)]
pub enum IngestError {
    #[error("cannot open clue file {path}: {source}")]
    Open {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("clue file read failed: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed clue record at {0}")]
    Malformed(LineError),
    #[error("clue schema violation ({location}): {message}")]
    Schema { location: String, message: String },
    #[error("generation endpoint returned HTTP {status} for query {qid:?} after {attempts} attempts")]
    Http { qid: String, status: u16, attempts: u32 },
    #[error("generation endpoint request for query {qid:?} failed after {attempts} attempts: {message}")]
    Transport { qid: String, attempts: u32, message: String },
    #[error("bad generation endpoint response for query {qid:?}: {message}")]
    Response { qid: String, message: String },
}

impl From<JsonlError> for IngestError {
    fn from(e: JsonlError) -> Self {
        match e {
            JsonlError::Io(e) => IngestError::Io(e),
            JsonlError::Malformed(e) => IngestError::Malformed(e),
        }
    }
}

#[derive(Debug, Deserialize)]
struct RawClue {
    text: String,
    logprob: f64,
    #[serde(default)]
    source_tag: Option<String>,
}

#[derive(Debug, Deserialize)]
struct ClueLine {
    qid: String,
    #[serde(default)]
    clues: Vec<RawClue>,
}

#[derive(Debug, Deserialize)]
struct EndpointResponse {
    clues: Vec<RawClue>,
}

fn validate(raw: RawClue, default_tag: &str, location: impl Fn() -> String) -> Result<ContextualClue, IngestError> {
    if raw.text.trim().is_empty() {
        return Err(IngestError::Schema {
            location: location(),
            message: "clue text is empty".into(),
        });
    }
    if !raw.logprob.is_finite() || raw.logprob > 0.0 {
        return Err(IngestError::Schema {
            location: location(),
            message: format!("logprob {} must be finite and <= 0", raw.logprob),
        });
    }
    let tag = match raw.source_tag {
        Some(t) if !t.is_empty() => t,
        _ => default_tag.to_string(),
    };
    Ok(ContextualClue {
        text: raw.text,
        logprob: raw.logprob,
        source_tag: tag,
    })
}

/// Parses a clue file. Clues without a `source_tag` get `default_tag`.
/// Several lines for one qid are concatenated in file order.
pub fn read_clue_file<R: BufRead>(reader: R, default_tag: &str) -> Result<ClueMap, IngestError> {
    let lines: Vec<(usize, ClueLine)> = jsonl::read_records(reader)?;
    let mut out = ClueMap::new();
    for (line, record) in lines {
        if record.qid.is_empty() {
            return Err(IngestError::Schema {
                location: format!("line {line}"),
                message: "empty qid".into(),
            });
        }
        let set = out
            .entry(record.qid.clone())
            .or_insert_with(|| ClueSet::new(record.qid.clone(), Vec::new()));
        for (i, raw) in record.clues.into_iter().enumerate() {
            let clue = validate(raw, default_tag, || format!("line {line}, clue {i}"))?;
            set.clues.push(clue);
        }
    }
    Ok(out)
}

pub fn ingest_from_path(path: &Path, default_tag: &str) -> Result<ClueMap, IngestError> {
    let file = File::open(path).map_err(|source| IngestError::Open {
        path: path.to_path_buf(),
        source,
    })?;
    read_clue_file(BufReader::new(file), default_tag)
}

/// Decodes one endpoint response body into a clue set for `qid`.
pub fn parse_endpoint_response(body: &str, qid: &str, default_tag: &str) -> Result<ClueSet, IngestError> {
    let resp: EndpointResponse = serde_json::from_str(body).map_err(|e| IngestError::Response {
        qid: qid.to_string(),
        message: e.to_string(),
    })?;
    let clues = resp
        .clues
        .into_iter()
        .enumerate()
        .map(|(i, raw)| validate(raw, default_tag, || format!("query {qid:?}, clue {i}")))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(ClueSet::new(qid, clues))
}

#[derive(Debug, Clone)]
pub struct EndpointConfig {
    pub url: String,
    pub timeout: Duration,
    pub attempts: u32,
    /// Delay before the second attempt; doubles after each failure.
    pub initial_backoff: Duration,
    pub num_candidates: usize,
    pub token: Option<String>,
    pub source_tag: String,
}

impl EndpointConfig {
    /// Defaults: 30 s timeout, 3 attempts, 500 ms initial backoff,
    /// 100 candidates, bearer token from `CLUEFUSE_API_TOKEN` if set.
    pub fn new(url: impl Into<String>) -> Self {
        Self {
            url: url.into(),
            timeout: Duration::from_secs(30),
            attempts: 3,
            initial_backoff: Duration::from_millis(500),
            num_candidates: 100,
            token: std::env::var(TOKEN_ENV).ok().filter(|t| !t.is_empty()),
            source_tag: super::DEFAULT_SOURCE_TAG.to_string(),
        }
    }
}

#[derive(Serialize)]
struct GenerationRequest<'a> {
    question: &'a str,
    num_candidates: usize,
}

/// Issues one POST per `(qid, question)` pair and collects the clue sets in
/// input order.
pub fn ingest_from_endpoint<'a, I>(config: &EndpointConfig, queries: I) -> Result<ClueMap, IngestError>
where
    I: IntoIterator<Item = (&'a str, &'a str)>,
{
    let agent: ureq::Agent = ureq::Agent::config_builder()
        .timeout_global(Some(config.timeout))
        .http_status_as_error(false)
        .build()
        .into();
    let mut out = ClueMap::new();
    for (qid, question) in queries {
        let body = serde_json::to_string(&GenerationRequest {
            question,
            num_candidates: config.num_candidates,
        })
        .expect("request serializes");
        let text = post_with_retry(&agent, config, qid, &body)?;
        let set = parse_endpoint_response(&text, qid, &config.source_tag)?;
        out.insert(qid.to_string(), set);
    }
    Ok(out)
}

fn post_with_retry(agent: &ureq::Agent, config: &EndpointConfig, qid: &str, body: &str) -> Result<String, IngestError> {
    let attempts = config.attempts.max(1);
    let mut backoff = config.initial_backoff;
    let mut last_err = None;
    for attempt in 1..=attempts {
        let mut req = agent.post(&config.url).header("Content-Type", "application/json");
        if let Some(token) = &config.token {
            req = req.header("Authorization", &format!("Bearer {token}"));
        }
        match req.send(body) {
            Ok(resp) if resp.status().is_success() => {
                return resp.into_body().read_to_string().map_err(|e| IngestError::Response {
                    qid: qid.to_string(),
                    message: e.to_string(),
                });
            }
            Ok(resp) => {
                log::warn!("query {qid}: endpoint returned HTTP {} (attempt {attempt}/{attempts})", resp.status());
                last_err = Some(IngestError::Http {
                    qid: qid.to_string(),
                    status: resp.status().as_u16(),
                    attempts,
                });
            }
            Err(e) => {
                log::warn!("query {qid}: endpoint request failed: {e} (attempt {attempt}/{attempts})");
                last_err = Some(IngestError::Transport {
                    qid: qid.to_string(),
                    attempts,
                    message: e.to_string(),
                });
            }
        }
        if attempt < attempts {
            thread::sleep(backoff);
            backoff *= 2;
        }
    }
    Err(last_err.expect("at least one attempt"))
}
