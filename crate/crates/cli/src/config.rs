//! Pipeline configuration: a TOML file merged with command-line overrides.
//!
//! ```toml
//! threads = 4
//!
//! [paths]
//! corpus = "corpus.jsonl"
//! index = "corpus.cfix"
//! queries = "queries.jsonl"
//! run = "run.trec"
//! report = "report.json"
//!
//! [paths.clues]
//! context = "clues.jsonl"
//!
//! [bm25]
//! k1 = 0.9
//! b = 0.4
//!
//! [clustering]
//! cutoff = 0.8
//!
//! [fusion]
//! per_clue_k = 1000
//! output_size = 100
//! backfill = "min_score"
//! ```
//!
//! Relative paths are resolved against the directory holding the file.
//! Unknown keys are rejected.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use cluefuse::clues::{ClusterConfig, SimilarityMetric, DEFAULT_CUTOFF};
use cluefuse::eval::{CoverageMode, RougeAggregation, DEFAULT_KS};
use cluefuse::fusion::{Backfill, FusionConfig};
use cluefuse::{Bm25Params, TokenizerConfig};
use serde::Deserialize;

/// Bad invocation or configuration; maps to exit code 2.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

pub fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    #[serde(default)]
    pub paths: PathsSection,
    #[serde(default)]
    pub tokenizer: Option<TokenizerConfig>,
    #[serde(default)]
    pub bm25: Option<Bm25Params>,
    #[serde(default)]
    pub clustering: ClusteringSection,
    #[serde(default)]
    pub fusion: FusionSection,
    #[serde(default)]
    pub eval: EvalSection,
    #[serde(default)]
    pub endpoint: Option<EndpointSection>,
    pub threads: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathsSection {
    pub corpus: Option<PathBuf>,
    pub index: Option<PathBuf>,
    pub queries: Option<PathBuf>,
    /// Clue files keyed by default source tag.
    #[serde(default)]
    pub clues: BTreeMap<String, PathBuf>,
    /// Externally produced TREC runs keyed by tag.
    #[serde(default)]
    pub external_runs: BTreeMap<String, PathBuf>,
    pub run: Option<PathBuf>,
    pub report: Option<PathBuf>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClusteringSection {
    pub cutoff: Option<f64>,
    pub metric: Option<SimilarityMetric>,
    pub filter: Option<bool>,
    pub length_normalize: Option<bool>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FusionSection {
    pub per_clue_k: Option<usize>,
    pub output_size: Option<usize>,
    pub backfill: Option<Backfill>,
    #[serde(default)]
    pub interpolation_weights: BTreeMap<String, f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvalSection {
    pub ks: Option<Vec<usize>>,
    pub rouge_aggregation: Option<RougeAggregation>,
    pub coverage: Option<CoverageMode>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EndpointSection {
    pub url: String,
    pub timeout_secs: Option<u64>,
    pub num_candidates: Option<usize>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> anyhow::Result<Self> {
        toml::from_str(text).map_err(|e| usage(format!("invalid config: {e}")))
    }

    /// Reads `path` and resolves relative paths against its directory.
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| usage(format!("cannot read config {}: {e}", path.display())))?;
        let mut cfg = Self::parse(&text).map_err(|e| usage(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new(""));
        cfg.paths.resolve(base);
        Ok(cfg)
    }
}

impl PathsSection {
    fn resolve(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        for p in [&mut self.corpus, &mut self.index, &mut self.queries, &mut self.run, &mut self.report]
            .into_iter()
            .flatten()
        {
            fix(p);
        }
        self.clues.values_mut().for_each(fix);
        self.external_runs.values_mut().for_each(fix);
    }
}

/// Fully resolved settings shared by all subcommands.
#[derive(Debug, Clone)]
pub struct PipelineConfig {
    pub corpus: Option<PathBuf>,
    pub index: Option<PathBuf>,
    pub queries: Option<PathBuf>,
    pub clues: BTreeMap<String, PathBuf>,
    pub external_runs: BTreeMap<String, PathBuf>,
    pub run: Option<PathBuf>,
    pub report: Option<PathBuf>,
    pub tokenizer: TokenizerConfig,
    pub bm25: Bm25Params,
    pub cluster: ClusterConfig,
    pub filter: bool,
    pub question_only: bool,
    pub length_normalize: bool,
    pub fusion: FusionConfig,
    pub ks: Vec<usize>,
    pub rouge_aggregation: RougeAggregation,
    pub coverage: CoverageMode,
    pub endpoint: Option<EndpointSection>,
    pub threads: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            corpus: None,
            index: None,
            queries: None,
            clues: BTreeMap::new(),
            external_runs: BTreeMap::new(),
            run: None,
            report: None,
            tokenizer: TokenizerConfig::default(),
            bm25: Bm25Params::default(),
            cluster: ClusterConfig::default(),
            filter: true,
            question_only: false,
            length_normalize: false,
            fusion: FusionConfig::default(),
            ks: DEFAULT_KS.to_vec(),
            rouge_aggregation: RougeAggregation::default(),
            coverage: CoverageMode::default(),
            endpoint: None,
            threads: default_threads(),
        }
    }
}

pub fn default_threads() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

impl PipelineConfig {
    pub fn from_file(file: ConfigFile) -> Self {
        let d = Self::default();
        let ConfigFile {
            paths,
            tokenizer,
            bm25,
            clustering,
            fusion,
            eval,
            endpoint,
            threads,
        } = file;
        Self {
            corpus: paths.corpus,
            index: paths.index,
            queries: paths.queries,
            clues: paths.clues,
            external_runs: paths.external_runs,
            run: paths.run,
            report: paths.report,
            tokenizer: tokenizer.unwrap_or(d.tokenizer),
            bm25: bm25.unwrap_or(d.bm25),
            cluster: ClusterConfig {
                cutoff: clustering.cutoff.unwrap_or(DEFAULT_CUTOFF),
                metric: clustering.metric.unwrap_or_default(),
            },
            filter: clustering.filter.unwrap_or(true),
            question_only: false,
            length_normalize: clustering.length_normalize.unwrap_or(false),
            fusion: FusionConfig {
                per_clue_k: fusion.per_clue_k.unwrap_or(d.fusion.per_clue_k),
                backfill: fusion.backfill.unwrap_or_default(),
                output_size: fusion.output_size.or(d.fusion.output_size),
                interpolation_weights: fusion.interpolation_weights,
            },
            ks: eval.ks.unwrap_or(d.ks),
            rouge_aggregation: eval.rouge_aggregation.unwrap_or_default(),
            coverage: eval.coverage.unwrap_or_default(),
            endpoint,
            threads: threads.unwrap_or(d.threads),
        }
    }

    /// Loads `path` if given, otherwise starts from defaults.
    pub fn load(path: Option<&Path>) -> anyhow::Result<Self> {
        match path {
            Some(p) => Ok(Self::from_file(ConfigFile::load(p)?)),
            None => Ok(Self::default()),
        }
    }

    /// Rejects values no subcommand can work with.
    pub fn validate(&self) -> anyhow::Result<()> {
        let c = self.cluster.cutoff;
        if !(0.0..=1.0).contains(&c) {
            return Err(usage(format!("cutoff {c} outside [0, 1]")));
        }
        if self.threads == 0 {
            return Err(usage("threads must be at least 1"));
        }
        if self.fusion.output_size == Some(0) {
            return Err(usage("output_size must be at least 1"));
        }
        if self.ks.is_empty() || self.ks.contains(&0) {
            return Err(usage("ks must be a non-empty list of positive cutoffs"));
        }
        let Bm25Params { k1, b } = self.bm25;
        if !(k1.is_finite() && k1 >= 0.0) || !(0.0..=1.0).contains(&b) {
            return Err(usage(format!("invalid BM25 parameters k1={k1}, b={b}")));
        }
        self.fusion.validate().map_err(|e| usage(e.to_string()))
    }

    pub fn require<'a>(&self, value: &'a Option<PathBuf>, what: &str) -> anyhow::Result<&'a Path> {
        value
            .as_deref()
            .ok_or_else(|| usage(format!("no {what} path given (flag or config file)")))
    }
}

/// Parses `TAG=VALUE`; a bare value gets `default_tag`.
pub fn parse_tagged(s: &str, default_tag: &str) -> (String, String) {
    match s.split_once('=') {
        Some((tag, value)) if !tag.is_empty() => (tag.to_string(), value.to_string()),
        _ => (default_tag.to_string(), s.to_string()),
    }
}

/// Parses `tag=w,tag=w` into interpolation weights.
pub fn parse_weights(s: &str) -> anyhow::Result<BTreeMap<String, f64>> {
    let mut out = BTreeMap::new();
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let (tag, w) = part
            .split_once('=')
            .ok_or_else(|| usage(format!("weight {part:?} is not TAG=WEIGHT")))?;
        let w: f64 = w.parse().map_err(|_| usage(format!("weight {w:?} is not a number")))?;
        if out.insert(tag.to_string(), w).is_some() {
            return Err(usage(format!("tag {tag:?} given twice in weights")));
        }
    }
    Ok(out)
}

pub fn parse_ks(s: &str) -> anyhow::Result<Vec<usize>> {
    let mut ks = s
        .split(',')
        .map(|k| k.trim().parse::<usize>().map_err(|_| usage(format!("bad k value {k:?}"))))
        .collect::<anyhow::Result<Vec<_>>>()?;
    ks.sort_unstable();
    ks.dedup();
    Ok(ks)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults() {
        let cfg = PipelineConfig::from_file(ConfigFile::parse("").unwrap());
        assert_eq!(cfg.cluster.cutoff, 0.8);
        assert_eq!(cfg.fusion.per_clue_k, 1000);
        assert_eq!(cfg.fusion.output_size, Some(100));
        assert_eq!(cfg.bm25, Bm25Params { k1: 0.9, b: 0.4 });
        assert_eq!(cfg.ks, [5, 20, 100]);
        assert!(cfg.filter);
        cfg.validate().unwrap();
    }

    #[test]
    fn full_file() {
        let text = r#"
threads = 3
[paths]
corpus = "c.jsonl"
[paths.clues]
answer = "/abs/a.jsonl"
[tokenizer]
stemming = "porter"
[bm25]
k1 = 1.2
b = 0.75
[clustering]
cutoff = 0.9
metric = "levenshtein"
[fusion]
backfill = "zero"
output_size = 50
interpolation_weights = { answer = 1.0 }
[eval]
ks = [1, 10]
coverage = "per_clue"
"#;
        let mut file = ConfigFile::parse(text).unwrap();
        file.paths.resolve(Path::new("/base"));
        let cfg = PipelineConfig::from_file(file);
        assert_eq!(cfg.threads, 3);
        assert_eq!(cfg.corpus.as_deref(), Some(Path::new("/base/c.jsonl")));
        assert_eq!(cfg.clues["answer"], Path::new("/abs/a.jsonl"));
        assert_eq!(cfg.bm25.k1, 1.2);
        assert_eq!(cfg.cluster.metric, SimilarityMetric::Levenshtein);
        assert_eq!(cfg.fusion.backfill, Backfill::Zero);
        assert_eq!(cfg.fusion.output_size, Some(50));
        assert_eq!(cfg.coverage, CoverageMode::PerClue);
        cfg.validate().unwrap();
    }

    #[test]
    fn unknown_keys_are_named() {
        for (text, key) in [
            ("colour = 1", "colour"),
            ("[fusion]\nper_clue_kk = 5", "per_clue_kk"),
            ("[bm25]\nk1 = 1.0\nb = 0.5\nk3 = 1", "k3"),
        ] {
            let err = ConfigFile::parse(text).unwrap_err();
            assert!(err.is::<UsageError>());
            assert!(err.to_string().contains(key), "{err}");
        }
    }

    #[test]
    fn invalid_values() {
        let mut cfg = PipelineConfig::default();
        cfg.cluster.cutoff = 1.5;
        assert!(cfg.validate().unwrap_err().is::<UsageError>());
        let mut cfg = PipelineConfig::default();
        cfg.fusion.interpolation_weights = parse_weights("a=0.5,b=0.6").unwrap();
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn tagged_values() {
        assert_eq!(parse_tagged("answer=a.jsonl", "context"), ("answer".into(), "a.jsonl".into()));
        assert_eq!(parse_tagged("a.jsonl", "context"), ("context".into(), "a.jsonl".into()));
        assert_eq!(parse_ks("100,5,20,5").unwrap(), [5, 20, 100]);
        assert!(parse_ks("5,x").is_err());
        assert!(parse_weights("a=1,a=0").is_err());
    }
}
