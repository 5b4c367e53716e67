use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use cluefuse::clues::SimilarityMetric;
use cluefuse::eval::{CoverageMode, RougeAggregation};
use cluefuse::fusion::Backfill;
use cluefuse::index::Stemming;

#[derive(Debug, Parser)]
#[command(name = "cluefuse", version, about = "BM25 retrieval expanded with filtered generated clues")]
pub struct Cli {
    /// TOML configuration; flags override its values.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,

    /// Worker threads for query-level parallelism.
    #[arg(long, global = true, value_name = "N")]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build a BM25 index from a JSON-Lines corpus.
    Index(IndexArgs),
    /// Retrieve and fuse passages for every query into a TREC run.
    Retrieve(RetrieveArgs),
    /// Score runs against gold answers.
    Eval(EvalArgs),
    /// Time the retrieve path single- and multi-threaded.
    Bench(BenchArgs),
}

#[derive(Debug, Args)]
pub struct IndexArgs {
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    /// Where to write the index.
    #[arg(long)]
    pub index: Option<PathBuf>,
    #[arg(long)]
    pub k1: Option<f64>,
    #[arg(long)]
    pub b: Option<f64>,
    #[arg(long, value_enum)]
    pub stemming: Option<StemmingArg>,
    #[arg(long)]
    pub stopwords: bool,
}

#[derive(Debug, Clone, Copy, clap::ValueEnum)]
pub enum StemmingArg {
    None,
    Porter,
}

impl From<StemmingArg> for Stemming {
    fn from(s: StemmingArg) -> Self {
        match s {
            StemmingArg::None => Stemming::None,
            StemmingArg::Porter => Stemming::Porter,
        }
    }
}

#[derive(Debug, Clone, Copy, clap::ValueEnum)]
pub enum BackfillArg {
    MinScore,
    Zero,
}

impl From<BackfillArg> for Backfill {
    fn from(b: BackfillArg) -> Self {
        match b {
            BackfillArg::MinScore => Backfill::MinScore,
            BackfillArg::Zero => Backfill::Zero,
        }
    }
}

#[derive(Debug, Clone, Copy, clap::ValueEnum)]
pub enum MetricArg {
    Gestalt,
    Levenshtein,
}

impl From<MetricArg> for SimilarityMetric {
    fn from(m: MetricArg) -> Self {
        match m {
            MetricArg::Gestalt => SimilarityMetric::Gestalt,
            MetricArg::Levenshtein => SimilarityMetric::Levenshtein,
        }
    }
}

#[derive(Debug, Clone, Copy, clap::ValueEnum)]
pub enum AggregationArg {
    Max,
    Mean,
}

impl From<AggregationArg> for RougeAggregation {
    fn from(a: AggregationArg) -> Self {
        match a {
            AggregationArg::Max => RougeAggregation::Max,
            AggregationArg::Mean => RougeAggregation::Mean,
        }
    }
}

#[derive(Debug, Clone, Copy, clap::ValueEnum)]
pub enum CoverageArg {
    PerQuestion,
    PerClue,
}

impl From<CoverageArg> for CoverageMode {
    fn from(c: CoverageArg) -> Self {
        match c {
            CoverageArg::PerQuestion => CoverageMode::PerQuestion,
            CoverageArg::PerClue => CoverageMode::PerClue,
        }
    }
}

#[derive(Debug, Args)]
pub struct RetrieveArgs {
    #[arg(long)]
    pub index: Option<PathBuf>,
    #[arg(long)]
    pub queries: Option<PathBuf>,
    /// Clue file, optionally tagged: `TAG=PATH`. Repeatable.
    #[arg(long = "clues", value_name = "[TAG=]PATH")]
    pub clues: Vec<String>,
    /// Generation endpoint to request clues from instead of files.
    #[arg(long, value_name = "URL")]
    pub endpoint: Option<String>,
    /// Externally produced TREC run to interpolate with: `TAG=PATH`.
    #[arg(long = "external-run", value_name = "TAG=PATH")]
    pub external_runs: Vec<String>,
    /// Output TREC run file.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
    #[arg(long, default_value = "cluefuse")]
    pub run_tag: String,
    /// Skip clustering and use every clue.
    #[arg(long)]
    pub no_filter: bool,
    /// Plain BM25 on the question.
    #[arg(long)]
    pub question_only: bool,
    #[arg(long, value_name = "R")]
    pub cutoff: Option<f64>,
    /// Depth of every per-clue search.
    #[arg(long, value_name = "N")]
    pub k: Option<usize>,
    #[arg(long, value_name = "N")]
    pub output_size: Option<usize>,
    #[arg(long, value_enum)]
    pub backfill: Option<BackfillArg>,
    /// Interpolation weights across tags: `tag=w,tag=w`.
    #[arg(long, value_name = "TAG=W,...")]
    pub weights: Option<String>,
    #[arg(long, value_enum)]
    pub metric: Option<MetricArg>,
    /// Divide log-probabilities by clue word count before the softmax.
    #[arg(long)]
    pub length_normalize: bool,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Run to evaluate.
    #[arg(long, conflicts_with = "compare")]
    pub run: Option<PathBuf>,
    /// Evaluate two runs and print per-k deltas (B minus A).
    #[arg(long, num_args = 2, value_names = ["RUN_A", "RUN_B"])]
    pub compare: Option<Vec<PathBuf>>,
    #[arg(long)]
    pub queries: Option<PathBuf>,
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    /// Clue file for answer coverage and ROUGE.
    #[arg(long = "clues", value_name = "PATH")]
    pub clues: Vec<PathBuf>,
    /// JSON report path; the text table goes next to it as `.txt`.
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Comma-separated cutoffs.
    #[arg(long, value_name = "K,K,...")]
    pub ks: Option<String>,
    #[arg(long, value_enum)]
    pub rouge_aggregation: Option<AggregationArg>,
    #[arg(long, value_enum)]
    pub coverage: Option<CoverageArg>,
    /// Include the first-hit rank of every query in the JSON report.
    #[arg(long)]
    pub per_query: bool,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[command(flatten)]
    pub retrieve: RetrieveArgs,
}
