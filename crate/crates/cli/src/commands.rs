use std::collections::{BTreeMap, HashMap};
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context};
use cluefuse::clues::{ingest_from_endpoint, ingest_from_path, ClueMap, ClueSet, EndpointConfig, DEFAULT_SOURCE_TAG};
use cluefuse::corpus::load_corpus;
use cluefuse::eval::{
    accuracy_from_ranks, answer_coverage_with, compare_runs, first_hit_ranks, rouge_f_with, EvalReport,
    QueryBreakdown, RougeScores,
};
use cluefuse::index::{build_index, load_index, save_index};
use cluefuse::query::load_queries;
use cluefuse::trec::{load_run, Run};
use cluefuse::{Passage, QueryRecord, RankedList};

use crate::bench::LatencyStats;
use crate::cli::{BenchArgs, EvalArgs, IndexArgs, RetrieveArgs};
use crate::config::{parse_ks, parse_tagged, parse_weights, usage, PipelineConfig};
use crate::pipeline::{retrieve_all, Inputs, RetrieveOutput, RetrieveSettings};

pub fn index(mut cfg: PipelineConfig, args: IndexArgs) -> anyhow::Result<()> {
    cfg.corpus = args.corpus.or(cfg.corpus);
    cfg.index = args.index.or(cfg.index);
    if let Some(k1) = args.k1 {
        cfg.bm25.k1 = k1;
    }
    if let Some(b) = args.b {
        cfg.bm25.b = b;
    }
    if let Some(s) = args.stemming {
        cfg.tokenizer.stemming = s.into();
    }
    if args.stopwords {
        cfg.tokenizer.stopword_removal = true;
    }
    cfg.validate()?;
    let corpus_path = cfg.require(&cfg.corpus, "corpus")?;
    let index_path = cfg.require(&cfg.index, "index")?;

    let passages = load_corpus(corpus_path)?;
    let index = build_index(passages, cfg.tokenizer, cfg.bm25)?;
    save_index(&index, index_path)?;
    println!(
        "N={} vocab={} avgdl={:.3}",
        index.num_docs(),
        index.vocabulary_size(),
        index.avgdl()
    );
    log::info!("wrote {}", index_path.display());
    Ok(())
}

fn apply_retrieve_flags(cfg: &mut PipelineConfig, args: &RetrieveArgs) -> anyhow::Result<()> {
    if let Some(p) = &args.index {
        cfg.index = Some(p.clone());
    }
    if let Some(p) = &args.queries {
        cfg.queries = Some(p.clone());
    }
    if let Some(p) = &args.output {
        cfg.run = Some(p.clone());
    }
    if !args.clues.is_empty() {
        cfg.clues = BTreeMap::new();
        for c in &args.clues {
            let (tag, path) = parse_tagged(c, DEFAULT_SOURCE_TAG);
            if cfg.clues.insert(tag.clone(), PathBuf::from(path)).is_some() {
                return Err(usage(format!("clue tag {tag:?} given twice")));
            }
        }
    }
    if !args.external_runs.is_empty() {
        cfg.external_runs = BTreeMap::new();
        for r in &args.external_runs {
            let (tag, path) = r
                .split_once('=')
                .filter(|(t, _)| !t.is_empty())
                .ok_or_else(|| usage(format!("external run {r:?} is not TAG=PATH")))?;
            cfg.external_runs.insert(tag.to_string(), PathBuf::from(path));
        }
    }
    if let Some(url) = &args.endpoint {
        let mut ep = cfg.endpoint.clone().unwrap_or(crate::config::EndpointSection {
            url: String::new(),
            timeout_secs: None,
            num_candidates: None,
        });
        ep.url = url.clone();
        cfg.endpoint = Some(ep);
    }
    if args.no_filter {
        cfg.filter = false;
    }
    cfg.question_only = args.question_only;
    if let Some(c) = args.cutoff {
        cfg.cluster.cutoff = c;
    }
    if let Some(k) = args.k {
        cfg.fusion.per_clue_k = k;
    }
    if let Some(n) = args.output_size {
        cfg.fusion.output_size = Some(n);
    }
    if let Some(b) = args.backfill {
        cfg.fusion.backfill = b.into();
    }
    if let Some(w) = &args.weights {
        cfg.fusion.interpolation_weights = parse_weights(w)?;
    }
    if let Some(m) = args.metric {
        cfg.cluster.metric = m.into();
    }
    if args.length_normalize {
        cfg.length_normalize = true;
    }
    cfg.validate()
}

fn settings(cfg: &PipelineConfig) -> RetrieveSettings {
    RetrieveSettings {
        cluster: cfg.cluster,
        filter: cfg.filter,
        question_only: cfg.question_only,
        length_normalize: cfg.length_normalize,
        fusion: cfg.fusion.clone(),
    }
}

fn merge_clues(into: &mut ClueMap, more: ClueMap) {
    for (qid, set) in more {
        into.entry(qid.clone())
            .or_insert_with(|| ClueSet::new(qid, Vec::new()))
            .clues
            .extend(set.clues);
    }
}

fn load_clue_files(files: &BTreeMap<String, PathBuf>) -> anyhow::Result<ClueMap> {
    let mut clues = ClueMap::new();
    for (tag, path) in files {
        merge_clues(&mut clues, ingest_from_path(path, tag)?);
    }
    Ok(clues)
}

/// Loads the index, queries, clues and external runs named by `cfg`.
fn load_inputs(cfg: &PipelineConfig) -> anyhow::Result<(cluefuse::InvertedIndex, Vec<QueryRecord>, Inputs)> {
    let index_path = cfg.require(&cfg.index, "index")?;
    let queries_path = cfg.require(&cfg.queries, "queries")?;
    let index = load_index(index_path).with_context(|| format!("loading index {}", index_path.display()))?;
    let queries = load_queries(queries_path)?;
    if queries.is_empty() {
        bail!("query file {} is empty", queries_path.display());
    }

    let mut clues = ClueMap::new();
    if !cfg.question_only {
        clues = load_clue_files(&cfg.clues)?;
        if let Some(ep) = &cfg.endpoint {
            let mut ec = EndpointConfig::new(ep.url.clone());
            if let Some(t) = ep.timeout_secs {
                ec.timeout = std::time::Duration::from_secs(t);
            }
            if let Some(n) = ep.num_candidates {
                ec.num_candidates = n;
            }
            let fetched = ingest_from_endpoint(&ec, queries.iter().map(|q| (q.qid.as_str(), q.question.as_str())))?;
            merge_clues(&mut clues, fetched);
        }
        if cfg.clues.is_empty() && cfg.endpoint.is_none() && cfg.external_runs.is_empty() {
            log::warn!("no clue files or endpoint given; every query uses the question alone");
        }
    }
    let known: std::collections::HashSet<&str> = queries.iter().map(|q| q.qid.as_str()).collect();
    let unknown: Vec<String> = clues.keys().filter(|q| !known.contains(q.as_str())).cloned().collect();
    for qid in unknown {
        log::warn!("clues for unknown query {qid:?} ignored");
        clues.shift_remove(&qid);
    }

    let mut external = BTreeMap::new();
    if !cfg.question_only {
        for (tag, path) in &cfg.external_runs {
            external.insert(tag.clone(), load_run(path)?);
        }
    }
    Ok((index, queries, Inputs::new(clues, external)))
}

fn write_run(path: &Path, output: &RetrieveOutput, tag: &str) -> anyhow::Result<()> {
    let file = File::create(path).with_context(|| format!("cannot create run file {}", path.display()))?;
    let mut w = BufWriter::new(file);
    output.write_trec(&mut w, tag)?;
    w.flush()?;
    Ok(())
}

pub fn retrieve(mut cfg: PipelineConfig, args: RetrieveArgs) -> anyhow::Result<()> {
    apply_retrieve_flags(&mut cfg, &args)?;
    let out_path = cfg.require(&cfg.run, "output run")?.to_path_buf();
    let (index, queries, inputs) = load_inputs(&cfg)?;
    let output = retrieve_all(&index, &queries, &inputs, &settings(&cfg), cfg.threads)?;
    write_run(&out_path, &output, &args.run_tag)?;
    println!(
        "queries={} searches={} fallbacks={} run={}",
        output.outcomes.len(),
        output.searches(),
        output.fallbacks(),
        out_path.display()
    );
    Ok(())
}

pub fn bench(mut cfg: PipelineConfig, args: BenchArgs) -> anyhow::Result<()> {
    let args = args.retrieve;
    apply_retrieve_flags(&mut cfg, &args)?;
    let (index, queries, inputs) = load_inputs(&cfg)?;
    let settings = settings(&cfg);

    let mut outputs = Vec::new();
    for threads in [1, cfg.threads] {
        let start = Instant::now();
        let out = retrieve_all(&index, &queries, &inputs, &settings, threads)?;
        let wall = start.elapsed();
        let lat: Vec<_> = out.outcomes.iter().map(|o| o.latency).collect();
        let stats = LatencyStats::from_latencies(threads, &lat, wall).context("no queries to time")?;
        println!("{stats}");
        outputs.push(out.to_trec_string(&args.run_tag));
    }
    if outputs[0] != outputs[1] {
        bail!("runs differ between 1 and {} threads", cfg.threads);
    }
    println!("identical_output=true");
    if let Some(p) = &cfg.run {
        fs::write(p, &outputs[0]).with_context(|| format!("cannot write run file {}", p.display()))?;
    }
    Ok(())
}

fn run_tag(path: &Path) -> String {
    path.file_stem()
        .map_or_else(|| path.display().to_string(), |s| s.to_string_lossy().into_owned())
}

struct EvalContext {
    queries: Vec<QueryRecord>,
    corpus: HashMap<String, Passage>,
    clues: Option<ClueMap>,
}

fn evaluate(ctx: &EvalContext, cfg: &PipelineConfig, path: &Path, per_query: bool) -> anyhow::Result<EvalReport> {
    let run: Run = load_run(path)?;
    let lists: BTreeMap<&str, &RankedList> = run.iter().map(|(q, l)| (q.as_str(), l)).collect();
    let ranks = first_hit_ranks(&lists, &ctx.queries, &ctx.corpus).with_context(|| format!("evaluating {}", path.display()))?;
    let mut report = EvalReport::new(run_tag(path), accuracy_from_ranks(&ranks, &cfg.ks));
    if per_query {
        report.per_query = Some(
            ranks
                .into_iter()
                .map(|(qid, first_hit_rank)| QueryBreakdown { qid, first_hit_rank })
                .collect(),
        );
    }
    if let Some(clues) = &ctx.clues {
        report.answer_coverage = Some(answer_coverage_with(clues, &ctx.queries, cfg.coverage)?);
        report.rouge = mean_rouge(clues, &ctx.queries, cfg)?;
    }
    Ok(report)
}

/// ROUGE of each query's clues against its reference contexts, averaged
/// over queries that have both.
fn mean_rouge(clues: &ClueMap, queries: &[QueryRecord], cfg: &PipelineConfig) -> anyhow::Result<Option<RougeScores>> {
    let mut sum = RougeScores::default();
    let mut n = 0usize;
    for q in queries.iter().filter(|q| !q.contexts.is_empty()) {
        let Some(set) = clues.get(&q.qid).filter(|s| !s.clues.is_empty()) else {
            continue;
        };
        let cands: Vec<String> = set.clues.iter().map(|c| c.text.clone()).collect();
        let r = rouge_f_with(&cands, &q.contexts, cfg.rouge_aggregation)?;
        sum.r1_f += r.r1_f;
        sum.r2_f += r.r2_f;
        sum.rl_f += r.rl_f;
        n += 1;
    }
    Ok((n > 0).then(|| RougeScores {
        r1_f: sum.r1_f / n as f64,
        r2_f: sum.r2_f / n as f64,
        rl_f: sum.rl_f / n as f64,
    }))
}

fn text_path(json: &Path) -> PathBuf {
    json.with_extension("txt")
}

fn write_report(path: &Path, json: &str, table: &str) -> anyhow::Result<()> {
    fs::write(path, json).with_context(|| format!("cannot write report {}", path.display()))?;
    let txt = text_path(path);
    fs::write(&txt, table).with_context(|| format!("cannot write report {}", txt.display()))?;
    Ok(())
}

pub fn eval(mut cfg: PipelineConfig, args: EvalArgs) -> anyhow::Result<()> {
    cfg.queries = args.queries.or(cfg.queries);
    cfg.corpus = args.corpus.or(cfg.corpus);
    cfg.report = args.report.or(cfg.report);
    if let Some(ks) = &args.ks {
        cfg.ks = parse_ks(ks)?;
    }
    if let Some(a) = args.rouge_aggregation {
        cfg.rouge_aggregation = a.into();
    }
    if let Some(c) = args.coverage {
        cfg.coverage = c.into();
    }
    if !args.clues.is_empty() {
        cfg.clues = args
            .clues
            .iter()
            .enumerate()
            .map(|(i, p)| (format!("{DEFAULT_SOURCE_TAG}{i}"), p.clone()))
            .collect();
    }
    cfg.validate()?;
    let runs: Vec<PathBuf> = match (args.run, args.compare) {
        (Some(r), None) => vec![r],
        (None, Some(pair)) => pair,
        (None, None) => match &cfg.run {
            Some(r) => vec![r.clone()],
            None => return Err(usage("no run given: use --run PATH or --compare RUN_A RUN_B")),
        },
        (Some(_), Some(_)) => unreachable!("clap rejects --run with --compare"),
    };

    let queries = load_queries(cfg.require(&cfg.queries, "queries")?)?;
    let corpus: HashMap<String, Passage> = load_corpus(cfg.require(&cfg.corpus, "corpus")?)?
        .into_iter()
        .map(|p| (p.id.clone(), p))
        .collect();
    let clues = if cfg.clues.is_empty() {
        None
    } else {
        let mut map = load_clue_files(&cfg.clues)?;
        for q in &queries {
            map.entry(q.qid.clone()).or_insert_with(|| ClueSet::new(q.qid.clone(), Vec::new()));
        }
        Some(map)
    };
    let ctx = EvalContext { queries, corpus, clues };

    let reports = runs
        .iter()
        .map(|p| evaluate(&ctx, &cfg, p, args.per_query))
        .collect::<anyhow::Result<Vec<_>>>()?;

    if let [a, b] = reports.as_slice() {
        let delta = compare_runs(a, b)?;
        let table = format!("{}\n{}\n{}", a.render_table(), b.render_table(), delta.render());
        print!("{table}");
        if let Some(p) = &cfg.report {
            let json = serde_json::to_string_pretty(&serde_json::json!({
                "runs": [a, b],
                "delta": delta,
            }))?;
            write_report(p, &json, &table)?;
        }
    } else {
        let report = &reports[0];
        let table = report.render_table();
        print!("{table}");
        let path = cfg.report.clone().unwrap_or_else(|| runs[0].with_extension("eval.json"));
        write_report(&path, &report.to_json(), &table)?;
    }
    Ok(())
}
