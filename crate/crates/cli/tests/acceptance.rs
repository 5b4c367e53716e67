//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use cluefuse::clues::{cluster_clues, filter_clues, ingest_from_path, similarity_ratio, ContextualClue};
use cluefuse::eval::rouge::rouge_pair;
use cluefuse::eval::topk_accuracy;
use cluefuse::fusion::{fuse, Backfill, FusionConfig};
use cluefuse::index::{build_index, load_index, save_index, DocOrdinal};
use cluefuse::query::load_queries;
use cluefuse::trec::load_run;
use cluefuse::{Bm25Params, Passage, RankedList, ScoredPassage, TokenizerConfig};
use cluefuse_cli::pipeline::{retrieve_all, Inputs, RetrieveSettings};
use cluefuse_testkit::fixture::{self, FixtureFiles};
use cluefuse_testkit::oracles::{self, Fill};
use rand::seq::SliceRandom;
use rand::Rng;

type Outcome = Result<String, String>;

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn passages(docs: &[Vec<String>]) -> Vec<Passage> {
    docs.iter()
        .enumerate()
        .map(|(i, d)| Passage::new(format!("d{i:02}"), "", d.join(" ")))
        .collect()
}

fn bm25_oracle_equivalence() -> Outcome {
    let start = Instant::now();
    let mut rng = cluefuse_testkit::rng(1);
    let mut queries = 0;
    for c in 0..200 {
        let vocab = rng.random_range(1..=30);
        let docs = cluefuse_testkit::random_corpus(&mut rng, 50, vocab);
        let ids: Vec<String> = (0..docs.len()).map(|i| format!("d{i:02}")).collect();
        let params = Bm25Params::default();
        let index = build_index(passages(&docs), TokenizerConfig::default(), params).map_err(|e| e.to_string())?;
        for _ in 0..5 {
            let q = cluefuse_testkit::random_query(&mut rng, vocab + 3);
            let expected = oracles::rank(&ids, &oracles::bm25_scores(&docs, &q, params.k1, params.b));
            let got = index.search("q", &q.join(" "), docs.len());
            check(got.len() == expected.len(), || format!("corpus {c}: {} vs {} results", got.len(), expected.len()))?;
            for (g, e) in got.entries().iter().zip(&expected) {
                check(g.passage_id == e.0 && (g.score - e.1).abs() <= 1e-9, || {
                    format!("corpus {c} query {q:?}: got ({}, {}) expected ({}, {})", g.passage_id, g.score, e.0, e.1)
                })?;
            }
            queries += 1;
        }
    }
    let elapsed = start.elapsed();
    check(elapsed < Duration::from_secs(30), || format!("took {elapsed:?}"))?;
    Ok(format!("200 corpora, {queries} queries, {elapsed:.2?}"))
}

fn hand_computed_bm25() -> Outcome {
    let index = build_index(
        vec![Passage::new("d1", "", "cat sat"), Passage::new("d2", "", "dog ran")],
        TokenizerConfig::default(),
        Bm25Params { k1: 0.9, b: 0.4 },
    )
    .map_err(|e| e.to_string())?;
    let s = index.bm25_score(&["cat".to_string()], DocOrdinal(0)).map_err(|e| e.to_string())?;
    let err = (s - std::f64::consts::LN_2).abs();
    check(err <= 1e-12, || format!("score {s}, error {err:e}"))?;
    let top = index.search("q", "cat", 10);
    check(top.len() == 1 && top.entries()[0].passage_id == "d1", || format!("search gave {top:?}"))?;
    Ok(format!("d1 = {s:.15}, error {err:.1e}"))
}

fn fusion_oracle_equivalence() -> Outcome {
    let mut rng = cluefuse_testkit::rng(3);
    let mut max_err = 0f64;
    for i in 0..500 {
        let n = rng.random_range(1..=5);
        let lists: Vec<Vec<(String, f64)>> = (0..n)
            .map(|_| {
                let mut ids: Vec<usize> = (0..30).collect();
                ids.shuffle(&mut rng);
                let len = rng.random_range(0..=30);
                ids[..len]
                    .iter()
                    .map(|p| (format!("p{p:02}"), rng.random_range(0.0..40.0)))
                    .collect()
            })
            .collect();
        let raw: Vec<f64> = (0..n).map(|_| rng.random_range(0.01..1.0)).collect();
        let total: f64 = raw.iter().sum();
        let weights: Vec<f64> = raw.iter().map(|w| w / total).collect();
        let ranked: Vec<RankedList> = lists
            .iter()
            .map(|l| RankedList::from_unsorted("q", l.iter().map(|(p, s)| ScoredPassage::new(p.clone(), *s)).collect()))
            .collect::<Result<_, _>>()
            .map_err(|e| e.to_string())?;
        for (backfill, fill) in [(Backfill::MinScore, Fill::Min), (Backfill::Zero, Fill::Zero)] {
            let cfg = FusionConfig {
                backfill,
                output_size: None,
                ..FusionConfig::default()
            };
            let got = fuse(&ranked, &weights, &cfg).map_err(|e| e.to_string())?;
            let expected = oracles::fuse(&lists, &weights, fill);
            check(got.entries.len() == expected.len(), || format!("instance {i}: pool size differs"))?;
            for (g, e) in got.entries.entries().iter().zip(&expected) {
                let err = (g.score - e.1).abs();
                max_err = max_err.max(err);
                check(g.passage_id == e.0 && err <= 1e-9, || {
                    format!("instance {i} {backfill:?}: got ({}, {}) expected ({}, {})", g.passage_id, g.score, e.0, e.1)
                })?;
            }
        }
    }
    Ok(format!("500 instances x 2 backfill policies, max error {max_err:.1e}"))
}

/// Clues built from a few templates, each repeated with one digit changed.
fn planted_clues(rng: &mut impl Rng) -> Vec<ContextualClue> {
    let mut texts = std::collections::BTreeSet::new();
    let templates = rng.random_range(1..=4);
    for t in 0..templates {
        let year: u32 = rng.random_range(1000..10000);
        let base = format!("event {t} of the series happened in {year} near the river");
        texts.insert(base.clone());
        for _ in 0..rng.random_range(0..6) {
            let digits: Vec<usize> = base.char_indices().filter(|(_, c)| c.is_ascii_digit()).map(|(i, _)| i).collect();
            let pos = digits[rng.random_range(0..digits.len())];
            let mut edited = base.clone();
            let d = char::from(b'0' + rng.random_range(0..10u8));
            edited.replace_range(pos..pos + 1, &d.to_string());
            texts.insert(edited);
        }
    }
    texts
        .into_iter()
        .map(|t| ContextualClue::new(t, -rng.random_range(0.0..5.0f64)))
        .collect()
}

fn filtering_invariants() -> Outcome {
    let mut rng = cluefuse_testkit::rng(4);
    let (mut sets, mut merged) = (0, 0);
    for i in 0..300 {
        let clues = planted_clues(&mut rng);
        let clusters = cluster_clues(&clues, 0.8).map_err(|e| e.to_string())?;
        for c in &clusters {
            let best = c.members.iter().map(|m| m.logprob).fold(f64::NEG_INFINITY, f64::max);
            check(c.representative().logprob == best, || format!("set {i}: representative is not most likely"))?;
        }
        let kept = filter_clues(&clusters);
        check(kept.len() == clusters.len(), || format!("set {i}: one clue per cluster expected"))?;
        merged += usize::from(kept.len() < clues.len());
        let singles = cluster_clues(&clues, 1.0).map_err(|e| e.to_string())?;
        check(singles.len() == clues.len(), || format!("set {i}: cutoff 1.0 merged distinct clues"))?;
        let one = cluster_clues(&clues, 0.0).map_err(|e| e.to_string())?;
        check(one.len() == 1, || format!("set {i}: cutoff 0.0 gave {} clusters", one.len()))?;
        sets += 1;
    }
    Ok(format!("{sets} clue sets, {merged} with near-duplicates merged"))
}

fn similarity_reference() -> Outcome {
    let mut rng = cluefuse_testkit::rng(5);
    let alphabets: [&[char]; 3] = [&['a', 'b'], &['a', 'b', 'c', 'd', ' '], &['x', 'y', 'z', '1', '2', '3', 'é', ' ', 'q', 'r']];
    let mut max_err = 0f64;
    for i in 0..1000 {
        let alphabet = alphabets[i % alphabets.len()];
        let a = cluefuse_testkit::random_string(&mut rng, 60, alphabet);
        let b = cluefuse_testkit::random_string(&mut rng, 60, alphabet);
        let err = (similarity_ratio(&a, &b) - oracles::gestalt_ratio(&a, &b)).abs();
        max_err = max_err.max(err);
        check(err <= 1e-12, || format!("pair {a:?} / {b:?}: error {err:e}"))?;
    }
    Ok(format!("1000 pairs, max error {max_err:.1e}"))
}

fn tokens(rng: &mut impl Rng) -> Vec<String> {
    let n = rng.random_range(0..=20);
    (0..n).map(|_| format!("t{}", rng.random_range(0..6))).collect()
}

fn metric_oracles() -> Outcome {
    let mut rng = cluefuse_testkit::rng(6);
    for i in 0..500 {
        let c = tokens(&mut rng);
        let r = tokens(&mut rng);
        let got = rouge_pair(&c, &r);
        let (r1, r2, rl) = oracles::rouge(&c, &r);
        for (name, g, e) in [("ROUGE-1", got.r1_f, r1), ("ROUGE-2", got.r2_f, r2), ("ROUGE-L", got.rl_f, rl)] {
            check((g - e).abs() <= 1e-12, || format!("pair {i} {name}: {g} vs {e}"))?;
        }
    }

    let mut corpus: HashMap<String, String> = (0..200).map(|i| (format!("p{i}"), format!("filler passage {i}"))).collect();
    corpus.insert("gold".into(), "the answer appears here".into());
    let ks: Vec<usize> = (1..=200).collect();
    for run_no in 0..100 {
        let mut queries = Vec::new();
        let mut run = Vec::new();
        for q in 0..rng.random_range(1..30) {
            let qid = format!("q{q}");
            queries.push(cluefuse::QueryRecord::new(qid.clone(), "?", vec!["answer".into()]));
            let len = rng.random_range(0..200);
            let mut ids: Vec<String> = (0..len).map(|i| format!("p{i}")).collect();
            if len > 0 && rng.random_bool(0.7) {
                let pos = rng.random_range(0..len);
                ids[pos] = "gold".into();
            }
            let entries = ids.into_iter().enumerate().map(|(i, p)| ScoredPassage::new(p, (len - i) as f64)).collect();
            run.push(RankedList::from_unsorted(qid, entries).map_err(|e| e.to_string())?);
        }
        let acc = topk_accuracy(&run, &queries, &corpus, &ks).map_err(|e| e.to_string())?;
        let vals: Vec<f64> = acc.values().copied().collect();
        check(vals.windows(2).all(|w| w[0] <= w[1]), || format!("run {run_no}: accuracy decreases in k"))?;
    }
    Ok("500 ROUGE pairs, 100 runs monotone over k = 1..200".into())
}

fn fixture_index(files: &FixtureFiles) -> Result<cluefuse::InvertedIndex, String> {
    let passages = cluefuse::corpus::load_corpus(&files.corpus).map_err(|e| e.to_string())?;
    build_index(passages, TokenizerConfig::default(), Bm25Params::default()).map_err(|e| e.to_string())
}

fn filtered_vs_unfiltered(dir: &Path) -> Outcome {
    let fx = fixture::build(7);
    let files = fx.write_to(dir).map_err(|e| e.to_string())?;
    let index = fixture_index(&files)?;
    let queries = load_queries(&files.queries).map_err(|e| e.to_string())?;
    let inputs = Inputs::new(ingest_from_path(&files.clues, "context").map_err(|e| e.to_string())?, BTreeMap::new());
    let lookup: HashMap<String, Passage> = fx
        .passages
        .iter()
        .map(|p| (p.id.clone(), Passage::new(p.id.clone(), p.title.clone(), p.text.clone())))
        .collect();

    let mut results = Vec::new();
    for filter in [true, false] {
        let settings = RetrieveSettings {
            filter,
            ..RetrieveSettings::default()
        };
        let out = retrieve_all(&index, &queries, &inputs, &settings, 4).map_err(|e| e.to_string())?;
        let lists: Vec<&RankedList> = out.outcomes.iter().map(|o| &o.run.entries).collect();
        let acc = topk_accuracy(lists, &queries, &lookup, &[1, 5]).map_err(|e| e.to_string())?;
        results.push((acc[&1], acc[&5], out.searches()));
    }
    let [(f1, f5, fs), (u1, u5, us)] = [results[0], results[1]];
    let reduction = 1.0 - fs as f64 / us as f64;
    let summary = format!(
        "top-5 filtered {:.1} vs unfiltered {:.1}; top-1 {:.1} vs {:.1}; searches {fs} vs {us} ({:.0}% fewer)",
        f5 * 100.0,
        u5 * 100.0,
        f1 * 100.0,
        u1 * 100.0,
        reduction * 100.0
    );
    check(f5 >= u5, || summary.clone())?;
    check(reduction >= 0.5, || summary.clone())?;
    Ok(summary)
}

fn cluefuse_bin(args: &[&str]) -> Result<String, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_cluefuse"))
        .args(args)
        .output()
        .map_err(|e| e.to_string())?;
    if !out.status.success() {
        return Err(format!(
            "cluefuse {} exited {:?}: {}",
            args.join(" "),
            out.status.code(),
            String::from_utf8_lossy(&out.stderr)
        ));
    }
    Ok(String::from_utf8_lossy(&out.stdout).into_owned())
}

fn s(p: &Path) -> &str {
    p.to_str().expect("utf-8 temp path")
}

fn determinism(dir: &Path) -> Outcome {
    let files = fixture::build(8).write_to(dir).map_err(|e| e.to_string())?;
    let index = dir.join("fixture.cfix");
    cluefuse_bin(&["index", "--corpus", s(&files.corpus), "--index", s(&index)])?;
    let mut outputs = Vec::new();
    for threads in ["1", "8"] {
        let run = dir.join(format!("run-{threads}.trec"));
        cluefuse_bin(&[
            "--threads",
            threads,
            "retrieve",
            "--index",
            s(&index),
            "--queries",
            s(&files.queries),
            "--clues",
            s(&files.clues),
            "-o",
            s(&run),
        ])?;
        outputs.push(fs::read(&run).map_err(|e| e.to_string())?);
    }
    check(!outputs[0].is_empty(), || "empty run file".into())?;
    check(outputs[0] == outputs[1], || "run files differ between 1 and 8 threads".into())?;
    Ok(format!("{} bytes identical at 1 and 8 threads", outputs[0].len()))
}

fn round_trip(dir: &Path) -> Outcome {
    let mut rng = cluefuse_testkit::rng(9);
    let docs = cluefuse_testkit::random_corpus(&mut rng, 50, 30);
    let index = build_index(passages(&docs), TokenizerConfig::default(), Bm25Params::default()).map_err(|e| e.to_string())?;
    let path = dir.join("rt.cfix");
    save_index(&index, &path).map_err(|e| e.to_string())?;
    let loaded = load_index(&path).map_err(|e| e.to_string())?;
    for i in 0..100 {
        let q = cluefuse_testkit::random_query(&mut rng, 30).join(" ");
        let (a, b) = (index.search("q", &q, 50), loaded.search("q", &q, 50));
        check(a == b, || format!("query {i} {q:?} differs after reload"))?;
    }
    Ok("100 queries identical after save/load".into())
}

fn end_to_end(dir: &Path) -> Outcome {
    let start = Instant::now();
    let files = fixture::build(10).write_to(dir).map_err(|e| e.to_string())?;
    let index = dir.join("e2e.cfix");
    let run = dir.join("e2e.trec");
    let report = dir.join("e2e.json");
    cluefuse_bin(&["index", "--corpus", s(&files.corpus), "--index", s(&index)])?;
    cluefuse_bin(&[
        "retrieve",
        "--index",
        s(&index),
        "--queries",
        s(&files.queries),
        "--clues",
        s(&files.clues),
        "-o",
        s(&run),
    ])?;
    cluefuse_bin(&[
        "eval",
        "--run",
        s(&run),
        "--queries",
        s(&files.queries),
        "--corpus",
        s(&files.corpus),
        "--clues",
        s(&files.clues),
        "--report",
        s(&report),
    ])?;
    let elapsed = start.elapsed();

    let text = fs::read_to_string(&run).map_err(|e| e.to_string())?;
    for (n, line) in text.lines().enumerate() {
        let f: Vec<&str> = line.split_whitespace().collect();
        let ok = f.len() == 6 && f[1] == "Q0" && f[3].parse::<usize>().is_ok() && f[4].parse::<f64>().is_ok_and(f64::is_finite);
        check(ok, || format!("run line {} malformed: {line:?}", n + 1))?;
    }
    let parsed = load_run(&run).map_err(|e| e.to_string())?;
    check(parsed.len() == fixture::QUERIES, || format!("run covers {} queries", parsed.len()))?;
    let json: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&report).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
    let top100 = json["topk_accuracy"]["100"].as_f64().ok_or("report lacks Top-100")?;
    check(json["answer_coverage"].is_number(), || "report lacks coverage".into())?;
    check(elapsed < Duration::from_secs(60), || format!("took {elapsed:?}"))?;
    Ok(format!("{} run lines, Top-100 {:.1}, {elapsed:.2?}", text.lines().count(), top100 * 100.0))
}

fn main() {
    let dir = tempfile::tempdir().expect("temp dir");
    let sub = |name: &str| {
        let p = dir.path().join(name);
        fs::create_dir_all(&p).expect("temp subdir");
        p
    };
    let results: Vec<(&str, Outcome)> = vec![
        ("1  BM25 oracle equivalence", bm25_oracle_equivalence()),
        ("2  hand-computed BM25 value", hand_computed_bm25()),
        ("3  fusion oracle equivalence", fusion_oracle_equivalence()),
        ("4  filtering invariants", filtering_invariants()),
        ("5  similarity reference check", similarity_reference()),
        ("6  metric oracles", metric_oracles()),
        ("7  filtered vs unfiltered retrieval", filtered_vs_unfiltered(&sub("c7"))),
        ("8  thread-count determinism", determinism(&sub("c8"))),
        ("9  index round-trip", round_trip(&sub("c9"))),
        ("10 end-to-end pipeline", end_to_end(&sub("c10"))),
    ];
    let mut failed = 0;
    for (name, outcome) in &results {
        match outcome {
            Ok(detail) => println!("PASS  {name}: {detail}"),
            Err(why) => {
                failed += 1;
                println!("FAIL  {name}: {why}");
            }
        }
    }
    println!("{} of {} criteria passed", results.len() - failed, results.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
