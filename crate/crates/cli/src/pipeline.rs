//! Per-query retrieval: filter clues, search per clue, fuse, interpolate.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{self, Write};
use std::time::{Duration, Instant};

use anyhow::Context;
use cluefuse::clues::{
    cluster_clues_with, filter_clues, normalize_weights, normalize_weights_length_normalized, ClueMap, ClueSet,
    ClusterConfig,
};
use cluefuse::fusion::{fuse, interpolate_runs, retrieve_per_clue, FusedRun, FusionConfig};
use cluefuse::trec::{write_ranked_list, Run};
use cluefuse::{InvertedIndex, QueryRecord};
use rayon::prelude::*;

#[derive(Debug, Clone)]
pub struct RetrieveSettings {
    pub cluster: ClusterConfig,
    pub filter: bool,
    pub question_only: bool,
    pub length_normalize: bool,
    pub fusion: FusionConfig,
}

impl Default for RetrieveSettings {
    fn default() -> Self {
        Self {
            cluster: ClusterConfig::default(),
            filter: true,
            question_only: false,
            length_normalize: false,
            fusion: FusionConfig::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct QueryOutcome {
    pub run: FusedRun,
    pub searches: usize,
    /// Tags whose clue set was empty and fell back to the bare question.
    pub fallbacks: Vec<String>,
    pub latency: Duration,
}

#[derive(Debug, Clone)]
pub struct RetrieveOutput {
    pub outcomes: Vec<QueryOutcome>,
}

impl RetrieveOutput {
    pub fn searches(&self) -> usize {
        self.outcomes.iter().map(|o| o.searches).sum()
    }

    pub fn fallbacks(&self) -> usize {
        self.outcomes.iter().filter(|o| !o.fallbacks.is_empty()).count()
    }

    pub fn write_trec<W: Write>(&self, out: &mut W, run_tag: &str) -> io::Result<()> {
        for o in &self.outcomes {
            write_ranked_list(out, &o.run.entries, run_tag)?;
        }
        Ok(())
    }

    pub fn to_trec_string(&self, run_tag: &str) -> String {
        let mut buf = Vec::new();
        self.write_trec(&mut buf, run_tag).expect("writing to memory");
        String::from_utf8(buf).expect("run output is UTF-8")
    }
}

/// Everything `retrieve` needs besides the index and queries.
#[derive(Debug, Clone, Default)]
pub struct Inputs {
    pub clues: ClueMap,
    /// Tags every query is fused over. Clue tags seen in the input plus
    /// external run tags.
    pub clue_tags: BTreeSet<String>,
    pub external: BTreeMap<String, Run>,
}

impl Inputs {
    pub fn new(clues: ClueMap, external: BTreeMap<String, Run>) -> Self {
        let clue_tags = clues
            .values()
            .flat_map(|s| s.clues.iter().map(|c| c.source_tag.clone()))
            .collect();
        Self {
            clues,
            clue_tags,
            external,
        }
    }

    pub fn all_tags(&self) -> BTreeSet<String> {
        self.clue_tags.iter().chain(self.external.keys()).cloned().collect()
    }
}

fn clue_run(
    index: &InvertedIndex,
    query: &QueryRecord,
    set: &ClueSet,
    settings: &RetrieveSettings,
) -> anyhow::Result<(FusedRun, usize)> {
    let clues = if settings.filter {
        let clusters = cluster_clues_with(&set.clues, &settings.cluster)
            .with_context(|| format!("query {}", query.qid))?;
        filter_clues(&clusters)
    } else {
        set.clues.clone()
    };
    let weights = if settings.length_normalize {
        normalize_weights_length_normalized(&clues)
    } else {
        normalize_weights(&clues)
    }
    .with_context(|| format!("query {}", query.qid))?;
    let kept = ClueSet::new(query.qid.clone(), clues);
    let lists = retrieve_per_clue(index, &query.question, &kept, settings.fusion.per_clue_k)
        .with_context(|| format!("query {}", query.qid))?;
    let untruncated = FusionConfig {
        output_size: None,
        ..settings.fusion.clone()
    };
    let run = fuse(&lists, &weights, &untruncated).with_context(|| format!("query {}", query.qid))?;
    Ok((run, lists.len()))
}

/// Runs the full path for one query.
pub fn retrieve_query(
    index: &InvertedIndex,
    query: &QueryRecord,
    inputs: &Inputs,
    settings: &RetrieveSettings,
) -> anyhow::Result<QueryOutcome> {
    let start = Instant::now();
    let depth = settings.fusion.output_size.unwrap_or(settings.fusion.per_clue_k);
    if settings.question_only {
        let list = index.search(&query.qid, &query.question, depth);
        return Ok(QueryOutcome {
            run: FusedRun::from_list(list),
            searches: 1,
            fallbacks: Vec::new(),
            latency: start.elapsed(),
        });
    }

    let mut runs = BTreeMap::new();
    let mut searches = 0;
    let mut fallbacks = Vec::new();
    let set = inputs.clues.get(&query.qid);
    for tag in &inputs.clue_tags {
        let subset = set.map(|s| s.with_tag(tag)).filter(|s| !s.clues.is_empty());
        let run = match subset {
            Some(s) => {
                let (run, n) = clue_run(index, query, &s, settings)?;
                searches += n;
                run
            }
            None => {
                log::warn!("query {}: no {tag:?} clues, using the question alone", query.qid);
                fallbacks.push(tag.clone());
                searches += 1;
                FusedRun::from_list(index.search(&query.qid, &query.question, settings.fusion.per_clue_k))
            }
        };
        runs.insert(tag.clone(), run);
    }
    for (tag, ext) in &inputs.external {
        let run = match ext.get(&query.qid) {
            Some(list) => FusedRun::from_list(list.clone()),
            None => {
                log::warn!("query {}: external run {tag:?} has no results", query.qid);
                FusedRun::empty(query.qid.clone())
            }
        };
        runs.insert(tag.clone(), run);
    }
    if runs.is_empty() {
        log::warn!("query {}: no clues at all, using the question alone", query.qid);
        fallbacks.push(String::new());
        searches += 1;
        runs.insert(
            String::new(),
            FusedRun::from_list(index.search(&query.qid, &query.question, depth)),
        );
    }

    let mut run = if runs.len() == 1 {
        runs.into_values().next().expect("one run")
    } else {
        let weights = if settings.fusion.interpolation_weights.is_empty() {
            let w = 1.0 / runs.len() as f64;
            runs.keys().map(|t| (t.clone(), w)).collect()
        } else {
            settings.fusion.interpolation_weights.clone()
        };
        interpolate_runs(&runs, &weights).with_context(|| format!("query {}", query.qid))?
    };
    if let Some(k) = settings.fusion.output_size {
        run.truncate(k);
    }
    Ok(QueryOutcome {
        run,
        searches,
        fallbacks,
        latency: start.elapsed(),
    })
}

/// Processes every query on a pool of `threads` workers. Outcomes come back
/// in query order whatever the completion order.
pub fn retrieve_all(
    index: &InvertedIndex,
    queries: &[QueryRecord],
    inputs: &Inputs,
    settings: &RetrieveSettings,
    threads: usize,
) -> anyhow::Result<RetrieveOutput> {
    if !settings.fusion.interpolation_weights.is_empty() && !settings.question_only {
        let tags = inputs.all_tags();
        let given: BTreeSet<String> = settings.fusion.interpolation_weights.keys().cloned().collect();
        if tags != given {
            anyhow::bail!(crate::config::UsageError(format!(
                "interpolation weights cover tags {given:?} but the inputs provide {tags:?}"
            )));
        }
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .context("cannot start worker pool")?;
    let outcomes = pool.install(|| {
        queries
            .par_iter()
            .map(|q| retrieve_query(index, q, inputs, settings))
            .collect::<anyhow::Result<Vec<_>>>()
    })?;
    Ok(RetrieveOutput { outcomes })
}
