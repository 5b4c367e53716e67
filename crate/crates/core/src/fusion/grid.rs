//! Exhaustive simplex grid search for interpolation weights.

use std::collections::{BTreeMap, HashMap, HashSet};

use super::{interpolate_runs, FusedRun, FusionError};

/// Relevant passage ids per query.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Qrels {
    relevant: HashMap<String, HashSet<String>>,
}

impl Qrels {
    pub fn new() -> Self {
        Self::default()
    }

    /// Registers a query; queries without relevant passages still count in
    /// the accuracy denominator.
    pub fn add_query(&mut self, qid: impl Into<String>) {
        self.relevant.entry(qid.into()).or_default();
    }

    pub fn add(&mut self, qid: impl Into<String>, passage_id: impl Into<String>) {
        self.relevant.entry(qid.into()).or_default().insert(passage_id.into());
    }

    pub fn num_queries(&self) -> usize {
        self.relevant.len()
    }

    pub fn is_relevant(&self, qid: &str, passage_id: &str) -> bool {
        self.relevant.get(qid).is_some_and(|s| s.contains(passage_id))
    }

    fn qids(&self) -> Vec<&str> {
        let mut q: Vec<&str> = self.relevant.keys().map(String::as_str).collect();
        q.sort_unstable();
        q
    }
}

/// Points of the probability simplex in `dims` dimensions with resolution
/// `1/m`, where `m = ceil(1 / step)`, in ascending lexicographic order.
pub fn simplex_grid(dims: usize, step: f64) -> Result<Vec<Vec<f64>>, FusionError> {
    if !(step > 0.0 && step <= 0.5) {
        return Err(FusionError::BadGridStep(step));
    }
    if !(2..=3).contains(&dims) {
        return Err(FusionError::RunCount(dims));
    }
    let m = (1.0 / step - 1e-9).ceil() as usize;
    let frac = |i: usize| i as f64 / m as f64;
    let mut out = Vec::new();
    for i in 0..=m {
        if dims == 2 {
            out.push(vec![frac(i), frac(m - i)]);
        } else {
            for j in 0..=(m - i) {
                out.push(vec![frac(i), frac(j), frac(m - i - j)]);
            }
        }
    }
    Ok(out)
}

const TUNING_DEPTH: usize = 20;

/// Picks the interpolation weights maximizing top-20 accuracy on `qrels`.
///
/// `runs` maps source tag → (qid → fused run). A query missing from a tag's
/// runs is treated as an empty run for that tag. Ties go to the
/// lexicographically smallest weight vector, with tags in sorted order.
pub fn grid_search_weights(
    runs: &BTreeMap<String, BTreeMap<String, FusedRun>>,
    qrels: &Qrels,
    grid_step: f64,
) -> Result<BTreeMap<String, f64>, FusionError> {
    let grid = simplex_grid(runs.len(), grid_step)?;
    let tags: Vec<&String> = runs.keys().collect();
    let qids = qrels.qids();

    let mut best: Option<(usize, &Vec<f64>)> = None;
    for point in &grid {
        let weights: BTreeMap<String, f64> = tags.iter().map(|&t| t.clone()).zip(point.iter().copied()).collect();
        let mut hits = 0;
        for &qid in &qids {
            let per_tag: BTreeMap<String, FusedRun> = tags
                .iter()
                .map(|&t| {
                    let run = runs[t].get(qid).cloned().unwrap_or_else(|| FusedRun::empty(qid));
                    (t.clone(), run)
                })
                .collect();
            let fused = interpolate_runs(&per_tag, &weights)?;
            if fused
                .entries
                .entries()
                .iter()
                .take(TUNING_DEPTH)
                .any(|e| qrels.is_relevant(qid, &e.passage_id))
            {
                hits += 1;
            }
        }
        if best.is_none_or(|(b, _)| hits > b) {
            best = Some((hits, point));
        }
    }
    let (_, point) = best.expect("grid is never empty");
    Ok(tags.into_iter().cloned().zip(point.iter().copied()).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ranked::{RankedList, ScoredPassage};

    fn run(qid: &str, items: &[(&str, f64)]) -> FusedRun {
        FusedRun::from_list(
            RankedList::from_unsorted(qid, items.iter().map(|&(p, s)| ScoredPassage::new(p, s)).collect()).unwrap(),
        )
    }

    #[test]
    fn grid_enumeration() {
        assert_eq!(simplex_grid(2, 0.5).unwrap(), vec![vec![0.0, 1.0], vec![0.5, 0.5], vec![1.0, 0.0]]);
        let g3 = simplex_grid(3, 0.25).unwrap();
        assert_eq!(g3.len(), 15);
        for p in &g3 {
            assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
        assert!(g3.windows(2).all(|w| w[0] < w[1]));
        // 0.3 does not divide 1; the grid refines to quarters.
        assert_eq!(simplex_grid(2, 0.3).unwrap().len(), 5);
    }

    #[test]
    fn rejects_bad_inputs() {
        let one: BTreeMap<String, BTreeMap<String, FusedRun>> =
            (0..4).map(|i| (format!("t{i}"), BTreeMap::new())).collect();
        assert_eq!(grid_search_weights(&one, &Qrels::new(), 0.5), Err(FusionError::RunCount(4)));
        assert_eq!(simplex_grid(2, 0.0), Err(FusionError::BadGridStep(0.0)));
        assert_eq!(simplex_grid(2, 0.6), Err(FusionError::BadGridStep(0.6)));
    }

    #[test]
    fn dominant_run_gets_all_weight() {
        // Run "a" puts the relevant passage first; run "b" buries it under 25
        // strong distractors, so any weight on "b" pushes it out of the top 20.
        let mut qrels = Qrels::new();
        let mut a = BTreeMap::new();
        let mut b = BTreeMap::new();
        for q in 0..3 {
            let qid = format!("q{q}");
            qrels.add(&qid, "gold");
            a.insert(qid.clone(), run(&qid, &[("gold", 1.0)]));
            let mut items: Vec<(String, f64)> = (0..25).map(|i| (format!("x{i}"), 100.0 + i as f64)).collect();
            items.push(("gold".into(), 0.0));
            let refs: Vec<(&str, f64)> = items.iter().map(|(p, s)| (p.as_str(), *s)).collect();
            b.insert(qid.clone(), run(&qid, &refs));
        }
        let runs: BTreeMap<_, _> = [("a".to_string(), a), ("b".to_string(), b)].into();
        let w = grid_search_weights(&runs, &qrels, 0.5).unwrap();
        assert_eq!(w["a"], 1.0);
        assert_eq!(w["b"], 0.0);
    }

    #[test]
    fn ties_prefer_smallest_vector() {
        let mut qrels = Qrels::new();
        qrels.add("q", "gold");
        let a: BTreeMap<_, _> = [("q".to_string(), run("q", &[("gold", 1.0)]))].into();
        let runs: BTreeMap<_, _> = [("a".to_string(), a.clone()), ("b".to_string(), a)].into();
        let w = grid_search_weights(&runs, &qrels, 0.5).unwrap();
        assert_eq!((w["a"], w["b"]), (0.0, 1.0));
    }
}
