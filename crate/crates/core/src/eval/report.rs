//! Evaluation reports, their JSON/text renderings, and run comparison.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::rouge::RougeScores;
use super::EvalError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryBreakdown {
    pub qid: String,
    /// 1-based rank of the first answer-bearing passage.
    pub first_hit_rank: Option<usize>,
}

/// Metrics for one run. Accuracies and coverage are fractions in [0, 1].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub run_tag: String,
    pub topk_accuracy: BTreeMap<usize, f64>,
    pub rouge: Option<RougeScores>,
    pub answer_coverage: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub per_query: Option<Vec<QueryBreakdown>>,
}

fn pct(v: f64) -> String {
    format!("{:.1}", v * 100.0)
}

impl EvalReport {
    pub fn new(run_tag: impl Into<String>, topk_accuracy: BTreeMap<usize, f64>) -> Self {
        Self {
            run_tag: run_tag.into(),
            topk_accuracy,
            rouge: None,
            answer_coverage: None,
            per_query: None,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Aligned plain-text table with percentages to one decimal.
    pub fn render_table(&self) -> String {
        let mut rows: Vec<(String, String)> = self
            .topk_accuracy
            .iter()
            .map(|(k, v)| (format!("Top-{k}"), pct(*v)))
            .collect();
        if let Some(r) = &self.rouge {
            rows.push(("ROUGE-1".into(), pct(r.r1_f)));
            rows.push(("ROUGE-2".into(), pct(r.r2_f)));
            rows.push(("ROUGE-L".into(), pct(r.rl_f)));
        }
        if let Some(c) = self.answer_coverage {
            rows.push(("Ans Cover".into(), pct(c)));
        }
        let width = rows.iter().map(|r| r.0.len()).max().unwrap_or(0).max("metric".len());
        let mut out = format!("run: {}\n", self.run_tag);
        let _ = writeln!(out, "{:<width$}  {:>6}", "metric", "%");
        for (name, value) in rows {
            let _ = writeln!(out, "{name:<width$}  {value:>6}");
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeltaRow {
    pub k: usize,
    pub a: f64,
    pub b: f64,
    /// `b - a`
    pub delta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeltaTable {
    pub run_a: String,
    pub run_b: String,
    pub rows: Vec<DeltaRow>,
}

impl DeltaTable {
    pub fn render(&self) -> String {
        let wa = self.run_a.len().max(6);
        let wb = self.run_b.len().max(6);
        let mut out = String::new();
        let _ = writeln!(out, "{:<8}  {:>wa$}  {:>wb$}  {:>7}", "k", self.run_a, self.run_b, "delta");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{:<8}  {:>wa$}  {:>wb$}  {:>+7.1}",
                format!("Top-{}", r.k),
                pct(r.a),
                pct(r.b),
                r.delta * 100.0
            );
        }
        out
    }
}

/// Per-k accuracy differences `b - a`.
pub fn compare_runs(a: &EvalReport, b: &EvalReport) -> Result<DeltaTable, EvalError> {
    if !a.topk_accuracy.keys().eq(b.topk_accuracy.keys()) {
        return Err(EvalError::KsMismatch {
            a: a.topk_accuracy.keys().copied().collect(),
            b: b.topk_accuracy.keys().copied().collect(),
        });
    }
    let rows = a
        .topk_accuracy
        .iter()
        .zip(&b.topk_accuracy)
        .map(|((&k, &va), (_, &vb))| DeltaRow { k, a: va, b: vb, delta: vb - va })
        .collect();
    Ok(DeltaTable {
        run_a: a.run_tag.clone(),
        run_b: b.run_tag.clone(),
        rows,
    })
}
