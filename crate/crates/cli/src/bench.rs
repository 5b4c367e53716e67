//! Latency statistics for the retrieve path.

use std::fmt;
use std::time::Duration;

use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LatencyStats {
    pub threads: usize,
    pub queries: usize,
    pub mean_ms: f64,
    pub median_ms: f64,
    pub p95_ms: f64,
    pub wall_ms: f64,
}

fn ms(d: Duration) -> f64 {
    d.as_secs_f64() * 1e3
}

impl LatencyStats {
    /// Nearest-rank p95; median averages the two middle values.
    pub fn from_latencies(threads: usize, latencies: &[Duration], wall: Duration) -> Option<Self> {
        if latencies.is_empty() {
            return None;
        }
        let mut v: Vec<f64> = latencies.iter().copied().map(ms).collect();
        v.sort_by(f64::total_cmp);
        let n = v.len();
        let median = if n % 2 == 1 { v[n / 2] } else { (v[n / 2 - 1] + v[n / 2]) / 2.0 };
        let p95 = v[(0.95 * n as f64).ceil() as usize - 1];
        Some(Self {
            threads,
            queries: n,
            mean_ms: v.iter().sum::<f64>() / n as f64,
            median_ms: median,
            p95_ms: p95,
            wall_ms: ms(wall),
        })
    }
}

impl fmt::Display for LatencyStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "threads={:<3} queries={} mean={:.3}ms median={:.3}ms p95={:.3}ms wall={:.1}ms",
            self.threads, self.queries, self.mean_ms, self.median_ms, self.p95_ms, self.wall_ms
        )
    }
}
