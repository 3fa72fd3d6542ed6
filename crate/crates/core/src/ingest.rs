//! Transition-log aggregation and frequency-threshold binarization.
//!
//! Raw logs are streams of ordered `(from, to)` pairs.  Aggregation tallies
//! `n_in(f)` (occurrences of `f` as an input), `n_pair(f, g)` (occurrences of
//! the ordered pair), and the relative frequency `r(f, g) = n_pair / n_in`.
//! Binarization keeps an edge only when its input is statistically stable
//! (`n_in >= 2`) and its relative frequency clears the threshold (`r > p0`),
//! which prunes one-off transitions before any geometry is computed.

use std::collections::BTreeMap;
use std::io::BufRead;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::relation::{CrispEnvelope, FuzzyKernel, NodeId, NodeTable};
use crate::scalar::Scalar;

/// Resolution of the threshold grid: `p0` is snapped to an integer number of
/// billionths so the boundary case `r == p0` is decided in exact integer
/// arithmetic.
pub const P0_TICKS_PER_UNIT: u64 = 1_000_000_000;

/// Exact pair statistics of a transition log prior to binarization.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct AggregatedLog {
    nodes: NodeTable,
    n_in: Vec<u64>,
    pairs: BTreeMap<(u32, u32), u64>,
    total_pairs: u64,
}

impl AggregatedLog {
    pub fn new() -> Self {
        Self::default()
    }

    /// Record one observed pair with multiplicity `weight`.
    pub fn add_pair(&mut self, from: &str, to: &str, weight: u64) -> Result<()> {
        if weight == 0 {
            return Err(Error::InvalidRecord(
                "pair weight must be a positive integer".into(),
            ));
        }
        let f = self.intern(from)?;
        let g = self.intern(to)?;
        self.n_in[f.index()] += weight;
        *self.pairs.entry((f.0, g.0)).or_insert(0) += weight;
        self.total_pairs += weight;
        Ok(())
    }

    fn intern(&mut self, label: &str) -> Result<NodeId> {
        let id = self.nodes.intern(label)?;
        if id.index() == self.n_in.len() {
            self.n_in.push(0);
        }
        Ok(id)
    }

    pub fn nodes(&self) -> &NodeTable {
        &self.nodes
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn total_pairs(&self) -> u64 {
        self.total_pairs
    }

    pub fn n_in(&self, f: NodeId) -> u64 {
        self.n_in[f.index()]
    }

    pub fn n_pair(&self, f: NodeId, g: NodeId) -> u64 {
        self.pairs.get(&(f.0, g.0)).copied().unwrap_or(0)
    }

    /// Relative frequency `r(f, g)`, or `None` when `f` never appears as an
    /// input.
    pub fn relative_frequency(&self, f: NodeId, g: NodeId) -> Option<f64> {
        let n_in = self.n_in(f);
        if n_in == 0 {
            return None;
        }
        Some(self.n_pair(f, g) as f64 / n_in as f64)
    }

    pub fn pair_entries(&self) -> impl Iterator<Item = (NodeId, NodeId, u64)> + '_ {
        self.pairs
            .iter()
            .map(|(&(f, g), &w)| (NodeId(f), NodeId(g), w))
    }

    /// Check the defining consistency `n_in(f) == sum_g n_pair(f, g)`.
    pub fn is_consistent(&self) -> bool {
        let mut sums = vec![0u64; self.nodes.len()];
        for (&(f, _), &w) in &self.pairs {
            sums[f as usize] += w;
        }
        sums == self.n_in
    }
}

#[derive(Debug, Deserialize)]
struct LogRecord {
    from: String,
    to: String,
    #[serde(default = "default_weight")]
    weight: u64,
    // Accepted and ignored: pairs are aggregated across runs.
    #[serde(default)]
    #[allow(dead_code)]
    run: Option<String>,
}

fn default_weight() -> u64 {
    1
}

/// One skipped line of a dirty log.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LineError {
    pub line: usize,
    pub message: String,
}

/// Outcome summary of a line-delimited ingestion pass.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct IngestReport {
    pub lines: usize,
    pub records: usize,
    pub errors: Vec<LineError>,
}

/// Aggregate a JSONL transition log.  A malformed line is reported with its
/// line number and skipped; the run continues.
pub fn aggregate_jsonl<R: BufRead>(reader: R) -> Result<(AggregatedLog, IngestReport)> {
    let mut log = AggregatedLog::new();
    let mut report = IngestReport::default();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        report.lines += 1;
        let parsed: std::result::Result<LogRecord, _> = serde_json::from_str(&line);
        let outcome = parsed
            .map_err(|e| e.to_string())
            .and_then(|rec| {
                log.add_pair(&rec.from, &rec.to, rec.weight)
                    .map_err(|e| e.to_string())
            });
        match outcome {
            Ok(()) => report.records += 1,
            Err(message) => report.errors.push(LineError {
                line: lineno,
                message,
            }),
        }
    }
    Ok((log, report))
}

/// Frequency-threshold binarization: edge `(f, g)` is present iff
/// `n_in(f) >= 2` and `r(f, g) > p0`.  The comparison runs in exact integer
/// arithmetic after snapping `p0` to the 1e-9 grid, so the excluded boundary
/// `r == p0` is unambiguous.
pub fn binarize_threshold(log: &AggregatedLog, p0: f64) -> Result<CrispEnvelope> {
    if !(0.0..1.0).contains(&p0) {
        return Err(Error::InvalidThreshold(p0));
    }
    let ticks = (p0 * P0_TICKS_PER_UNIT as f64).round() as u64;
    let edges = log
        .pair_entries()
        .filter(|&(f, _, w)| {
            let n_in = log.n_in(f);
            n_in >= 2 && (w as u128) * (P0_TICKS_PER_UNIT as u128) > (ticks as u128) * (n_in as u128)
        })
        .map(|(f, g, _)| (f, g));
    CrispEnvelope::from_edges(log.nodes().clone(), edges)
}

/// Pre-binarization fuzzy view of a log: `mu(f, g) = r(f, g)` on rows with
/// `n_in >= 2`; unstable rows (`n_in <= 1`) stay empty.
pub fn kernel_from_log<S: Scalar>(log: &AggregatedLog) -> FuzzyKernel<S> {
    let mut builder = FuzzyKernel::<S>::builder(log.nodes().clone());
    for (f, g, w) in log.pair_entries() {
        let n_in = log.n_in(f);
        if n_in < 2 {
            continue;
        }
        let mu = S::from_u64(w).unwrap() / S::from_u64(n_in).unwrap();
        builder
            .insert(f, g, mu)
            .expect("aggregated pairs are unique and frequencies lie in (0, 1]");
    }
    builder.finish()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn log_from(pairs: &[(&str, &str)]) -> AggregatedLog {
        let mut log = AggregatedLog::new();
        for &(f, g) in pairs {
            log.add_pair(f, g, 1).unwrap();
        }
        log
    }

    #[test]
    fn direct_counting() {
        let log = log_from(&[("a", "b"), ("a", "b"), ("a", "c")]);
        let a = log.nodes().lookup("a").unwrap();
        let b = log.nodes().lookup("b").unwrap();
        assert_eq!(log.n_in(a), 3);
        assert_eq!(log.n_pair(a, b), 2);
        assert!((log.relative_frequency(a, b).unwrap() - 2.0 / 3.0).abs() < 1e-15);
        assert!(log.is_consistent());
    }

    #[test]
    fn empty_stream_yields_zero_log() {
        let log = AggregatedLog::new();
        assert_eq!(log.total_pairs(), 0);
        assert_eq!(log.node_count(), 0);
        assert!(log.is_consistent());
    }

    #[test]
    fn weighted_pairs_sum_to_the_expected_cardinality() {
        // A synthetic log with the same pair cardinality as a realistic
        // multi-run trace: 1000 distinct pairs whose weights sum to 34,651.
        let mut log = AggregatedLog::new();
        for i in 0..999u64 {
            log.add_pair(&format!("s{i}"), &format!("s{}", i + 1), 34).unwrap();
        }
        log.add_pair("s999", "s1000", 34651 - 999 * 34).unwrap();
        assert_eq!(log.total_pairs(), 34651);
        assert!(log.is_consistent());
    }

    #[test]
    fn jsonl_ingestion_recovers_from_bad_lines() {
        let data = concat!(
            "{\"from\": \"a\", \"to\": \"b\"}\n",
            "not json at all\n",
            "\n",
            "{\"from\": \"a\", \"to\": \"b\", \"weight\": 2, \"run\": \"r1\"}\n",
            "{\"from\": \"a\", \"to\": \"c\", \"weight\": 0}\n",
        );
        let (log, report) = aggregate_jsonl(data.as_bytes()).unwrap();
        assert_eq!(report.records, 2);
        assert_eq!(report.errors.len(), 2);
        assert_eq!(report.errors[0].line, 2);
        assert_eq!(report.errors[1].line, 5);
        assert_eq!(log.total_pairs(), 3);
    }

    #[test]
    fn binarize_drops_unstable_inputs() {
        // n_in(f) = 1 with r = 1.0 stays out regardless of the threshold.
        let log = log_from(&[("f", "g")]);
        let env = binarize_threshold(&log, 0.1).unwrap();
        assert_eq!(env.edge_count(), 0);
    }

    #[test]
    fn binarize_excludes_the_boundary() {
        // n_in = 10, n_pair = 1: r = 0.1 == p0 -> excluded.
        let mut log = AggregatedLog::new();
        log.add_pair("f", "g", 1).unwrap();
        log.add_pair("f", "h", 9).unwrap();
        let env = binarize_threshold(&log, 0.1).unwrap();
        let f = log.nodes().lookup("f").unwrap();
        let g = log.nodes().lookup("g").unwrap();
        let h = log.nodes().lookup("h").unwrap();
        assert!(!env.has_edge(f, g));
        assert!(env.has_edge(f, h));
    }

    #[test]
    fn binarize_keeps_stable_frequent_pairs() {
        // n_in = 10, n_pair = 5: passes both guards at p0 = 0.1.
        let mut log = AggregatedLog::new();
        log.add_pair("f", "g", 5).unwrap();
        log.add_pair("f", "h", 5).unwrap();
        let env = binarize_threshold(&log, 0.1).unwrap();
        assert_eq!(env.edge_count(), 2);
    }

    #[test]
    fn binarize_rejects_degenerate_threshold() {
        let log = log_from(&[("a", "b")]);
        assert!(matches!(
            binarize_threshold(&log, 1.0),
            Err(Error::InvalidThreshold(_))
        ));
        assert!(matches!(
            binarize_threshold(&log, -0.2),
            Err(Error::InvalidThreshold(_))
        ));
    }

    #[test]
    fn kernel_from_log_uses_relative_frequencies() {
        let log = log_from(&[("a", "b"), ("a", "b"), ("a", "c")]);
        let k: FuzzyKernel<f64> = kernel_from_log(&log);
        let a = log.nodes().lookup("a").unwrap();
        let b = log.nodes().lookup("b").unwrap();
        let c = log.nodes().lookup("c").unwrap();
        assert!((k.mu(a, b).unwrap() - 2.0 / 3.0).abs() < 1e-15);
        assert!((k.mu(a, c).unwrap() - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn kernel_from_log_skips_single_observation_rows() {
        let log = log_from(&[("a", "b")]);
        let k: FuzzyKernel<f64> = kernel_from_log(&log);
        let a = log.nodes().lookup("a").unwrap();
        assert!(k.outgoing(a).is_empty());
    }
}
