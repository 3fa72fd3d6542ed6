//! Brute-force reference implementations and synthetic fixtures.
//!
//! Everything here is deliberately naive: walk counts come from exhaustive
//! depth-first enumeration of the walk tree, critical parameters from closed
//! forms.  These routes share no code with the dynamic programs and solvers
//! they are used to verify.

use num_bigint::BigUint;
use num_traits::Zero;
use rand::Rng;

use crate::ingest::AggregatedLog;
use crate::relation::{CrispEnvelope, FuzzyKernel, NodeId, NodeTable};
use crate::scalar::Scalar;

/// Count walks of exactly length `n` from `f` to `g` by enumerating the walk
/// tree, one walk at a time.
pub fn enumerate_walks(envelope: &CrispEnvelope, f: NodeId, g: NodeId, n: usize) -> BigUint {
    fn dfs(envelope: &CrispEnvelope, v: NodeId, g: NodeId, remaining: usize) -> BigUint {
        if remaining == 0 {
            return if v == g {
                BigUint::from(1u32)
            } else {
                BigUint::zero()
            };
        }
        let mut total = BigUint::zero();
        for &w in envelope.out(v) {
            total += dfs(envelope, NodeId(w), g, remaining - 1);
        }
        total
    }
    dfs(envelope, f, g, n)
}

/// Walk counts for every length up to `max_length`, by enumeration.
pub fn enumerate_walk_counts(
    envelope: &CrispEnvelope,
    f: NodeId,
    g: NodeId,
    max_length: usize,
) -> Vec<BigUint> {
    (0..=max_length)
        .map(|n| enumerate_walks(envelope, f, g, n))
        .collect()
}

/// Closed-form critical parameter of `k` node-disjoint crisp paths of length
/// `n`: the series is `k p^n`, so `p_c = k^(-1/n)`.
pub fn disjoint_paths_pc(k: u32, n: u32) -> f64 {
    (k as f64).powf(-1.0 / n as f64)
}

/// Closed-form critical parameter of the two-node crisp cycle: the positive
/// root of `p^2 + p - 1 = 0` from `p / (1 - p^2) = 1`.
pub fn two_cycle_pc() -> f64 {
    (5.0_f64.sqrt() - 1.0) / 2.0
}

/// Fixture of `k` node-disjoint crisp paths of length `n` from a shared
/// source to a shared sink; returns `(envelope, source, sink)`.  Requires
/// `n >= 2` when `k >= 2`: parallel unit edges would collapse into one entry
/// per ordered pair; see [`double_unit_path_envelope`] for that case.
pub fn disjoint_paths_envelope(k: u32, n: u32) -> (CrispEnvelope, NodeId, NodeId) {
    assert!(k >= 1 && n >= 1 && !(k >= 2 && n < 2));
    let mut table = NodeTable::new();
    let source = table.intern("source").unwrap();
    let sink = table.intern("sink").unwrap();
    let mut edges = Vec::new();
    for path in 0..k {
        let mut prev = source;
        for step in 1..n {
            let mid = table.intern(&format!("p{path}s{step}")).unwrap();
            edges.push((prev, mid));
            prev = mid;
        }
        edges.push((prev, sink));
    }
    let env = CrispEnvelope::from_edges(table, edges).unwrap();
    (env, source, sink)
}

/// Stand-in for two parallel unit edges, which a simple digraph cannot
/// host: a direct edge plus two node-disjoint length-2 detours.  The series
/// is `p + 2 p^2`, whose unit root factors as `(2p - 1)(p + 1)`, so the
/// critical parameter is exactly `1/2 = 2^(-1/1)`.
pub fn double_unit_path_envelope() -> (CrispEnvelope, NodeId, NodeId) {
    let table = NodeTable::from_labels(["source", "sink", "via-a", "via-b"]).unwrap();
    let env = CrispEnvelope::from_edges(
        table,
        [
            (NodeId(0), NodeId(1)),
            (NodeId(0), NodeId(2)),
            (NodeId(2), NodeId(1)),
            (NodeId(0), NodeId(3)),
            (NodeId(3), NodeId(1)),
        ],
    )
    .unwrap();
    (env, NodeId(0), NodeId(1))
}

/// Fixture of the two-node crisp cycle; returns `(envelope, f, g)`.
pub fn two_cycle_envelope() -> (CrispEnvelope, NodeId, NodeId) {
    let table = NodeTable::from_labels(["f", "g"]).unwrap();
    let env = CrispEnvelope::from_edges(
        table,
        [(NodeId(0), NodeId(1)), (NodeId(1), NodeId(0))],
    )
    .unwrap();
    (env, NodeId(0), NodeId(1))
}

/// Random directed graph on `n` nodes where each ordered pair (including
/// self-loops) carries an edge with probability `density`.
pub fn random_envelope<R: Rng>(rng: &mut R, n: usize, density: f64) -> CrispEnvelope {
    let table = NodeTable::from_labels((0..n).map(|i| format!("n{i}"))).unwrap();
    let mut edges = Vec::new();
    for f in 0..n as u32 {
        for g in 0..n as u32 {
            if rng.random::<f64>() < density {
                edges.push((NodeId(f), NodeId(g)));
            }
        }
    }
    CrispEnvelope::from_edges(table, edges).unwrap()
}

/// Random DAG on `n` nodes: edges only run from lower to higher ids, so the
/// result is acyclic by construction.
pub fn random_dag<R: Rng>(rng: &mut R, n: usize, density: f64) -> CrispEnvelope {
    let table = NodeTable::from_labels((0..n).map(|i| format!("n{i}"))).unwrap();
    let mut edges = Vec::new();
    for f in 0..n as u32 {
        for g in (f + 1)..n as u32 {
            if rng.random::<f64>() < density {
                edges.push((NodeId(f), NodeId(g)));
            }
        }
    }
    CrispEnvelope::from_edges(table, edges).unwrap()
}

/// Random fuzzy kernel: a random envelope shape with memberships drawn
/// uniformly from `(0, 1]`.
pub fn random_kernel<S: Scalar, R: Rng>(rng: &mut R, n: usize, density: f64) -> FuzzyKernel<S> {
    let table = NodeTable::from_labels((0..n).map(|i| format!("n{i}"))).unwrap();
    let mut builder = FuzzyKernel::<S>::builder(table);
    for f in 0..n as u32 {
        for g in 0..n as u32 {
            if rng.random::<f64>() < density {
                let mu = 1.0 - rng.random::<f64>(); // uniform in (0, 1]
                builder
                    .insert(NodeId(f), NodeId(g), S::from_f64(mu).unwrap())
                    .unwrap();
            }
        }
    }
    builder.finish()
}

/// Random fuzzy kernel with an acyclic support (edges run from lower to
/// higher ids) and memberships uniform in `(0, 1]`.
pub fn random_dag_kernel<S: Scalar, R: Rng>(rng: &mut R, n: usize, density: f64) -> FuzzyKernel<S> {
    let table = NodeTable::from_labels((0..n).map(|i| format!("n{i}"))).unwrap();
    let mut builder = FuzzyKernel::<S>::builder(table);
    for f in 0..n as u32 {
        for g in (f + 1)..n as u32 {
            if rng.random::<f64>() < density {
                let mu = 1.0 - rng.random::<f64>();
                builder
                    .insert(NodeId(f), NodeId(g), S::from_f64(mu).unwrap())
                    .unwrap();
            }
        }
    }
    builder.finish()
}

/// Synthetic log of a solid chain DAG plus planted weak-return cycles.
///
/// Every DAG edge has relative frequency 1 on its input.  Each planted cycle
/// is a pair `u <-> v` where the forward edge is strong and the return edge
/// has relative frequency `weak_r`, so all cycles disappear once the
/// threshold reaches `weak_r`.  Returns the log and the number of planted
/// cycle nodes.
pub fn planted_cycle_log(dag_nodes: usize, cycles: usize, weak_r: f64) -> (AggregatedLog, usize) {
    assert!(dag_nodes >= 2 && (0.0..1.0).contains(&weak_r));
    let mut log = AggregatedLog::new();
    for i in 0..dag_nodes - 1 {
        log.add_pair(&format!("d{i}"), &format!("d{}", i + 1), 2).unwrap();
    }
    // Choose integer counts with weak / (weak + strong) == weak_r.
    let denom = 1_000u64;
    let weak = (weak_r * denom as f64).round() as u64;
    assert!(weak >= 1 && weak < denom);
    for c in 0..cycles {
        let u = format!("c{c}u");
        let v = format!("c{c}v");
        log.add_pair(&u, &v, denom).unwrap();
        log.add_pair(&v, &u, weak).unwrap();
        log.add_pair(&v, "d0", denom - weak).unwrap();
    }
    (log, cycles * 2)
}
