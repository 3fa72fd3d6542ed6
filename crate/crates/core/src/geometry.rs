//! Geometry of the envelope-induced directed graph: shortest distances,
//! exact walk counts, strongly connected condensation, closed-walk
//! prevalence, spectral-radius bounds, and epoch expansion.

use std::collections::BTreeSet;
use std::collections::VecDeque;

use num_bigint::BigUint;
use num_traits::Zero;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::ingest::{binarize_threshold, AggregatedLog};
use crate::relation::{CrispEnvelope, FuzzyKernel, NodeId};
use crate::scalar::Scalar;

/// Default truncation bound for walk-count tables.
pub const DEFAULT_LENGTH_CAP: usize = 64;

/// Fixed iteration budget of the power-iteration lower bound.
pub const POWER_ITERATIONS: usize = 200;

/// Breadth-first distance from `f` to every node; `None` marks unreachable.
pub fn distances_from(envelope: &CrispEnvelope, f: NodeId) -> Vec<Option<usize>> {
    let mut dist = vec![None; envelope.node_count()];
    let mut queue = VecDeque::new();
    dist[f.index()] = Some(0);
    queue.push_back(f.0);
    while let Some(v) = queue.pop_front() {
        let d = dist[v as usize].unwrap();
        for &w in envelope.out(NodeId(v)) {
            if dist[w as usize].is_none() {
                dist[w as usize] = Some(d + 1);
                queue.push_back(w);
            }
        }
    }
    dist
}

/// Shortest directed distance, with `d0(f, f) = 0` and `None` when `g` is
/// unreachable from `f`.
pub fn shortest_distance(envelope: &CrispEnvelope, f: NodeId, g: NodeId) -> Option<usize> {
    distances_from(envelope, f)[g.index()]
}

/// Nodes reachable from `f` (including `f`).
pub fn forward_reachable(envelope: &CrispEnvelope, f: NodeId) -> Vec<bool> {
    distances_from(envelope, f)
        .into_iter()
        .map(|d| d.is_some())
        .collect()
}

/// Nodes from which `g` is reachable (including `g`).
pub fn backward_reachable(envelope: &CrispEnvelope, g: NodeId) -> Vec<bool> {
    let n = envelope.node_count();
    let mut rev: Vec<Vec<u32>> = vec![Vec::new(); n];
    for (f, t) in envelope.edges() {
        rev[t.index()].push(f.0);
    }
    let mut seen = vec![false; n];
    let mut queue = VecDeque::new();
    seen[g.index()] = true;
    queue.push_back(g.0);
    while let Some(v) = queue.pop_front() {
        for &w in &rev[v as usize] {
            if !seen[w as usize] {
                seen[w as usize] = true;
                queue.push_back(w);
            }
        }
    }
    seen
}

/// Exact walk counts `N_n(f, g)` for one ordered pair, `n` up to
/// `max_length`.  Revisits are allowed, so these are walk counts; the empty
/// walk contributes one exactly when `f == g`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PathCountTable {
    /// `counts[n] = N_n(f, g)`.
    pub counts: Vec<BigUint>,
    pub max_length: usize,
    /// True when every count beyond `max_length` is provably zero, so the
    /// table is the whole series rather than a truncation.
    pub complete: bool,
}

impl PathCountTable {
    pub fn count(&self, n: usize) -> &BigUint {
        &self.counts[n]
    }

    /// Smallest length with a nonzero count, i.e. the shortest distance.
    pub fn first_nonzero(&self) -> Option<usize> {
        self.counts.iter().position(|c| !c.is_zero())
    }
}

/// Length-indexed dynamic programming over walks from `f`, read at `g`.
/// Callers without a problem-specific bound should pass
/// [`DEFAULT_LENGTH_CAP`] and consult the `complete` flag.
pub fn path_counts(
    envelope: &CrispEnvelope,
    f: NodeId,
    g: NodeId,
    max_length: usize,
) -> PathCountTable {
    let n = envelope.node_count();
    let reaches_g = backward_reachable(envelope, g);
    let mut current: Vec<BigUint> = vec![BigUint::zero(); n];
    current[f.index()] = BigUint::from(1u32);
    let mut counts = Vec::with_capacity(max_length + 1);
    counts.push(current[g.index()].clone());
    let mut complete = false;
    for _ in 1..=max_length {
        if current
            .iter()
            .enumerate()
            .all(|(v, c)| c.is_zero() || !reaches_g[v])
        {
            complete = true;
            break;
        }
        let mut next: Vec<BigUint> = vec![BigUint::zero(); n];
        for (v, c) in current.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            for &w in envelope.out(NodeId(v as u32)) {
                next[w as usize] += c;
            }
        }
        counts.push(next[g.index()].clone());
        current = next;
    }
    if !complete {
        complete = current
            .iter()
            .enumerate()
            .all(|(v, c)| c.is_zero() || !reaches_g[v]);
    }
    counts.resize(max_length + 1, BigUint::zero());
    PathCountTable {
        counts,
        max_length,
        complete,
    }
}

/// Classification of a strongly connected component.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ComponentKind {
    Ordinary,
    /// Two or more nodes, or a single node with a self-loop: the component
    /// carries a closed walk.
    Supernode,
}

/// Strongly connected condensation of an envelope.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CondensedGraph {
    /// Maximal strongly connected components; members sorted by id.
    pub components: Vec<Vec<NodeId>>,
    pub kinds: Vec<ComponentKind>,
    /// Deduplicated edges between distinct components.
    pub dag_edges: Vec<(usize, usize)>,
    /// Component index of every node.
    pub component_of: Vec<usize>,
}

impl CondensedGraph {
    pub fn supernode_count(&self) -> usize {
        self.kinds
            .iter()
            .filter(|k| **k == ComponentKind::Supernode)
            .count()
    }

    pub fn nodes_in_supernodes(&self) -> usize {
        self.components
            .iter()
            .zip(&self.kinds)
            .filter(|(_, k)| **k == ComponentKind::Supernode)
            .map(|(c, _)| c.len())
            .sum()
    }
}

/// Tarjan strongly connected components with an explicit stack, so deep
/// graphs cannot overflow the call stack.
fn tarjan_scc(adj: &[Vec<u32>]) -> Vec<Vec<u32>> {
    const UNSET: u32 = u32::MAX;
    let n = adj.len();
    let mut index = vec![UNSET; n];
    let mut low = vec![0u32; n];
    let mut on_stack = vec![false; n];
    let mut stack: Vec<u32> = Vec::new();
    let mut next_index: u32 = 0;
    let mut components = Vec::new();

    struct Frame {
        v: u32,
        edge: usize,
    }
    let mut call: Vec<Frame> = Vec::new();

    for root in 0..n as u32 {
        if index[root as usize] != UNSET {
            continue;
        }
        call.push(Frame { v: root, edge: 0 });
        while let Some(frame) = call.last_mut() {
            let v = frame.v as usize;
            if index[v] == UNSET {
                index[v] = next_index;
                low[v] = next_index;
                next_index += 1;
                stack.push(frame.v);
                on_stack[v] = true;
            }
            if frame.edge < adj[v].len() {
                let w = adj[v][frame.edge] as usize;
                frame.edge += 1;
                if index[w] == UNSET {
                    call.push(Frame {
                        v: w as u32,
                        edge: 0,
                    });
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
            } else {
                if low[v] == index[v] {
                    let mut component = Vec::new();
                    loop {
                        let w = stack.pop().expect("scc stack underflow");
                        on_stack[w as usize] = false;
                        component.push(w);
                        if w as usize == v {
                            break;
                        }
                    }
                    component.sort_unstable();
                    components.push(component);
                }
                let low_v = low[v];
                call.pop();
                if let Some(parent) = call.last() {
                    let p = parent.v as usize;
                    low[p] = low[p].min(low_v);
                }
            }
        }
    }
    components
}

/// Contract strongly connected components into supernodes.
pub fn condense(envelope: &CrispEnvelope) -> CondensedGraph {
    let n = envelope.node_count();
    let adj: Vec<Vec<u32>> = (0..n as u32)
        .map(|v| envelope.out(NodeId(v)).to_vec())
        .collect();
    let raw = tarjan_scc(&adj);

    let mut component_of = vec![0usize; n];
    for (ci, comp) in raw.iter().enumerate() {
        for &v in comp {
            component_of[v as usize] = ci;
        }
    }
    let kinds = raw
        .iter()
        .map(|comp| {
            let has_closed_walk =
                comp.len() >= 2 || envelope.has_edge(NodeId(comp[0]), NodeId(comp[0]));
            if has_closed_walk {
                ComponentKind::Supernode
            } else {
                ComponentKind::Ordinary
            }
        })
        .collect();
    let mut dag_edges: Vec<(usize, usize)> = envelope
        .edges()
        .filter_map(|(f, g)| {
            let (cf, cg) = (component_of[f.index()], component_of[g.index()]);
            (cf != cg).then_some((cf, cg))
        })
        .collect();
    dag_edges.sort_unstable();
    dag_edges.dedup();

    CondensedGraph {
        components: raw
            .into_iter()
            .map(|c| c.into_iter().map(NodeId).collect())
            .collect(),
        kinds,
        dag_edges,
        component_of,
    }
}

/// One point of a closed-walk-prevalence sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct EtaPoint {
    pub p0: f64,
    /// `nodes_in_supernodes / total_nodes`, or 0 on an empty graph.
    pub eta: f64,
    pub supernode_count: usize,
    pub nodes_in_supernodes: usize,
    pub total_nodes: usize,
}

/// Which node population the eta denominator counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EtaDenominator {
    /// Nodes incident to at least one edge surviving binarization; pruned
    /// isolated nodes are no longer part of the induced graph.
    ActiveNodes,
    /// Every node ever seen in the log.
    AllNodes,
}

/// Binarize the log at each threshold, condense, and report supernode
/// prevalence.  Thresholds must be sorted ascending.
pub fn eta_sweep(
    log: &AggregatedLog,
    thresholds: &[f64],
    denominator: EtaDenominator,
) -> Result<Vec<EtaPoint>> {
    if thresholds.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::ContractViolation(
            "eta_sweep thresholds must be sorted ascending".into(),
        ));
    }
    thresholds
        .par_iter()
        .map(|&p0| {
            let env = binarize_threshold(log, p0)?;
            let cond = condense(&env);
            let mut active = vec![false; env.node_count()];
            for (f, g) in env.edges() {
                active[f.index()] = true;
                active[g.index()] = true;
            }
            let total_nodes = match denominator {
                EtaDenominator::ActiveNodes => active.iter().filter(|a| **a).count(),
                EtaDenominator::AllNodes => env.node_count(),
            };
            let nodes_in_supernodes = cond.nodes_in_supernodes();
            let eta = if total_nodes == 0 {
                0.0
            } else {
                nodes_in_supernodes as f64 / total_nodes as f64
            };
            Ok(EtaPoint {
                p0,
                eta,
                supernode_count: cond.supernode_count(),
                nodes_in_supernodes,
                total_nodes,
            })
        })
        .collect()
}

/// Certified bracket on the spectral radius of a kernel matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralBounds<S> {
    /// Infinity-norm bound: the maximum row sum.
    pub upper: S,
    /// Power-iteration estimate; a valid lower bound since `Mx >= cx`
    /// entrywise for nonnegative `x` forces `rho >= c`.
    pub lower: S,
    /// True iff the support is acyclic, in which case `rho = 0`.
    pub is_nilpotent: bool,
}

/// Row-sum upper bound plus a power-iteration lower estimate of the spectral
/// radius.  Exact spectra are out of scope; the pair brackets `rho` well
/// enough to certify series convergence.
pub fn spectral_radius_bounds<S: Scalar>(kernel: &FuzzyKernel<S>) -> SpectralBounds<S> {
    let upper = kernel.max_row_sum();
    let support = kernel.support();
    let is_nilpotent = condense(&support).supernode_count() == 0;
    if is_nilpotent {
        return SpectralBounds {
            upper,
            lower: S::zero(),
            is_nilpotent,
        };
    }
    let n = kernel.node_count();
    let matvec = |x: &[S]| -> Vec<S> {
        (0..n)
            .map(|f| {
                kernel
                    .outgoing(NodeId(f as u32))
                    .iter()
                    .map(|&(g, mu)| mu * x[g as usize])
                    .sum()
            })
            .collect()
    };
    let mut x = vec![S::one(); n];
    for _ in 0..POWER_ITERATIONS {
        let y = matvec(&x);
        let norm = y.iter().cloned().fold(S::zero(), S::max);
        if norm == S::zero() {
            return SpectralBounds {
                upper,
                lower: S::zero(),
                is_nilpotent,
            };
        }
        x = y.into_iter().map(|v| v / norm).collect();
    }
    let y = matvec(&x);
    let lower = x
        .iter()
        .zip(&y)
        .filter(|(xi, _)| **xi > S::zero())
        .map(|(xi, yi)| *yi / *xi)
        .fold(S::infinity(), S::min);
    let lower = if lower.is_finite() { lower } else { S::zero() };
    SpectralBounds {
        upper,
        lower,
        is_nilpotent,
    }
}

/// Nodes reachable from `start` within at most `epochs` expansion steps,
/// cumulative with set-wise deduplication.
pub fn epoch_expansion(
    envelope: &CrispEnvelope,
    start: NodeId,
    epochs: usize,
) -> BTreeSet<NodeId> {
    let mut seen: BTreeSet<NodeId> = BTreeSet::new();
    seen.insert(start);
    let mut frontier = vec![start];
    for _ in 0..epochs {
        let mut next = Vec::new();
        for &v in &frontier {
            for &w in envelope.out(v) {
                if seen.insert(NodeId(w)) {
                    next.push(NodeId(w));
                }
            }
        }
        if next.is_empty() {
            break;
        }
        frontier = next;
    }
    seen
}
