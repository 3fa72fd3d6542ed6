//! Coverage generating functions, critical parameters, and waypoint
//! rankings.
//!
//! `P_{f,g}(p)` sums `p^n` times the membership product over every walk from
//! `f` to `g`; the empty walk contributes 1 exactly when `f == g`.  Three
//! evaluation routes are exposed and cross-checked: an exact dynamic program
//! on acyclic supports, an iterative resolvent solve of `(I - pM^T)x = e_f`,
//! and a truncated series with a certified geometric tail bound.  The
//! critical parameter `p_c` is the smallest `p` at which the crisp series
//! reaches 1, found by bisection over the monotone evaluation.

use std::collections::VecDeque;

use num_bigint::BigUint;
use num_traits::{ToPrimitive, Zero};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{backward_reachable, forward_reachable, path_counts, shortest_distance};
use crate::relation::{CrispEnvelope, FuzzyKernel, NodeId};
use crate::scalar::{s, Scalar};

/// Residual target of the resolvent fixed-point solve.
pub const RESOLVENT_RESIDUAL: f64 = 1e-12;

/// Default certified tail bound for truncated-series evaluations.
pub const DEFAULT_TAIL_BOUND: f64 = 1e-10;

/// Absolute tolerance of the critical-parameter bisection.
pub const PC_TOLERANCE: f64 = 1e-9;

/// Bisection step budget; 2^-60 is far below the tolerance.
pub const PC_MAX_BISECTIONS: usize = 60;

/// Numerical slack when checking the coverage-transitivity inequality.
pub const TRANSITIVITY_SLACK: f64 = 1e-12;

const MAX_SERIES_ITERATIONS: usize = 1_000_000;

/// Value of one series evaluation: finite, or divergent when the geometric
/// guard `p * upper_bound(rho) < 1` fails on a cyclic support.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CoverageValue<S> {
    Finite(S),
    Diverged,
}

impl<S: Scalar> CoverageValue<S> {
    pub fn finite(self) -> Option<S> {
        match self {
            CoverageValue::Finite(v) => Some(v),
            CoverageValue::Diverged => None,
        }
    }

    pub fn is_diverged(self) -> bool {
        matches!(self, CoverageValue::Diverged)
    }

    /// Divergence counts as reaching any finite threshold.
    pub fn at_least_one(self) -> bool {
        match self {
            CoverageValue::Finite(v) => v >= S::one(),
            CoverageValue::Diverged => true,
        }
    }

    fn mul(self, other: Self) -> Self {
        use CoverageValue::*;
        match (self, other) {
            (Finite(a), Finite(b)) => Finite(a * b),
            // No walks on one leg annihilate the product regardless of the other.
            (Finite(z), Diverged) | (Diverged, Finite(z)) if z == S::zero() => Finite(S::zero()),
            _ => Diverged,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvalMethod {
    DagExact,
    TruncatedSeries,
    Resolvent,
}

impl EvalMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            EvalMethod::DagExact => "dag_exact",
            EvalMethod::TruncatedSeries => "truncated_series",
            EvalMethod::Resolvent => "resolvent",
        }
    }
}

/// One evaluation of the coverage generating function.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesEval<S> {
    pub value: CoverageValue<S>,
    pub method: EvalMethod,
    /// Highest series order included, for truncated evaluations.
    pub truncation_order: Option<usize>,
    /// Certified bound on the omitted tail, when one applies.
    pub tail_bound: Option<S>,
    pub p: S,
}

/// Cached per-kernel state shared by repeated evaluations: topological order
/// of the support when acyclic, plus the row-sum bound.
pub struct CoverageSolver<'a, S> {
    kernel: &'a FuzzyKernel<S>,
    topo: Option<Vec<u32>>,
    row_max: S,
}

/// Restriction of a kernel to the nodes on some walk from `f` to `g`
/// (forward-reachable from `f` and backward-reachable from `g`).  Every
/// walk between the pair stays inside this set, so both the acyclicity test
/// and the row-sum bound tighten to what the pair actually sees.
struct PairView<S> {
    mask: Vec<bool>,
    reachable: bool,
    /// Reverse-topological order of the masked subgraph when acyclic.
    rev_topo: Option<Vec<u32>>,
    row_max: S,
}

impl<S: Scalar> PairView<S> {
    fn new(kernel: &FuzzyKernel<S>, f: NodeId, g: NodeId) -> Self {
        let n = kernel.node_count();
        let mut fwd = vec![false; n];
        fwd[f.index()] = true;
        let mut queue = VecDeque::from([f.0]);
        while let Some(u) = queue.pop_front() {
            for &(v, _) in kernel.outgoing(NodeId(u)) {
                if !fwd[v as usize] {
                    fwd[v as usize] = true;
                    queue.push_back(v);
                }
            }
        }
        let mut rev: Vec<Vec<u32>> = vec![Vec::new(); n];
        for (u, v, _) in kernel.edges() {
            rev[v.index()].push(u.0);
        }
        let mut bwd = vec![false; n];
        bwd[g.index()] = true;
        let mut queue = VecDeque::from([g.0]);
        while let Some(v) = queue.pop_front() {
            for &u in &rev[v as usize] {
                if !bwd[u as usize] {
                    bwd[u as usize] = true;
                    queue.push_back(u);
                }
            }
        }
        let mask: Vec<bool> = fwd.iter().zip(&bwd).map(|(a, b)| *a && *b).collect();
        let reachable = mask[f.index()];
        if !reachable {
            return Self {
                mask,
                reachable,
                rev_topo: Some(Vec::new()),
                row_max: S::zero(),
            };
        }
        let members: Vec<u32> = (0..kernel.node_count() as u32)
            .filter(|&v| mask[v as usize])
            .collect();
        let row_max = members
            .iter()
            .map(|&u| {
                kernel
                    .outgoing(NodeId(u))
                    .iter()
                    .filter(|&&(v, _)| mask[v as usize])
                    .map(|&(_, mu)| mu)
                    .sum()
            })
            .fold(S::zero(), S::max);
        // Kahn on the masked subgraph.
        let n = kernel.node_count();
        let mut indeg = vec![0usize; n];
        for &u in &members {
            for &(v, _) in kernel.outgoing(NodeId(u)) {
                if mask[v as usize] {
                    indeg[v as usize] += 1;
                }
            }
        }
        let mut queue: VecDeque<u32> = members
            .iter()
            .copied()
            .filter(|&v| indeg[v as usize] == 0)
            .collect();
        let mut order = Vec::with_capacity(members.len());
        while let Some(u) = queue.pop_front() {
            order.push(u);
            for &(v, _) in kernel.outgoing(NodeId(u)) {
                if mask[v as usize] {
                    indeg[v as usize] -= 1;
                    if indeg[v as usize] == 0 {
                        queue.push_back(v);
                    }
                }
            }
        }
        let rev_topo = (order.len() == members.len()).then(|| {
            order.reverse();
            order
        });
        Self {
            mask,
            reachable,
            rev_topo,
            row_max,
        }
    }
}

impl<'a, S: Scalar> CoverageSolver<'a, S> {
    pub fn new(kernel: &'a FuzzyKernel<S>) -> Self {
        Self {
            kernel,
            topo: topological_order(kernel),
            row_max: kernel.max_row_sum(),
        }
    }

    pub fn is_acyclic(&self) -> bool {
        self.topo.is_some()
    }

    pub fn row_max(&self) -> S {
        self.row_max
    }

    fn check_p(&self, p: S) -> Result<()> {
        if !(p >= S::zero() && p <= S::one()) {
            return Err(Error::ContractViolation(format!(
                "continuation parameter p = {p} must lie in [0, 1]"
            )));
        }
        Ok(())
    }

    /// Dispatching evaluation on the pair-restricted subgraph: exact when no
    /// cycle lies on any `f -> g` walk, resolvent when the geometric guard
    /// holds there, divergent otherwise.
    pub fn eval(&self, f: NodeId, g: NodeId, p: S) -> Result<SeriesEval<S>> {
        self.check_p(p)?;
        let view = PairView::new(self.kernel, f, g);
        if !view.reachable {
            let value = if f == g { S::one() } else { S::zero() };
            return Ok(SeriesEval {
                value: CoverageValue::Finite(value),
                method: EvalMethod::DagExact,
                truncation_order: None,
                tail_bound: None,
                p,
            });
        }
        if view.rev_topo.is_some() {
            return Ok(SeriesEval {
                value: CoverageValue::Finite(self.restricted_dag_value(&view, f, g, p)),
                method: EvalMethod::DagExact,
                truncation_order: None,
                tail_bound: None,
                p,
            });
        }
        if p * view.row_max < S::one() {
            return Ok(self.restricted_resolvent(&view, f, g, p));
        }
        Ok(SeriesEval {
            value: CoverageValue::Diverged,
            method: EvalMethod::Resolvent,
            truncation_order: None,
            tail_bound: None,
            p,
        })
    }

    /// Reverse-topological dynamic program on the masked subgraph.
    fn restricted_dag_value(&self, view: &PairView<S>, f: NodeId, g: NodeId, p: S) -> S {
        let order = view.rev_topo.as_ref().expect("caller checked acyclicity");
        let mut values = vec![S::zero(); self.kernel.node_count()];
        for &u in order {
            let mut acc = if u == g.0 { S::one() } else { S::zero() };
            let mut step = S::zero();
            for &(v, mu) in self.kernel.outgoing(NodeId(u)) {
                if view.mask[v as usize] {
                    step += mu * values[v as usize];
                }
            }
            acc += p * step;
            values[u as usize] = acc;
        }
        values[f.index()]
    }

    /// Fixed-point solve restricted to the masked subgraph.
    fn restricted_resolvent(&self, view: &PairView<S>, f: NodeId, g: NodeId, p: S) -> SeriesEval<S> {
        let q = p * view.row_max;
        let n = self.kernel.node_count();
        let mut x = vec![S::zero(); n];
        x[f.index()] = S::one();
        let residual_target = s::<S>(RESOLVENT_RESIDUAL);
        let mut residual_mass = S::infinity();
        for _ in 0..MAX_SERIES_ITERATIONS {
            let mut next = vec![S::zero(); n];
            next[f.index()] = S::one();
            for (u, xu) in x.iter().enumerate() {
                if *xu == S::zero() || !view.mask[u] {
                    continue;
                }
                let push = p * *xu;
                for &(v, mu) in self.kernel.outgoing(NodeId(u as u32)) {
                    if view.mask[v as usize] {
                        next[v as usize] += mu * push;
                    }
                }
            }
            let residual = x
                .iter()
                .zip(&next)
                .map(|(a, b)| (*b - *a).abs())
                .fold(S::zero(), S::max);
            residual_mass = x.iter().zip(&next).map(|(a, b)| (*b - *a).abs()).sum();
            x = next;
            if residual < residual_target {
                return SeriesEval {
                    value: CoverageValue::Finite(x[g.index()]),
                    method: EvalMethod::Resolvent,
                    truncation_order: None,
                    tail_bound: None,
                    p,
                };
            }
        }
        SeriesEval {
            value: CoverageValue::Finite(x[g.index()]),
            method: EvalMethod::Resolvent,
            truncation_order: Some(MAX_SERIES_ITERATIONS),
            tail_bound: Some(residual_mass * q / (S::one() - q)),
            p,
        }
    }

    /// Exact values `P_{u,g}(p)` for every `u` at once by reverse-topological
    /// dynamic programming; `None` when the support has a cycle.
    pub fn eval_dag_vector(&self, g: NodeId, p: S) -> Option<Vec<S>> {
        let order = self.topo.as_ref()?;
        let mut values = vec![S::zero(); self.kernel.node_count()];
        for &u in order.iter().rev() {
            let mut acc = if u == g.0 { S::one() } else { S::zero() };
            let mut step = S::zero();
            for &(v, mu) in self.kernel.outgoing(NodeId(u)) {
                step += mu * values[v as usize];
            }
            acc += p * step;
            values[u as usize] = acc;
        }
        Some(values)
    }

    pub fn eval_dag(&self, f: NodeId, g: NodeId, p: S) -> Option<SeriesEval<S>> {
        let values = self.eval_dag_vector(g, p)?;
        Some(SeriesEval {
            value: CoverageValue::Finite(values[f.index()]),
            method: EvalMethod::DagExact,
            truncation_order: None,
            tail_bound: None,
            p,
        })
    }

    /// Fixed-point solve of `x = e_f + p M^T x`, read at `g`.  Applicable
    /// when `p * row_max < 1`; converges geometrically with that ratio.
    pub fn eval_resolvent(&self, f: NodeId, g: NodeId, p: S) -> Option<SeriesEval<S>> {
        let q = p * self.row_max;
        if q >= S::one() {
            return None;
        }
        let n = self.kernel.node_count();
        let mut x = vec![S::zero(); n];
        x[f.index()] = S::one();
        let residual_target = s::<S>(RESOLVENT_RESIDUAL);
        let mut residual_mass = S::infinity();
        for _ in 0..MAX_SERIES_ITERATIONS {
            let mut next = vec![S::zero(); n];
            next[f.index()] = S::one();
            for (u, xu) in x.iter().enumerate() {
                if *xu == S::zero() {
                    continue;
                }
                let push = p * *xu;
                for &(v, mu) in self.kernel.outgoing(NodeId(u as u32)) {
                    next[v as usize] += mu * push;
                }
            }
            let residual = x
                .iter()
                .zip(&next)
                .map(|(a, b)| (*b - *a).abs())
                .fold(S::zero(), S::max);
            residual_mass = x.iter().zip(&next).map(|(a, b)| (*b - *a).abs()).sum();
            x = next;
            if residual < residual_target {
                return Some(SeriesEval {
                    value: CoverageValue::Finite(x[g.index()]),
                    method: EvalMethod::Resolvent,
                    truncation_order: None,
                    tail_bound: None,
                    p,
                });
            }
        }
        // Iteration cap: return the partial solve with an honest error bound
        // (the remaining mass contracts geometrically with ratio q).
        Some(SeriesEval {
            value: CoverageValue::Finite(x[g.index()]),
            method: EvalMethod::Resolvent,
            truncation_order: Some(MAX_SERIES_ITERATIONS),
            tail_bound: Some(residual_mass * q / (S::one() - q)),
            p,
        })
    }

    /// Partial sum of the series through an order chosen so the geometric
    /// tail `(p‖M‖)^{K+1} / (1 - p‖M‖)` is at most `tail_target`.
    pub fn eval_truncated(
        &self,
        f: NodeId,
        g: NodeId,
        p: S,
        tail_target: S,
    ) -> Option<SeriesEval<S>> {
        let q = p * self.row_max;
        if q >= S::one() {
            return None;
        }
        let mut order = 0usize;
        if q > S::zero() {
            let mut tail = q / (S::one() - q); // tail after order 0
            while tail > tail_target && order < MAX_SERIES_ITERATIONS {
                order += 1;
                tail *= q;
            }
        }
        let n = self.kernel.node_count();
        let mut term = vec![S::zero(); n];
        term[f.index()] = S::one();
        let mut value = term[g.index()];
        for _ in 0..order {
            let mut next = vec![S::zero(); n];
            for (u, tu) in term.iter().enumerate() {
                if *tu == S::zero() {
                    continue;
                }
                let push = p * *tu;
                for &(v, mu) in self.kernel.outgoing(NodeId(u as u32)) {
                    next[v as usize] += mu * push;
                }
            }
            term = next;
            value += term[g.index()];
        }
        let tail_bound = if q == S::zero() {
            S::zero()
        } else {
            q.powi(order as i32 + 1) / (S::one() - q)
        };
        Some(SeriesEval {
            value: CoverageValue::Finite(value),
            method: EvalMethod::TruncatedSeries,
            truncation_order: Some(order),
            tail_bound: Some(tail_bound),
            p,
        })
    }

    /// Decide `P_{f,g}(p) >= 1` without always resolving the full value: the
    /// partial sums are monotone, so an early crossing certifies `true` and a
    /// small certified tail certifies `false`.  Divergence counts as `true`.
    fn ge_one_with_view(&self, view: &PairView<S>, f: NodeId, g: NodeId, p: S) -> bool {
        if f == g {
            return true;
        }
        if !view.reachable {
            return false;
        }
        if view.rev_topo.is_some() {
            return self.restricted_dag_value(view, f, g, p) >= S::one();
        }
        let q = p * view.row_max;
        if q >= S::one() {
            return true;
        }
        let n = self.kernel.node_count();
        let mut term = vec![S::zero(); n];
        term[f.index()] = S::one();
        let mut acc = S::zero();
        for _ in 0..MAX_SERIES_ITERATIONS {
            if acc >= S::one() {
                return true;
            }
            // Future contributions to the target entry are bounded through
            // the row-sum norm by q^i times the total mass of the current
            // term vector.
            let term_mass: S = term.iter().cloned().sum();
            if acc + term_mass * q / (S::one() - q) < S::one() {
                return false;
            }
            let mut next = vec![S::zero(); n];
            for (u, tu) in term.iter().enumerate() {
                if *tu == S::zero() || !view.mask[u] {
                    continue;
                }
                let push = p * *tu;
                for &(v, mu) in self.kernel.outgoing(NodeId(u as u32)) {
                    if view.mask[v as usize] {
                        next[v as usize] += mu * push;
                    }
                }
            }
            term = next;
            acc += term[g.index()];
        }
        acc >= S::one()
    }
}

/// Kahn topological order of the kernel support; `None` when cyclic.
fn topological_order<S: Scalar>(kernel: &FuzzyKernel<S>) -> Option<Vec<u32>> {
    let n = kernel.node_count();
    let mut indeg = vec![0usize; n];
    for (_, g, _) in kernel.edges() {
        indeg[g.index()] += 1;
    }
    let mut queue: VecDeque<u32> = (0..n as u32).filter(|&v| indeg[v as usize] == 0).collect();
    let mut order = Vec::with_capacity(n);
    while let Some(v) = queue.pop_front() {
        order.push(v);
        for &(w, _) in kernel.outgoing(NodeId(v)) {
            indeg[w as usize] -= 1;
            if indeg[w as usize] == 0 {
                queue.push_back(w);
            }
        }
    }
    (order.len() == n).then_some(order)
}

/// Evaluate the coverage generating function on a fuzzy kernel.
pub fn eval_coverage<S: Scalar>(
    kernel: &FuzzyKernel<S>,
    f: NodeId,
    g: NodeId,
    p: S,
) -> Result<SeriesEval<S>> {
    CoverageSolver::new(kernel).eval(f, g, p)
}

/// Evaluate the crisp generating function `P^ideal` on an envelope.
pub fn eval_coverage_crisp<S: Scalar>(
    envelope: &CrispEnvelope,
    f: NodeId,
    g: NodeId,
    p: S,
) -> Result<SeriesEval<S>> {
    eval_coverage(&envelope.to_kernel(), f, g, p)
}

fn critical_with_solver<S: Scalar>(
    solver: &CoverageSolver<'_, S>,
    f: NodeId,
    g: NodeId,
) -> (S, S) {
    if f == g {
        return (S::zero(), S::one());
    }
    let view = PairView::new(solver.kernel, f, g);
    if !view.reachable {
        return (S::one(), S::zero());
    }
    if !solver.ge_one_with_view(&view, f, g, S::one()) {
        // The unit threshold is never reached on [0, 1].
        return (S::one(), S::zero());
    }
    let tol = s::<S>(PC_TOLERANCE);
    let half = s::<S>(0.5);
    let mut lo = S::zero();
    let mut hi = S::one();
    for _ in 0..PC_MAX_BISECTIONS {
        if hi - lo <= tol {
            break;
        }
        let mid = (lo + hi) * half;
        if solver.ge_one_with_view(&view, f, g, mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let p_c = (lo + hi) * half;
    (p_c, S::one() - p_c)
}

/// Critical parameter `p_c = inf { p : P_{f,g}(p) >= 1 }` and the coverage
/// index `r_c = 1 - p_c`.  Unreachable pairs return `(1, 0)` and the
/// identity pair returns `(0, 1)`.
pub fn critical_parameter<S: Scalar>(kernel: &FuzzyKernel<S>, f: NodeId, g: NodeId) -> (S, S) {
    let solver = CoverageSolver::new(kernel);
    critical_with_solver(&solver, f, g)
}

/// Crisp-envelope form of [`critical_parameter`].
pub fn critical_parameter_crisp<S: Scalar>(
    envelope: &CrispEnvelope,
    f: NodeId,
    g: NodeId,
) -> (S, S) {
    critical_parameter(&envelope.to_kernel(), f, g)
}

/// Small-`p` evaluation of `P / p^{d0}` against the shortest-path count.
#[derive(Debug, Clone, PartialEq)]
pub struct LowOrderCheck<S> {
    pub ratio: S,
    pub expected: BigUint,
    pub d0: usize,
}

/// Evaluate `P^ideal(p_small) / p_small^{d0}` next to `N_{d0}`: as `p` tends
/// to zero the ratio converges to the shortest-path count, since all higher
/// orders vanish faster.
pub fn verify_low_order_limit<S: Scalar>(
    envelope: &CrispEnvelope,
    f: NodeId,
    g: NodeId,
    p_small: S,
) -> Result<LowOrderCheck<S>> {
    if !(p_small > S::zero() && p_small <= s::<S>(1e-3)) {
        return Err(Error::ContractViolation(format!(
            "p_small = {p_small} must lie in (0, 1e-3]"
        )));
    }
    let d0 = shortest_distance(envelope, f, g).ok_or_else(|| {
        Error::ContractViolation("low-order limit requires a reachable pair".into())
    })?;
    let expected = path_counts(envelope, f, g, d0).count(d0).clone();
    let eval = eval_coverage_crisp(envelope, f, g, p_small)?;
    let value = eval.value.finite().ok_or_else(|| {
        Error::ContractViolation("series diverged at p_small; cannot form the ratio".into())
    })?;
    let ratio = value / p_small.powi(d0 as i32);
    Ok(LowOrderCheck {
        ratio,
        expected,
        d0,
    })
}

/// One gridpoint of a transitivity sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransitivityPoint<S> {
    pub p: S,
    pub lhs: CoverageValue<S>,
    pub rhs: CoverageValue<S>,
    /// `lhs >= rhs` up to [`TRANSITIVITY_SLACK`]; divergent left-hand sides
    /// hold vacuously.
    pub holds: bool,
}

/// Evaluate `P_{f,g}(p)` against `P_{f,h}(p) * P_{h,g}(p)` over a grid of
/// `p`.  The inequality is guaranteed on acyclic envelopes; on cyclic ones a
/// recorded violation is a finding, not a crash.
pub fn transitivity_check<S: Scalar>(
    envelope: &CrispEnvelope,
    f: NodeId,
    h: NodeId,
    g: NodeId,
    p_grid: &[S],
) -> Result<Vec<TransitivityPoint<S>>> {
    let kernel = envelope.to_kernel::<S>();
    let solver = CoverageSolver::new(&kernel);
    let slack = s::<S>(TRANSITIVITY_SLACK);
    p_grid
        .iter()
        .map(|&p| {
            let lhs = solver.eval(f, g, p)?.value;
            let rhs = solver
                .eval(f, h, p)?
                .value
                .mul(solver.eval(h, g, p)?.value);
            let holds = match (lhs, rhs) {
                (CoverageValue::Diverged, _) => true,
                (CoverageValue::Finite(l), CoverageValue::Finite(r)) => l >= r - slack,
                (CoverageValue::Finite(_), CoverageValue::Diverged) => false,
            };
            Ok(TransitivityPoint { p, lhs, rhs, holds })
        })
        .collect()
}

/// One candidate waypoint with its compositional coverage bound.
#[derive(Debug, Clone, PartialEq)]
pub struct WaypointEntry<S> {
    pub node: NodeId,
    /// `min(R_c(f, h), R_c(h, g))`, the lower bound the candidate certifies
    /// for `R_c(f, g)`.
    pub bound: S,
    /// True when `h` lies on at least one reachable path from `f` to `g`.
    pub is_intermediate: bool,
    pub rc_from_source: S,
    pub rc_to_target: S,
}

/// Candidates ranked by their compositional bound.
#[derive(Debug, Clone, PartialEq)]
pub struct WaypointRanking<S> {
    pub source: NodeId,
    pub target: NodeId,
    pub entries: Vec<WaypointEntry<S>>,
}

/// Rank waypoint candidates between `f` and `g` by
/// `min(R_c(f, h), R_c(h, g))`, descending, ties by node id.  The default
/// candidate set is every node on some `f -> g` path.
pub fn rank_waypoints<S: Scalar>(
    envelope: &CrispEnvelope,
    f: NodeId,
    g: NodeId,
    candidates: Option<&[NodeId]>,
) -> WaypointRanking<S> {
    let fwd = forward_reachable(envelope, f);
    let bwd = backward_reachable(envelope, g);
    let cands: Vec<NodeId> = match candidates {
        Some(c) => c.to_vec(),
        None => (0..envelope.node_count() as u32)
            .map(NodeId)
            .filter(|h| fwd[h.index()] && bwd[h.index()])
            .collect(),
    };
    let kernel = envelope.to_kernel::<S>();
    let solver = CoverageSolver::new(&kernel);
    let mut entries: Vec<WaypointEntry<S>> = cands
        .par_iter()
        .map(|&h| {
            let (_, rc_from_source) = critical_with_solver(&solver, f, h);
            let (_, rc_to_target) = critical_with_solver(&solver, h, g);
            WaypointEntry {
                node: h,
                bound: rc_from_source.min(rc_to_target),
                is_intermediate: fwd[h.index()] && bwd[h.index()],
                rc_from_source,
                rc_to_target,
            }
        })
        .collect();
    entries.sort_by(|a, b| {
        b.bound
            .partial_cmp(&a.bound)
            .expect("coverage indices are never NaN")
            .then(a.node.cmp(&b.node))
    });
    WaypointRanking {
        source: f,
        target: g,
        entries,
    }
}

/// Per-pair reachability bundle: shortest distance, shortest-path count,
/// critical parameter, and coverage index.
#[derive(Debug, Clone, PartialEq)]
pub struct CoverageReport<S> {
    pub source: NodeId,
    pub target: NodeId,
    pub d0: Option<usize>,
    pub n_shortest: Option<BigUint>,
    pub p_c: S,
    pub r_c: S,
    pub method: String,
}

/// Bundle the reachability measures for a list of pairs on one kernel.
/// Pass a crisp envelope read back as a kernel of ones for the ideal-agent
/// semantics, or a fuzzy kernel for the membership-weighted variant.
pub fn coverage_report<S: Scalar>(
    kernel: &FuzzyKernel<S>,
    pairs: &[(NodeId, NodeId)],
) -> Vec<CoverageReport<S>> {
    let support = kernel.support();
    let solver = CoverageSolver::new(kernel);
    pairs
        .par_iter()
        .map(|&(f, g)| {
            let d0 = shortest_distance(&support, f, g);
            let n_shortest = d0.map(|d| path_counts(&support, f, g, d).count(d).clone());
            let (p_c, r_c) = critical_with_solver(&solver, f, g);
            let method = if f == g {
                "identity".to_owned()
            } else if d0.is_none() {
                "unreachable".to_owned()
            } else if PairView::new(kernel, f, g).rev_topo.is_some() {
                EvalMethod::DagExact.as_str().to_owned()
            } else {
                EvalMethod::Resolvent.as_str().to_owned()
            };
            CoverageReport {
                source: f,
                target: g,
                d0,
                n_shortest,
                p_c,
                r_c,
                method,
            }
        })
        .collect()
}

/// Membership-weighted walk mass per length: entry `n` is the sum over all
/// length-`n` walks from `f` to `g` of their membership products.  Lets the
/// tail mass of long trajectories be inspected directly.
pub fn length_weight_histogram<S: Scalar>(
    kernel: &FuzzyKernel<S>,
    f: NodeId,
    g: NodeId,
    max_length: usize,
) -> Vec<S> {
    let n = kernel.node_count();
    let mut term = vec![S::zero(); n];
    term[f.index()] = S::one();
    let mut hist = Vec::with_capacity(max_length + 1);
    hist.push(term[g.index()]);
    for _ in 1..=max_length {
        let mut next = vec![S::zero(); n];
        for (u, tu) in term.iter().enumerate() {
            if *tu == S::zero() {
                continue;
            }
            for &(v, mu) in kernel.outgoing(NodeId(u as u32)) {
                next[v as usize] += mu * *tu;
            }
        }
        term = next;
        hist.push(term[g.index()]);
    }
    hist
}

/// Polynomial evaluation of a series from explicit counts, used to
/// cross-check the solver routes against walk enumerations.
pub fn series_from_counts<S: Scalar>(counts: &[BigUint], p: S) -> S {
    let mut value = S::zero();
    let mut power = S::one();
    for c in counts {
        if !c.is_zero() {
            value += power * s::<S>(c.to_f64().unwrap_or(f64::INFINITY));
        }
        power *= p;
    }
    value
}

/// Nodes on some path from `f` to `g`: forward-reachable from `f` and
/// backward-reachable from `g`.
pub fn intermediate_nodes(envelope: &CrispEnvelope, f: NodeId, g: NodeId) -> Vec<NodeId> {
    let fwd = forward_reachable(envelope, f);
    let bwd = backward_reachable(envelope, g);
    (0..envelope.node_count() as u32)
        .map(NodeId)
        .filter(|h| fwd[h.index()] && bwd[h.index()])
        .collect()
}
