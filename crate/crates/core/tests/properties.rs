//! Property suites for the structural invariants: support/domination
//! algebra, binarization monotonicity, series monotonicity, and the
//! geometry cross-checks between distances, walk counts, and epochs.

use std::collections::BTreeMap;

use num_traits::Zero;
use proptest::prelude::*;

use covgf_core::coverage::{
    critical_parameter, critical_parameter_crisp, eval_coverage, eval_coverage_crisp,
    rank_waypoints, transitivity_check, CoverageSolver,
};
use covgf_core::geometry::{
    condense, epoch_expansion, eta_sweep, path_counts, shortest_distance, spectral_radius_bounds,
    EtaDenominator,
};
use covgf_core::ingest::{binarize_threshold, kernel_from_log, AggregatedLog};
use covgf_core::relation::{
    check_safety_domination, clip_continuation, support_envelope, CrispEnvelope, FuzzyKernel,
    NodeId, NodeTable,
};

fn table(n: usize) -> NodeTable {
    NodeTable::from_labels((0..n).map(|i| format!("n{i}"))).unwrap()
}

fn kernel_from(n: usize, edges: &[(u32, u32, f64)]) -> FuzzyKernel<f64> {
    let mut builder = FuzzyKernel::<f64>::builder(table(n));
    for &(f, g, mu) in edges {
        builder.insert(NodeId(f % n as u32), NodeId(g % n as u32), mu).ok();
    }
    builder.finish()
}

fn envelope_from(n: usize, edges: &[(u32, u32)]) -> CrispEnvelope {
    CrispEnvelope::from_edges(
        table(n),
        edges
            .iter()
            .map(|&(f, g)| (NodeId(f % n as u32), NodeId(g % n as u32))),
    )
    .unwrap()
}

fn dag_from(n: usize, edges: &[(u32, u32)]) -> CrispEnvelope {
    CrispEnvelope::from_edges(
        table(n),
        edges.iter().filter_map(|&(a, b)| {
            let (f, g) = (a % n as u32, b % n as u32);
            (f < g).then_some((NodeId(f), NodeId(g)))
        }),
    )
    .unwrap()
}

fn arb_kernel() -> impl Strategy<Value = FuzzyKernel<f64>> {
    (2usize..8, prop::collection::vec((0u32..8, 0u32..8, 0.001f64..=1.0), 0..24))
        .prop_map(|(n, edges)| kernel_from(n, &edges))
}

fn arb_envelope() -> impl Strategy<Value = CrispEnvelope> {
    (2usize..8, prop::collection::vec((0u32..8, 0u32..8), 0..24))
        .prop_map(|(n, edges)| envelope_from(n, &edges))
}

fn arb_dag() -> impl Strategy<Value = CrispEnvelope> {
    (2usize..9, prop::collection::vec((0u32..9, 0u32..9), 0..28))
        .prop_map(|(n, edges)| dag_from(n, &edges))
}

fn arb_log() -> impl Strategy<Value = AggregatedLog> {
    prop::collection::vec((0u32..6, 0u32..6, 1u64..9), 0..30).prop_map(|pairs| {
        let mut log = AggregatedLog::new();
        for (f, g, w) in pairs {
            log.add_pair(&format!("s{f}"), &format!("s{g}"), w).unwrap();
        }
        log
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn support_always_dominates(kernel in arb_kernel()) {
        let env = support_envelope(&kernel);
        let check = check_safety_domination(&kernel, &env).unwrap();
        prop_assert!(check.dominated);
    }

    #[test]
    fn support_is_idempotent_through_unit_weights(kernel in arb_kernel()) {
        let env = support_envelope(&kernel);
        prop_assert_eq!(env.clone(), support_envelope(&env.to_kernel::<f64>()));
    }

    #[test]
    fn removing_an_edge_never_grows_the_support(kernel in arb_kernel()) {
        let env = support_envelope(&kernel);
        let edges: Vec<_> = kernel.edges().collect();
        if let Some(&(rf, rg, _)) = edges.first() {
            let smaller = FuzzyKernel::from_edges(
                kernel.nodes().clone(),
                edges.iter().copied().filter(|&(f, g, _)| (f, g) != (rf, rg)),
            )
            .unwrap();
            let smaller_env = support_envelope(&smaller);
            for (f, g) in smaller_env.edges() {
                prop_assert!(env.has_edge(f, g));
            }
        }
    }

    #[test]
    fn clipping_lands_in_the_unit_interval(values in prop::collection::vec(0.0f64..10.0, 0..12)) {
        let map: BTreeMap<_, _> = values
            .iter()
            .enumerate()
            .map(|(i, &v)| ((NodeId(i as u32), NodeId(0)), v))
            .collect();
        let clipped = clip_continuation(&map).unwrap();
        for (pair, &v) in &map {
            let c = clipped[pair];
            prop_assert!((0.0..=1.0).contains(&c));
            if v <= 1.0 {
                prop_assert_eq!(c, v);
            }
        }
    }

    #[test]
    fn binarization_is_antitone_in_the_threshold(
        log in arb_log(),
        lo in 0.0f64..0.9,
        delta in 0.0f64..0.5,
    ) {
        let hi = (lo + delta).min(0.999);
        let loose = binarize_threshold(&log, lo).unwrap();
        let tight = binarize_threshold(&log, hi).unwrap();
        for (f, g) in tight.edges() {
            prop_assert!(loose.has_edge(f, g), "edge ({f:?},{g:?}) appeared when tightening");
        }
    }

    #[test]
    fn binarization_stays_inside_the_log_support(log in arb_log(), p0 in 0.0f64..1.0) {
        let env = binarize_threshold(&log, p0).unwrap();
        let support = support_envelope(&kernel_from_log::<f64>(&log));
        for (f, g) in env.edges() {
            prop_assert!(support.has_edge(f, g));
        }
    }

    #[test]
    fn log_kernel_rows_sum_to_at_most_one(log in arb_log()) {
        let kernel = kernel_from_log::<f64>(&log);
        for v in 0..kernel.node_count() as u32 {
            prop_assert!(kernel.row_sum(NodeId(v)) <= 1.0 + 1e-12);
        }
    }

    #[test]
    fn eta_is_nonincreasing_over_ascending_thresholds(log in arb_log()) {
        let thresholds: Vec<f64> = (0..12).map(|i| i as f64 / 12.0).collect();
        let points = eta_sweep(&log, &thresholds, EtaDenominator::AllNodes).unwrap();
        for w in points.windows(2) {
            prop_assert!(w[1].eta <= w[0].eta + 1e-12);
        }
    }

    #[test]
    fn distance_is_the_first_nonzero_walk_count(env in arb_envelope()) {
        let n = env.node_count();
        for f in 0..n as u32 {
            for g in 0..n as u32 {
                let table = path_counts(&env, NodeId(f), NodeId(g), n);
                match shortest_distance(&env, NodeId(f), NodeId(g)) {
                    Some(d) => prop_assert_eq!(table.first_nonzero(), Some(d)),
                    None => prop_assert_eq!(table.first_nonzero(), None),
                }
            }
        }
    }

    #[test]
    fn epoch_membership_is_distance_at_most_k(env in arb_envelope(), k in 0usize..10) {
        let n = env.node_count();
        for f in 0..n as u32 {
            let reached = epoch_expansion(&env, NodeId(f), k);
            for g in 0..n as u32 {
                let within = matches!(
                    shortest_distance(&env, NodeId(f), NodeId(g)),
                    Some(d) if d <= k
                );
                prop_assert_eq!(reached.contains(&NodeId(g)), within);
            }
        }
    }

    #[test]
    fn condensation_is_topologically_sortable(env in arb_envelope()) {
        let cond = condense(&env);
        let nc = cond.components.len();
        let mut indeg = vec![0usize; nc];
        for &(_, t) in &cond.dag_edges {
            indeg[t] += 1;
        }
        let mut queue: Vec<usize> = (0..nc).filter(|&c| indeg[c] == 0).collect();
        let mut seen = 0;
        while let Some(c) = queue.pop() {
            seen += 1;
            for &(f, t) in &cond.dag_edges {
                if f == c {
                    indeg[t] -= 1;
                    if indeg[t] == 0 {
                        queue.push(t);
                    }
                }
            }
        }
        prop_assert_eq!(seen, nc);
    }

    #[test]
    fn nilpotent_kernels_have_finitely_many_walks(env in arb_dag()) {
        let kernel = env.to_kernel::<f64>();
        let bounds = spectral_radius_bounds(&kernel);
        prop_assert!(bounds.is_nilpotent);
        let n = env.node_count();
        for f in 0..n as u32 {
            for g in 0..n as u32 {
                let table = path_counts(&env, NodeId(f), NodeId(g), n + 3);
                for len in n..=n + 3 {
                    prop_assert!(table.count(len).is_zero());
                }
                prop_assert!(table.complete);
            }
        }
    }

    #[test]
    fn coverage_is_monotone_in_p(
        kernel in arb_kernel(),
        p1 in 0.0f64..=1.0,
        p2 in 0.0f64..=1.0,
    ) {
        let (lo, hi) = if p1 <= p2 { (p1, p2) } else { (p2, p1) };
        let n = kernel.node_count() as u32;
        for f in 0..n.min(3) {
            for g in 0..n.min(3) {
                let a = eval_coverage(&kernel, NodeId(f), NodeId(g), lo).unwrap().value;
                let b = eval_coverage(&kernel, NodeId(f), NodeId(g), hi).unwrap().value;
                match (a.finite(), b.finite()) {
                    (Some(va), Some(vb)) => prop_assert!(vb >= va - 1e-9),
                    (Some(_), None) => {} // larger p diverged: still monotone
                    (None, Some(_)) => prop_assert!(false, "divergence vanished as p grew"),
                    (None, None) => {}
                }
            }
        }
    }



    #[test]
    fn transitivity_holds_on_acyclic_envelopes(env in arb_dag()) {
        let n = env.node_count() as u32;
        let grid: Vec<f64> = vec![0.1, 0.5, 0.9];
        for f in 0..n {
            for h in 0..n {
                for g in 0..n {
                    let points =
                        transitivity_check(&env, NodeId(f), NodeId(h), NodeId(g), &grid).unwrap();
                    for pt in points {
                        prop_assert!(pt.holds, "triple ({f},{h},{g}) at p={}", pt.p);
                    }
                }
            }
        }
    }



    #[test]
    fn evaluation_routes_agree_where_they_overlap(kernel in arb_kernel(), p in 0.0f64..=0.9) {
        let solver = CoverageSolver::new(&kernel);
        let p = if kernel.max_row_sum() > 0.0 {
            (p / kernel.max_row_sum()).min(0.9)
        } else {
            p
        };
        let n = kernel.node_count() as u32;
        for f in 0..n.min(3) {
            for g in 0..n.min(3) {
                let trunc = solver.eval_truncated(NodeId(f), NodeId(g), p, 1e-10);
                let resolv = solver.eval_resolvent(NodeId(f), NodeId(g), p);
                if let (Some(t), Some(r)) = (trunc, resolv) {
                    let (tv, rv) = (t.value.finite().unwrap(), r.value.finite().unwrap());
                    prop_assert!((tv - rv).abs() < 1e-8, "trunc {tv} vs resolvent {rv}");
                    if let Some(dag) = solver.eval_dag(NodeId(f), NodeId(g), p) {
                        let dv = dag.value.finite().unwrap();
                        prop_assert!((tv - dv).abs() < 1e-10);
                        prop_assert!((rv - dv).abs() < 1e-10);
                    }
                }
            }
        }
    }
}

// Bisection-heavy properties run with a smaller case budget.
proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn critical_parameter_brackets_the_unit_threshold(env in arb_envelope()) {
        let n = env.node_count() as u32;
        for f in 0..n.min(3) {
            for g in 0..n.min(3) {
                if f == g {
                    continue;
                }
                let (p_c, r_c) = critical_parameter_crisp::<f64>(&env, NodeId(f), NodeId(g));
                prop_assert!((p_c + r_c - 1.0).abs() < 1e-15);
                if shortest_distance(&env, NodeId(f), NodeId(g)).is_none() {
                    prop_assert_eq!(p_c, 1.0);
                    continue;
                }
                let below = (p_c - 1e-6).clamp(0.0, 1.0);
                let above = (p_c + 1e-6).clamp(0.0, 1.0);
                if below > 0.0 {
                    let v = eval_coverage_crisp(&env, NodeId(f), NodeId(g), below).unwrap().value;
                    if let Some(v) = v.finite() {
                        prop_assert!(v < 1.0 + 1e-6, "P({below}) = {v} below p_c = {p_c}");
                    }
                }
                if p_c < 1.0 {
                    let v = eval_coverage_crisp(&env, NodeId(f), NodeId(g), above).unwrap().value;
                    prop_assert!(v.at_least_one() || v.finite().unwrap() >= 1.0 - 1e-6);
                }
            }
        }
    }

    #[test]
    fn deleting_edges_never_decreases_pc(env in arb_envelope()) {
        let edges: Vec<_> = env.edges().collect();
        if edges.is_empty() {
            return Ok(());
        }
        let removed = [edges[edges.len() / 2]];
        let tightened = env.without_edges(&removed);
        let n = env.node_count() as u32;
        for f in 0..n.min(3) {
            for g in 0..n.min(3) {
                let (before, _) = critical_parameter_crisp::<f64>(&env, NodeId(f), NodeId(g));
                let (after, _) = critical_parameter_crisp::<f64>(&tightened, NodeId(f), NodeId(g));
                prop_assert!(
                    after >= before - 1e-9,
                    "pair ({f},{g}): p_c dropped from {before} to {after}"
                );
            }
        }
    }

    #[test]
    fn waypoint_bounds_never_exceed_the_direct_coverage_index(env in arb_dag()) {
        let n = env.node_count() as u32;
        for f in 0..n.min(3) {
            for g in 0..n.min(3) {
                let (_, rc) = critical_parameter_crisp::<f64>(&env, NodeId(f), NodeId(g));
                let ranking = rank_waypoints::<f64>(&env, NodeId(f), NodeId(g), None);
                for entry in &ranking.entries {
                    prop_assert!(
                        entry.bound <= rc + 1e-9,
                        "candidate {:?} certifies {} above R_c = {rc}",
                        entry.node,
                        entry.bound
                    );
                }
            }
        }
    }

    #[test]
    fn fuzzy_critical_parameters_dominate_their_crisp_support(log in arb_log()) {
        // Pointwise mu <= 1 forces P_fuzzy <= P_crisp, hence larger p_c.
        let fuzzy = kernel_from_log::<f64>(&log);
        let crisp = fuzzy.support().to_kernel::<f64>();
        let n = fuzzy.node_count() as u32;
        for f in 0..n.min(3) {
            for g in 0..n.min(3) {
                let (pc_fuzzy, _) = critical_parameter(&fuzzy, NodeId(f), NodeId(g));
                let (pc_crisp, _) = critical_parameter(&crisp, NodeId(f), NodeId(g));
                prop_assert!(pc_fuzzy >= pc_crisp - 1e-9);
            }
        }
    }
}
