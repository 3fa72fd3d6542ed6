//! Built-in verification battery: every check compares an implementation
//! route against an independent oracle (exhaustive enumeration, closed
//! forms, combinatorial counts) or a structural expectation, and the command
//! exits nonzero when any row fails.

use std::fs;
use std::path::Path;

use rand::seq::IteratorRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use covgf_core::coverage::{
    coverage_report, critical_parameter_crisp, verify_low_order_limit, CoverageSolver,
};
use covgf_core::export::coverage_csv;
use covgf_core::geometry::{epoch_expansion, eta_sweep, path_counts, shortest_distance, EtaDenominator};
use covgf_core::grid::{builtin_grid_configs, default_policy_roster, simulate_grid_policies, GridSpec};
use covgf_core::ingest::{binarize_threshold, AggregatedLog};
use covgf_core::io::{read_envelope_json, write_kernel_json};
use covgf_core::oracle::{
    disjoint_paths_envelope, disjoint_paths_pc, double_unit_path_envelope, enumerate_walk_counts,
    enumerate_walks, planted_cycle_log, random_dag, random_dag_kernel, random_envelope,
    random_kernel, two_cycle_envelope, two_cycle_pc,
};
use covgf_core::relation::{CrispEnvelope, NodeId};
use num_bigint::BigUint;

use crate::args::VerifyArgs;
use crate::commands::{AppError, CliResult};

struct Check {
    name: &'static str,
    outcome: Result<String, String>,
}

fn run_check(name: &'static str, body: impl FnOnce() -> Result<String, String>) -> Check {
    Check {
        name,
        outcome: body(),
    }
}

pub fn verify(args: &VerifyArgs) -> CliResult {
    let lattice_override = match &args.input {
        None => None,
        Some(path) => Some(load_envelope(path)?),
    };
    let quick = args.quick;
    let seed = args.seed;

    let checks = vec![
        run_check("path-counts-vs-enumeration", || {
            path_count_check(if quick { 40 } else { 200 }, seed)
        }),
        run_check("lattice-geometry", || {
            lattice_geometry_check(lattice_override.as_ref())
        }),
        run_check("closed-form-critical-params", closed_form_check),
        run_check("method-cross-agreement", || {
            method_agreement_check(if quick { 20 } else { 100 }, seed)
        }),
        run_check("low-order-limit", || {
            low_order_check(if quick { 10 } else { 50 }, seed)
        }),
        run_check("transitivity-acyclic", || {
            transitivity_check_suite(if quick { 20 } else { 100 }, seed)
        }),
        run_check("epoch-bounds", || epoch_bound_check(seed)),
        run_check("eta-planted-cycles", eta_planted_check),
        run_check("binarize-branches", binarize_branch_check),
        run_check("edge-deletion-monotonicity", || {
            deletion_monotonicity_check(if quick { 5 } else { 20 }, seed)
        }),
        run_check("determinism", determinism_check),
    ];

    let mut failed = 0;
    for check in &checks {
        match &check.outcome {
            Ok(detail) => println!("PASS  {:<32} {detail}", check.name),
            Err(detail) => {
                failed += 1;
                println!("FAIL  {:<32} {detail}", check.name);
            }
        }
    }
    println!(
        "{} of {} checks passed",
        checks.len() - failed,
        checks.len()
    );
    if failed > 0 {
        return Err(AppError {
            kind: "check",
            code: 1,
            message: format!("{failed} verification check(s) failed"),
        });
    }
    Ok(0)
}

fn load_envelope(path: &Path) -> Result<CrispEnvelope, AppError> {
    let file = fs::File::open(path)
        .map_err(|e| AppError::io(format!("cannot open {}: {e}", path.display())))?;
    Ok(read_envelope_json(std::io::BufReader::new(file))?)
}

fn path_count_check(graphs: usize, seed: u64) -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x01);
    let mut pairs = 0usize;
    for case in 0..graphs {
        let n = 2 + rng.random_range(0..7); // up to 8 nodes
        let env = random_envelope(&mut rng, n, 0.3);
        for f in 0..n as u32 {
            for g in 0..n as u32 {
                let dp = path_counts(&env, NodeId(f), NodeId(g), 6);
                let brute = enumerate_walk_counts(&env, NodeId(f), NodeId(g), 6);
                if dp.counts != brute {
                    return Err(format!(
                        "graph {case} pair ({f},{g}): dp {:?} != enumeration {:?}",
                        dp.counts, brute
                    ));
                }
                pairs += 1;
            }
        }
    }
    Ok(format!("{graphs} graphs, {pairs} pairs, lengths <= 6"))
}

fn lattice_geometry_check(lattice_override: Option<&CrispEnvelope>) -> Result<String, String> {
    for spec in builtin_grid_configs() {
        let env = spec.monotone_lattice();
        check_lattice(&env, &spec)?;
    }
    // The 5x5 fixture may be overridden to exercise the negative control.
    let spec = GridSpec::new(5, (3, 4)).unwrap();
    if let Some(env) = lattice_override {
        check_lattice(env, &spec)?;
    }
    Ok("3 grid configs: d0 == Manhattan for all cells; N_d0 == enumeration".into())
}

fn check_lattice(env: &CrispEnvelope, spec: &GridSpec) -> Result<(), String> {
    let target = env
        .nodes()
        .lookup(&GridSpec::cell_label(spec.target.0, spec.target.1))
        .ok_or("lattice-geometry/nodes: target label missing")?;
    for (x, y) in spec.cells() {
        let f = env
            .nodes()
            .lookup(&GridSpec::cell_label(x, y))
            .ok_or_else(|| format!("lattice-geometry/nodes: cell ({x},{y}) missing"))?;
        let expected = GridSpec::manhattan((x, y), spec.target) as usize;
        let got = shortest_distance(env, f, target);
        if got != Some(expected) {
            return Err(format!(
                "lattice-geometry/d0: N={} cell ({x},{y}): d0 {got:?} != Manhattan {expected}",
                spec.n
            ));
        }
    }
    let origin = env.nodes().lookup("(0,0)").unwrap();
    let d = (spec.target.0 + spec.target.1) as usize;
    let dp = path_counts(env, origin, target, d);
    let brute = enumerate_walks(env, origin, target, d);
    if dp.count(d) != &brute {
        return Err(format!(
            "lattice-geometry/n-shortest: N={}: dp {} != enumeration {brute}",
            spec.n,
            dp.count(d)
        ));
    }
    // Independent combinatorial expectation: interleavings of the x and y
    // progress steps.  This is what catches a corrupted lattice file.
    let expected = binomial(d as u64, spec.target.0 as u64);
    if dp.count(d) != &BigUint::from(expected) {
        return Err(format!(
            "lattice-geometry/n-shortest: N={}: count {} != C({d},{}) = {expected}",
            spec.n,
            dp.count(d),
            spec.target.0
        ));
    }
    Ok(())
}

fn binomial(n: u64, k: u64) -> u64 {
    let mut acc = 1u64;
    for i in 0..k {
        acc = acc * (n - i) / (i + 1);
    }
    acc
}

fn closed_form_check() -> Result<String, String> {
    for (k, n) in [(3u32, 2u32), (35, 7)] {
        let (env, f, g) = disjoint_paths_envelope(k, n);
        let (p_c, _) = critical_parameter_crisp::<f64>(&env, f, g);
        let expected = disjoint_paths_pc(k, n);
        if (p_c - expected).abs() > 1e-6 {
            return Err(format!("k={k} n={n}: bisection {p_c} vs closed form {expected}"));
        }
    }
    let (env, f, g) = double_unit_path_envelope();
    let (p_c, _) = critical_parameter_crisp::<f64>(&env, f, g);
    if (p_c - disjoint_paths_pc(2, 1)).abs() > 1e-6 {
        return Err(format!("double unit path: bisection {p_c} vs 0.5"));
    }
    let (env, f, g) = two_cycle_envelope();
    let (p_c, _) = critical_parameter_crisp::<f64>(&env, f, g);
    if (p_c - two_cycle_pc()).abs() > 1e-6 {
        return Err(format!("two-cycle: bisection {p_c} vs {}", two_cycle_pc()));
    }
    Ok("(2,1), (3,2), (35,7) and the two-node cycle within 1e-6".into())
}

fn method_agreement_check(kernels: usize, seed: u64) -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x04);
    for case in 0..kernels {
        let n = 5 + rng.random_range(0..46); // up to 50 nodes
        let kernel = if case % 4 == 0 {
            random_dag_kernel::<f64, _>(&mut rng, n, 0.12)
        } else {
            random_kernel::<f64, _>(&mut rng, n, 0.08)
        };
        let solver = CoverageSolver::new(&kernel);
        let row_max = kernel.max_row_sum();
        let p = if row_max > 0.0 {
            (0.9 / row_max).min(0.9)
        } else {
            0.5
        };
        for _ in 0..4 {
            let f = NodeId(rng.random_range(0..n as u32));
            let g = NodeId(rng.random_range(0..n as u32));
            let trunc = solver
                .eval_truncated(f, g, p, 1e-10)
                .ok_or("truncated route unavailable despite p * row_max < 1")?;
            let resolv = solver
                .eval_resolvent(f, g, p)
                .ok_or("resolvent route unavailable despite p * row_max < 1")?;
            let (tv, rv) = (
                trunc.value.finite().unwrap(),
                resolv.value.finite().unwrap(),
            );
            if (tv - rv).abs() > 1e-8 {
                return Err(format!(
                    "case {case} pair ({},{}) p={p}: truncated {tv} vs resolvent {rv}",
                    f.0, g.0
                ));
            }
            if let Some(dag) = solver.eval_dag(f, g, p) {
                let dv = dag.value.finite().unwrap();
                if (tv - dv).abs() > 1e-10 || (rv - dv).abs() > 1e-10 {
                    return Err(format!(
                        "case {case}: dag {dv} vs truncated {tv} / resolvent {rv}"
                    ));
                }
            }
        }
    }
    Ok(format!("{kernels} kernels <= 50 nodes, p·row_max <= 0.9"))
}

fn low_order_check(dags: usize, seed: u64) -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x05);
    let mut sampled = 0usize;
    for case in 0..dags {
        let env = random_dag(&mut rng, 10, 0.35);
        let reachable: Vec<(u32, u32)> = (0..10u32)
            .flat_map(|f| (0..10u32).map(move |g| (f, g)))
            .filter(|&(f, g)| {
                f != g && shortest_distance(&env, NodeId(f), NodeId(g)).is_some()
            })
            .collect();
        for &(f, g) in reachable.iter().choose_multiple(&mut rng, 20) {
            let check = verify_low_order_limit(&env, NodeId(f), NodeId(g), 1e-3_f64)
                .map_err(|e| format!("case {case}: {e}"))?;
            let expected: f64 = check.expected.to_string().parse().unwrap();
            let rel = (check.ratio - expected).abs() / expected;
            if rel > 0.01 {
                return Err(format!(
                    "case {case} pair ({f},{g}): ratio {} vs N_d0 {expected} (rel {rel})",
                    check.ratio
                ));
            }
            sampled += 1;
        }
    }
    Ok(format!("{dags} DAGs, {sampled} reachable pairs at p = 1e-3"))
}

fn transitivity_check_suite(dags: usize, seed: u64) -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x06);
    let grid: Vec<f64> = (1..=9).map(|i| i as f64 / 10.0).collect();
    for case in 0..dags {
        let n = 4 + rng.random_range(0..9); // up to 12 nodes
        let env = random_dag(&mut rng, n, 0.3);
        let kernel = env.to_kernel::<f64>();
        let solver = CoverageSolver::new(&kernel);
        for &p in &grid {
            // One DP pass per target yields P_{u,v}(p) for all pairs.
            let mut table = vec![vec![0.0f64; n]; n];
            for g in 0..n as u32 {
                let column = solver.eval_dag_vector(NodeId(g), p).expect("DAG fixture");
                for u in 0..n {
                    table[u][g as usize] = column[u];
                }
            }
            for f in 0..n {
                for h in 0..n {
                    for g in 0..n {
                        if table[f][g] < table[f][h] * table[h][g] - 1e-12 {
                            return Err(format!(
                                "case {case} triple ({f},{h},{g}) p={p}: {} < {}",
                                table[f][g],
                                table[f][h] * table[h][g]
                            ));
                        }
                    }
                }
            }
        }
    }
    // Known cyclic counterexample: the crisp self-loop must be *detected* as
    // a violation rather than crash or pass silently.
    let table = covgf_core::relation::NodeTable::from_labels(["f"]).unwrap();
    let env = CrispEnvelope::from_edges(table, [(NodeId(0), NodeId(0))]).unwrap();
    let points = covgf_core::coverage::transitivity_check(
        &env,
        NodeId(0),
        NodeId(0),
        NodeId(0),
        &[0.5f64],
    )
    .map_err(|e| e.to_string())?;
    if points[0].holds {
        return Err("self-loop counterexample was not detected".into());
    }
    Ok(format!(
        "{dags} acyclic envelopes, all triples, p in 0.1..0.9; cyclic counterexample detected"
    ))
}

fn epoch_bound_check(seed: u64) -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x07);
    let spec = GridSpec::new(5, (3, 4)).unwrap();
    let env = spec.monotone_lattice();
    let target = env.nodes().lookup("(3,4)").unwrap();
    for _ in 0..10 {
        let (x, y) = loop {
            let cell = (rng.random_range(0..5u32), rng.random_range(0..5u32));
            if cell != spec.target {
                break cell;
            }
        };
        let start = env.nodes().lookup(&GridSpec::cell_label(x, y)).unwrap();
        let d0 = shortest_distance(&env, start, target)
            .ok_or_else(|| format!("cell ({x},{y}) cannot reach the target"))?;
        if epoch_expansion(&env, start, d0 - 1).contains(&target) {
            return Err(format!("cell ({x},{y}): target reached before d0 = {d0}"));
        }
        if !epoch_expansion(&env, start, d0).contains(&target) {
            return Err(format!("cell ({x},{y}): target missing at d0 = {d0}"));
        }
    }
    Ok("10 random starts on the 5x5 lattice: unreachable at d0-1, reached at d0".into())
}

fn eta_planted_check() -> Result<String, String> {
    let (log, planted) = planted_cycle_log(100, 3, 0.1);
    let thresholds: Vec<f64> = (0..20).map(|i| i as f64 * 0.045).collect();
    let points = eta_sweep(&log, &thresholds, EtaDenominator::ActiveNodes)
        .map_err(|e| e.to_string())?;
    for w in points.windows(2) {
        if w[1].eta > w[0].eta + 1e-12 {
            return Err(format!(
                "eta increased from {} to {} between p0={} and p0={}",
                w[0].eta, w[1].eta, w[0].p0, w[1].p0
            ));
        }
    }
    let expected = planted as f64 / points[0].total_nodes as f64;
    if (points[0].eta - expected).abs() > 1e-12 {
        return Err(format!(
            "eta(0) = {} but the planted fraction is {expected}",
            points[0].eta
        ));
    }
    let last = points.last().unwrap();
    if last.eta != 0.0 {
        return Err(format!("eta({}) = {} did not reach zero", last.p0, last.eta));
    }
    // All cycles disappear exactly once the weak edges (r = 0.1) are pruned.
    for pt in &points {
        let should_be_zero = pt.p0 >= 0.1;
        if should_be_zero && pt.eta != 0.0 {
            return Err(format!("eta({}) = {} after the weak edges", pt.p0, pt.eta));
        }
    }
    Ok(format!(
        "20-point sweep: nonincreasing, eta(0) = {expected:.4}, zero past the weak edges"
    ))
}

fn binarize_branch_check() -> Result<String, String> {
    // Branch 1: unstable input (n_in <= 1) is dropped even at r = 1.
    let mut log = AggregatedLog::new();
    log.add_pair("f", "g", 1).unwrap();
    let env = binarize_threshold(&log, 0.1).map_err(|e| e.to_string())?;
    if env.edge_count() != 0 {
        return Err("n_in <= 1 branch kept an edge".into());
    }
    // Branch 2: boundary r == p0 is excluded.
    let mut log = AggregatedLog::new();
    log.add_pair("f", "g", 1).unwrap();
    log.add_pair("f", "h", 9).unwrap();
    let env = binarize_threshold(&log, 0.1).map_err(|e| e.to_string())?;
    let f = log.nodes().lookup("f").unwrap();
    let g = log.nodes().lookup("g").unwrap();
    let h = log.nodes().lookup("h").unwrap();
    if env.has_edge(f, g) || !env.has_edge(f, h) {
        return Err("r <= p0 branch produced the wrong edge set".into());
    }
    // Branch 3: stable and frequent passes.
    let mut log = AggregatedLog::new();
    log.add_pair("f", "g", 5).unwrap();
    log.add_pair("f", "h", 5).unwrap();
    let env = binarize_threshold(&log, 0.1).map_err(|e| e.to_string())?;
    if env.edge_count() != 2 {
        return Err("keep branch lost an edge".into());
    }
    Ok("all three binarization branches give the exact expected edge sets".into())
}

fn deletion_monotonicity_check(graphs: usize, seed: u64) -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x0a);
    for case in 0..graphs {
        let n = 5 + rng.random_range(0..6); // up to 10 nodes
        let env = random_envelope(&mut rng, n, 0.25);
        let edges: Vec<_> = env.edges().collect();
        if edges.is_empty() {
            continue;
        }
        let removed: Vec<_> = edges
            .iter()
            .copied()
            .choose_multiple(&mut rng, 10.min(edges.len()));
        let tightened = env.without_edges(&removed);
        for f in 0..n as u32 {
            for g in 0..n as u32 {
                let (before, _) = critical_parameter_crisp::<f64>(&env, NodeId(f), NodeId(g));
                let (after, _) =
                    critical_parameter_crisp::<f64>(&tightened, NodeId(f), NodeId(g));
                if after < before - 1e-9 {
                    return Err(format!(
                        "case {case} pair ({f},{g}): p_c dropped from {before} to {after}"
                    ));
                }
            }
        }
    }
    Ok(format!("{graphs} graphs, all pairs, 10 deleted edges each"))
}

fn determinism_check() -> Result<String, String> {
    let spec = GridSpec::new(5, (3, 4)).unwrap();
    let roster = default_policy_roster(8, 7);
    let serialize = || -> Vec<u8> {
        let out = simulate_grid_policies::<f64>(&spec, &roster, 5).unwrap();
        let mut bytes = Vec::new();
        write_kernel_json(&mut bytes, &out.kernel, None).unwrap();
        bytes
    };
    if serialize() != serialize() {
        return Err("simulate-grid kernels differ across identical runs".into());
    }
    let env = spec.monotone_lattice();
    let kernel = env.to_kernel::<f64>();
    let origin = env.nodes().lookup("(0,0)").unwrap();
    let target = env.nodes().lookup("(3,4)").unwrap();
    let csv = || {
        let reports = coverage_report(&kernel, &[(origin, target)]);
        coverage_csv(&reports, kernel.nodes(), None, Some("determinism"))
    };
    if csv() != csv() {
        return Err("measure output differs across identical runs".into());
    }
    Ok("simulate-grid and measure outputs are byte-identical across reruns".into())
}
