//! End-to-end behavior of the binary against the bundled fixtures: output
//! shapes, error reporting, exit codes, and the verify negative control.

use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_covgf")
}

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name)
}

fn covgf(args: &[&str]) -> Output {
    Command::new(bin()).args(args).output().unwrap()
}

fn stdout_of(args: &[&str]) -> String {
    let out = covgf(args);
    assert!(
        out.status.success(),
        "covgf {args:?} failed with {:?}: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

#[test]
fn measure_reports_the_lattice_pair() {
    let input = fixture("lattice_n5.json");
    let csv = stdout_of(&[
        "measure",
        "--input",
        input.to_str().unwrap(),
        "--pairs",
        "(0,0)->(3,4)",
    ]);
    assert!(csv.starts_with("# covgf"));
    assert!(csv.contains("config_hash"));
    let row = csv.lines().last().unwrap();
    let fields: Vec<&str> = row.split("\",").collect();
    assert!(row.starts_with("\"(0,0)\",\"(3,4)\""), "row: {row}");
    let tail: Vec<&str> = fields.last().unwrap().split(',').collect();
    assert_eq!(tail[0], "7", "d0 column: {row}");
    assert_eq!(tail[1], "35", "n_shortest column: {row}");
    let p_c: f64 = tail[2].parse().unwrap();
    assert!((p_c - 35f64.powf(-1.0 / 7.0)).abs() < 1e-6, "p_c {p_c}");
    let r_c: f64 = tail[3].parse().unwrap();
    assert!((p_c + r_c - 1.0).abs() < 1e-12);
    assert_eq!(tail[4], "dag_exact");
}

#[test]
fn measure_with_p_appends_clipped_coverage() {
    let input = fixture("lattice_n5.json");
    let csv = stdout_of(&[
        "measure",
        "--input",
        input.to_str().unwrap(),
        "--pairs",
        "(0,0)->(3,4)",
        "--p",
        "0.5",
    ]);
    assert!(csv.contains("p,coverage_clipped"));
    let row = csv.lines().last().unwrap();
    let cols: Vec<&str> = row.rsplit(',').collect();
    let clipped: f64 = cols[0].parse().unwrap();
    assert!((clipped - 0.2734375).abs() < 1e-12, "clipped {clipped}");
}

#[test]
fn eta_sweep_on_a_dag_log_is_all_zero() {
    let input = fixture("dag_log.jsonl");
    let csv = stdout_of(&[
        "eta-sweep",
        "--input",
        input.to_str().unwrap(),
        "--thresholds",
        "0:0.9:0.1",
    ]);
    let mut rows = 0;
    for line in csv.lines().filter(|l| !l.starts_with('#') && !l.starts_with("p0")) {
        let eta = line.split(',').nth(1).unwrap();
        assert_eq!(eta, "0", "line: {line}");
        rows += 1;
    }
    assert_eq!(rows, 10);
}

#[test]
fn binarize_prunes_weak_cycles_at_the_threshold() {
    let dir = tempfile::tempdir().unwrap();
    let input = fixture("planted_cycle_log.jsonl");
    let loose = dir.path().join("loose.json");
    let tight = dir.path().join("tight.json");
    for (p0, path) in [("0", &loose), ("0.1", &tight)] {
        let out = covgf(&[
            "binarize",
            "--input",
            input.to_str().unwrap(),
            "--p0",
            p0,
            "--output",
            path.to_str().unwrap(),
        ]);
        assert!(out.status.success());
    }
    let count_edges = |path: &PathBuf| {
        let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap();
        v["edges"].as_array().unwrap().len()
    };
    // The two weak return edges (r = 0.1) survive only below the threshold.
    assert_eq!(count_edges(&loose), 25);
    assert_eq!(count_edges(&tight), 23);
}

#[test]
fn scc_summarizes_planted_supernodes() {
    let dir = tempfile::tempdir().unwrap();
    let env_path = dir.path().join("env.json");
    let out = covgf(&[
        "binarize",
        "--input",
        fixture("planted_cycle_log.jsonl").to_str().unwrap(),
        "--p0",
        "0",
        "--output",
        env_path.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let json = stdout_of(&["scc", "--input", env_path.to_str().unwrap()]);
    let v: serde_json::Value = serde_json::from_str(&json).unwrap();
    assert_eq!(v["supernode_count"], 2);
    assert_eq!(v["nodes_in_supernodes"], 4);
    let supernode = v["components"]
        .as_array()
        .unwrap()
        .iter()
        .find(|c| c["kind"] == "supernode")
        .unwrap();
    assert_eq!(supernode["size"], 2);
    assert_eq!(supernode["internal_edges"], 2);
}

#[test]
fn ingest_recovers_from_dirty_logs_and_reports_lines() {
    let dir = tempfile::tempdir().unwrap();
    let log = dir.path().join("dirty.jsonl");
    fs::write(
        &log,
        concat!(
            "{\"from\": \"a\", \"to\": \"b\"}\n",
            "garbage\n",
            "{\"from\": \"a\", \"to\": \"c\", \"weight\": 2}\n",
        ),
    )
    .unwrap();
    let kernel_path = dir.path().join("kernel.json");
    let out = covgf(&[
        "ingest",
        "--input",
        log.to_str().unwrap(),
        "--output",
        kernel_path.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("line 2"), "stderr: {stderr}");
    assert!(stderr.contains("1 malformed"), "stderr: {stderr}");
    let v: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&kernel_path).unwrap()).unwrap();
    // n_in(a) = 3: both surviving records aggregate into frequencies 1/3, 2/3.
    let edges = v["edges"].as_array().unwrap();
    assert_eq!(edges.len(), 2);
}

#[test]
fn transcript_ingest_builds_the_majority_vote_kernel() {
    let out = covgf(&[
        "ingest",
        "--input",
        fixture("transcripts_n3.jsonl").to_str().unwrap(),
        "--format",
        "transcript",
        "--n",
        "3",
        "--target",
        "1,2",
    ]);
    assert!(out.status.success());
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("1 without a strict majority"), "stderr: {stderr}");
    assert!(stderr.contains("2 flagged"), "stderr: {stderr}");
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let edges = v["edges"].as_array().unwrap();
    // model-a votes on 8 states, model-b on 7 (one split), agreeing on 4.
    assert_eq!(edges.len(), 11);
    let mut halves = 0;
    let mut fulls = 0;
    for e in edges {
        match e[2].as_f64().unwrap() {
            m if (m - 0.5).abs() < 1e-12 => halves += 1,
            m if (m - 1.0).abs() < 1e-12 => fulls += 1,
            m => panic!("unexpected weight {m}"),
        }
    }
    assert_eq!((halves, fulls), (7, 4));
}

#[test]
fn export_dot_renders_nodes_edges_and_condensations() {
    let dot = stdout_of(&[
        "export-dot",
        "--input",
        fixture("lattice_n5.json").to_str().unwrap(),
    ]);
    assert!(dot.contains("// covgf"));
    assert!(dot.contains("digraph kernel"));
    assert!(dot.contains("label=\"(0,0)\""));
    assert!(dot.contains("#d62728ff"), "envelope edges render opaque");

    let dir = tempfile::tempdir().unwrap();
    let env_path = dir.path().join("env.json");
    assert!(covgf(&[
        "binarize",
        "--input",
        fixture("planted_cycle_log.jsonl").to_str().unwrap(),
        "--p0",
        "0",
        "--output",
        env_path.to_str().unwrap(),
    ])
    .status
    .success());
    let dot = stdout_of(&["export-dot", "--input", env_path.to_str().unwrap(), "--condensed"]);
    assert!(dot.contains("digraph condensation"));
    assert!(dot.contains("kind=supernode"));
}

#[test]
fn epochs_reports_breadth_first_layers() {
    let json = stdout_of(&[
        "epochs",
        "--input",
        fixture("lattice_n5.json").to_str().unwrap(),
        "--start",
        "(0,0)",
        "--epochs",
        "7",
    ]);
    let v: serde_json::Value = serde_json::from_str(&json).unwrap();
    let layers = v["layers"].as_array().unwrap();
    assert_eq!(layers.len(), 8);
    assert_eq!(layers[0]["added"], serde_json::json!(["(0,0)"]));
    let added7: Vec<&str> = layers[7]["added"]
        .as_array()
        .unwrap()
        .iter()
        .map(|s| s.as_str().unwrap())
        .collect();
    assert_eq!(added7, ["(3,4)"], "the target enters exactly at epoch 7");
}

#[test]
fn waypoints_rank_candidates_with_transitivity_sweeps() {
    let json = stdout_of(&[
        "waypoints",
        "--input",
        fixture("lattice_n5.json").to_str().unwrap(),
        "--pairs",
        "(0,0)->(3,4)",
        "--p-grid",
        "0.2:0.8:0.2",
    ]);
    let v: serde_json::Value = serde_json::from_str(&json).unwrap();
    let entries = v["rankings"][0]["entries"].as_array().unwrap();
    assert!(!entries.is_empty());
    let bounds: Vec<f64> = entries.iter().map(|e| e["bound"].as_f64().unwrap()).collect();
    assert!(bounds.windows(2).all(|w| w[0] >= w[1]), "sorted descending");
    for entry in entries {
        assert_eq!(entry["is_intermediate"], true);
        for pt in entry["transitivity"].as_array().unwrap() {
            assert_eq!(pt["holds"], true, "lattice is acyclic; bound must hold");
        }
    }
}

#[test]
fn verify_quick_passes_on_a_fresh_checkout() {
    let started = std::time::Instant::now();
    let out = covgf(&["verify", "--quick"]);
    let elapsed = started.elapsed();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stdout));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("11 of 11 checks passed"));
    assert!(elapsed.as_secs_f64() < 10.0, "--quick took {elapsed:?}, budget 10 s");
}

#[test]
fn verify_flags_a_corrupted_lattice_fixture() {
    let dir = tempfile::tempdir().unwrap();
    let corrupted = dir.path().join("lattice_corrupted.json");
    let mut v: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(fixture("lattice_n5.json")).unwrap()).unwrap();
    let edges = v["edges"].as_array_mut().unwrap();
    edges.remove(0); // drop (0,0) -> (1,0); shortest-path count collapses
    fs::write(&corrupted, serde_json::to_string(&v).unwrap()).unwrap();

    let out = covgf(&[
        "verify",
        "--quick",
        "--input",
        corrupted.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("FAIL  lattice-geometry"), "stdout: {stdout}");
    assert!(stdout.contains("n-shortest"), "the check names the mismatch: {stdout}");
}

#[test]
fn exit_codes_distinguish_error_classes() {
    // 3: missing input file.
    let out = covgf(&["scc", "--input", "/nonexistent/kernel.json"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error[io]"));

    // 4: schema violation (unknown label).
    let out = covgf(&[
        "measure",
        "--input",
        fixture("lattice_n5.json").to_str().unwrap(),
        "--pairs",
        "(0,0)->(9,9)",
    ]);
    assert_eq!(out.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error[schema]"));

    // 5: contract violation (degenerate threshold).
    let out = covgf(&[
        "binarize",
        "--input",
        fixture("dag_log.jsonl").to_str().unwrap(),
        "--p0",
        "1.0",
    ]);
    assert_eq!(out.status.code(), Some(5));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error[contract]"));

    // 2: clap usage error.
    let out = covgf(&["no-such-command"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn outputs_never_overwrite_inputs() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("kernel.json");
    fs::copy(fixture("lattice_n5.json"), &path).unwrap();
    let out = covgf(&[
        "export-dot",
        "--input",
        path.to_str().unwrap(),
        "--output",
        path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(5));
    let original = fs::read(fixture("lattice_n5.json")).unwrap();
    assert_eq!(fs::read(&path).unwrap(), original, "input left untouched");
}
