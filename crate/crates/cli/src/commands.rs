use std::fs;
use std::io::{BufReader, Write};
use std::path::Path;

use serde::Serialize;

use covgf_core::coverage::{
    coverage_report, rank_waypoints, transitivity_check, CoverageSolver, CoverageValue,
};
use covgf_core::export::{condensed_dot, coverage_csv, eta_csv, kernel_dot};
use covgf_core::geometry::{condense, distances_from, eta_sweep, ComponentKind, EtaDenominator};
use covgf_core::grid::{
    default_policy_roster, kernel_from_transcripts, read_transcripts_jsonl,
    simulate_grid_policies, write_transcripts_jsonl, GridSpec,
};
use covgf_core::ingest::{aggregate_jsonl, binarize_threshold, kernel_from_log, IngestReport};
use covgf_core::io::{read_kernel_json, write_kernel_json, FileMeta};
use covgf_core::relation::{clip_unit, CrispEnvelope, FuzzyKernel, NodeId, NodeTable};

use crate::args::{
    BinarizeArgs, EpochsArgs, EtaDenominatorArg, EtaSweepArgs, ExportDotArgs, IngestArgs,
    IngestFormat, MeasureArgs, SccArgs, SimulateGridArgs, WaypointsArgs,
};
use crate::meta::{canonical_config, file_meta, text_header};

/// CLI failure with a stable category and exit code: 1 check failure,
/// 3 I/O, 4 parse/schema, 5 contract/structural violation.
#[derive(Debug)]
pub struct AppError {
    pub kind: &'static str,
    pub code: i32,
    pub message: String,
}

impl AppError {
    pub fn io(message: impl Into<String>) -> Self {
        Self {
            kind: "io",
            code: 3,
            message: message.into(),
        }
    }

    pub fn schema(message: impl Into<String>) -> Self {
        Self {
            kind: "schema",
            code: 4,
            message: message.into(),
        }
    }

    pub fn contract(message: impl Into<String>) -> Self {
        Self {
            kind: "contract",
            code: 5,
            message: message.into(),
        }
    }
}

impl From<covgf_core::Error> for AppError {
    fn from(e: covgf_core::Error) -> Self {
        use covgf_core::Error as E;
        match &e {
            E::Io(_) => AppError::io(e.to_string()),
            E::Json(_) | E::Schema(_) | E::DuplicateLabel(_) | E::InvalidRecord(_)
            | E::EmptyLabel => AppError::schema(e.to_string()),
            _ => AppError::contract(e.to_string()),
        }
    }
}

impl From<std::io::Error> for AppError {
    fn from(e: std::io::Error) -> Self {
        AppError::io(e.to_string())
    }
}

pub type CliResult = Result<i32, AppError>;

fn open_reader(path: &Path) -> Result<BufReader<fs::File>, AppError> {
    fs::File::open(path)
        .map(BufReader::new)
        .map_err(|e| AppError::io(format!("cannot open {}: {e}", path.display())))
}

fn load_kernel(path: &Path) -> Result<FuzzyKernel<f64>, AppError> {
    read_kernel_json::<f64, _>(open_reader(path)?)
        .map_err(|e| AppError::from(e).with_context(path))
}

impl AppError {
    fn with_context(mut self, path: &Path) -> Self {
        self.message = format!("{}: {}", path.display(), self.message);
        self
    }
}

/// Refuse to write over any input file: commands never mutate their inputs.
fn write_output(output: Option<&Path>, inputs: &[&Path], bytes: &[u8]) -> Result<(), AppError> {
    match output {
        None => {
            std::io::stdout().write_all(bytes)?;
            Ok(())
        }
        Some(path) => {
            for input in inputs {
                if paths_alias(path, input) {
                    return Err(AppError::contract(format!(
                        "output {} would overwrite an input file",
                        path.display()
                    )));
                }
            }
            fs::write(path, bytes)
                .map_err(|e| AppError::io(format!("cannot write {}: {e}", path.display())))
        }
    }
}

fn paths_alias(a: &Path, b: &Path) -> bool {
    let resolve = |p: &Path| fs::canonicalize(p).unwrap_or_else(|_| p.to_path_buf());
    resolve(a) == resolve(b)
}

fn report_line_errors(report: &IngestReport) {
    if report.errors.is_empty() {
        return;
    }
    eprintln!("{} malformed line(s) skipped:", report.errors.len());
    for err in report.errors.iter().take(5) {
        eprintln!("  line {}: {}", err.line, err.message);
    }
    if report.errors.len() > 5 {
        eprintln!("  ... and {} more", report.errors.len() - 5);
    }
}

fn parse_target(value: &str) -> Result<(u32, u32), AppError> {
    let raw = value.trim();
    let raw = raw.strip_prefix('(').unwrap_or(raw);
    let raw = raw.strip_suffix(')').unwrap_or(raw);
    let (x, y) = raw
        .split_once(',')
        .ok_or_else(|| AppError::schema(format!("target '{value}' is not of the form x,y")))?;
    let parse = |s: &str| {
        s.trim()
            .parse::<u32>()
            .map_err(|_| AppError::schema(format!("target coordinate '{s}' is not an integer")))
    };
    Ok((parse(x)?, parse(y)?))
}

/// Parse an inclusive "a:b:step" grid.
fn parse_range(value: &str) -> Result<Vec<f64>, AppError> {
    let parts: Vec<&str> = value.split(':').collect();
    if parts.len() != 3 {
        return Err(AppError::schema(format!(
            "range '{value}' is not of the form a:b:step"
        )));
    }
    let nums: Vec<f64> = parts
        .iter()
        .map(|p| {
            p.trim()
                .parse::<f64>()
                .map_err(|_| AppError::schema(format!("range component '{p}' is not a number")))
        })
        .collect::<Result<_, _>>()?;
    let (a, b, step) = (nums[0], nums[1], nums[2]);
    if step <= 0.0 || b < a {
        return Err(AppError::schema(format!(
            "range '{value}' needs a <= b and step > 0"
        )));
    }
    let count = ((b - a) / step + 1e-9).floor() as usize;
    // Snap to the 1e-9 grid that binarization resolves thresholds on.
    Ok((0..=count)
        .map(|k| ((a + k as f64 * step) * 1e9).round() / 1e9)
        .collect())
}

/// Pairs come inline ("f->g;f2->g2"), or from a file: a JSON array of
/// two-element arrays, or lines "f -> g".
fn parse_pair_labels(value: &str) -> Result<Vec<(String, String)>, AppError> {
    let path = Path::new(value);
    if path.exists() {
        let text = fs::read_to_string(path)
            .map_err(|e| AppError::io(format!("cannot read {}: {e}", path.display())))?;
        if path.extension().is_some_and(|e| e == "json") {
            let pairs: Vec<(String, String)> = serde_json::from_str(&text)
                .map_err(|e| AppError::schema(format!("{}: {e}", path.display())))?;
            return Ok(pairs);
        }
        return text
            .lines()
            .filter(|l| !l.trim().is_empty())
            .map(split_pair)
            .collect();
    }
    value
        .split(';')
        .filter(|s| !s.trim().is_empty())
        .map(split_pair)
        .collect()
}

fn split_pair(raw: &str) -> Result<(String, String), AppError> {
    raw.split_once("->")
        .map(|(f, g)| (f.trim().to_owned(), g.trim().to_owned()))
        .ok_or_else(|| AppError::schema(format!("pair '{raw}' is not of the form f->g")))
}

fn resolve_label(nodes: &NodeTable, label: &str) -> Result<NodeId, AppError> {
    nodes
        .lookup(label)
        .ok_or_else(|| AppError::schema(format!("unknown node label '{label}'")))
}

fn resolve_pairs(nodes: &NodeTable, value: &str) -> Result<Vec<(NodeId, NodeId)>, AppError> {
    parse_pair_labels(value)?
        .iter()
        .map(|(f, g)| Ok((resolve_label(nodes, f)?, resolve_label(nodes, g)?)))
        .collect()
}

fn json_bytes<T: Serialize>(value: &T) -> Result<Vec<u8>, AppError> {
    let mut bytes = serde_json::to_vec_pretty(value)
        .map_err(|e| AppError::schema(format!("serialization failed: {e}")))?;
    bytes.push(b'\n');
    Ok(bytes)
}

pub fn ingest(args: &IngestArgs) -> CliResult {
    let config = canonical_config(
        "ingest",
        &[
            ("input", args.input.display().to_string()),
            ("format", format!("{:?}", args.format).to_lowercase()),
            ("samples", args.samples.to_string()),
        ],
    );
    let kernel = match args.format {
        IngestFormat::Log => {
            let (log, report) = aggregate_jsonl(open_reader(&args.input)?)?;
            report_line_errors(&report);
            eprintln!(
                "aggregated {} records ({} skipped): {} nodes, {} pairs",
                report.records,
                report.errors.len(),
                log.node_count(),
                log.total_pairs()
            );
            kernel_from_log::<f64>(&log)
        }
        IngestFormat::Transcript => {
            let (records, report) = read_transcripts_jsonl(open_reader(&args.input)?)?;
            report_line_errors(&report);
            let grid = match (args.n, &args.target) {
                (Some(n), Some(t)) => Some(GridSpec::new(n, parse_target(t)?)?),
                _ => None,
            };
            let (kernel, transcript_report) =
                kernel_from_transcripts::<f64>(&records, args.samples, grid.as_ref())?;
            eprintln!(
                "aggregated {} groups: {} without a strict majority, {} flagged decision(s)",
                transcript_report.groups,
                transcript_report.no_majority,
                transcript_report.violations.len()
            );
            for v in transcript_report.violations.iter().take(5) {
                eprintln!(
                    "  flagged: model={} state={} decision={} ({})",
                    v.model, v.state, v.decision, v.reason
                );
            }
            kernel
        }
    };
    let mut bytes = Vec::new();
    write_kernel_json(&mut bytes, &kernel, Some(file_meta(&config)))?;
    write_output(args.output.as_deref(), &[&args.input], &bytes)?;
    Ok(0)
}

pub fn binarize(args: &BinarizeArgs) -> CliResult {
    let config = canonical_config(
        "binarize",
        &[
            ("input", args.input.display().to_string()),
            ("p0", args.p0.to_string()),
        ],
    );
    let (log, report) = aggregate_jsonl(open_reader(&args.input)?)?;
    report_line_errors(&report);
    let envelope = binarize_threshold(&log, args.p0)?;
    eprintln!(
        "binarized at p0={}: {} nodes, {} edges",
        args.p0,
        envelope.node_count(),
        envelope.edge_count()
    );
    let mut bytes = Vec::new();
    covgf_core::io::write_envelope_json(&mut bytes, &envelope, Some(file_meta(&config)))?;
    write_output(args.output.as_deref(), &[&args.input], &bytes)?;
    Ok(0)
}

pub fn simulate_grid(args: &SimulateGridArgs) -> CliResult {
    let target = parse_target(&args.target)?;
    let config = canonical_config(
        "simulate-grid",
        &[
            ("n", args.n.to_string()),
            ("target", format!("{},{}", target.0, target.1)),
            ("models", args.models.to_string()),
            ("samples", args.samples.to_string()),
            ("seed", args.seed.to_string()),
        ],
    );
    let spec = GridSpec::new(args.n, target)?;
    let roster = default_policy_roster(args.models, args.seed);
    let out = simulate_grid_policies::<f64>(&spec, &roster, args.samples)?;
    for w in &out.warnings {
        eprintln!("warning: {w}");
    }
    let mut bytes = Vec::new();
    write_kernel_json(&mut bytes, &out.kernel, Some(file_meta(&config)))?;
    write_output(args.output.as_deref(), &[], &bytes)?;
    if let Some(path) = &args.transcripts {
        let mut tbytes = Vec::new();
        write_transcripts_jsonl(&mut tbytes, &out.transcripts)?;
        write_output(Some(path), &[], &tbytes)?;
    }
    eprintln!(
        "simulated {} policies x {} cells x {} samples: {} kernel edges",
        args.models,
        spec.n * spec.n - 1,
        args.samples,
        out.kernel.edge_count()
    );
    Ok(0)
}

pub fn measure(args: &MeasureArgs) -> CliResult {
    let config = canonical_config(
        "measure",
        &[
            ("input", args.input.display().to_string()),
            ("pairs", args.pairs.clone()),
            ("fuzzy", args.fuzzy.to_string()),
            (
                "p",
                args.p.map(|p| p.to_string()).unwrap_or_else(|| "none".into()),
            ),
        ],
    );
    let loaded = load_kernel(&args.input)?;
    let kernel = if args.fuzzy {
        loaded
    } else {
        loaded.support().to_kernel::<f64>()
    };
    let pairs = resolve_pairs(kernel.nodes(), &args.pairs)?;
    let reports = coverage_report(&kernel, &pairs);
    let at_p = match args.p {
        None => None,
        Some(p) => {
            let solver = CoverageSolver::new(&kernel);
            let mut values = Vec::with_capacity(pairs.len());
            for &(f, g) in &pairs {
                let eval = solver.eval(f, g, p)?;
                let clipped = match eval.value {
                    CoverageValue::Finite(v) if v.is_finite() => clip_unit(v)?,
                    _ => 1.0,
                };
                values.push((p, clipped));
            }
            Some(values)
        }
    };
    let csv = coverage_csv(&reports, kernel.nodes(), at_p.as_deref(), Some(&text_header(&config)));
    write_output(args.output.as_deref(), &[&args.input], csv.as_bytes())?;
    Ok(0)
}

#[derive(Serialize)]
struct SccComponentOut {
    id: usize,
    kind: &'static str,
    size: usize,
    internal_edges: usize,
    members: Vec<String>,
}

#[derive(Serialize)]
struct SccOut {
    meta: FileMeta,
    node_count: usize,
    component_count: usize,
    supernode_count: usize,
    nodes_in_supernodes: usize,
    components: Vec<SccComponentOut>,
    dag_edges: Vec<(usize, usize)>,
}

pub fn scc(args: &SccArgs) -> CliResult {
    let config = canonical_config("scc", &[("input", args.input.display().to_string())]);
    let envelope = load_kernel(&args.input)?.support();
    let cond = condense(&envelope);
    let components = cond
        .components
        .iter()
        .enumerate()
        .map(|(id, comp)| {
            let internal_edges = comp
                .iter()
                .map(|&f| {
                    envelope
                        .out(f)
                        .iter()
                        .filter(|&&g| cond.component_of[g as usize] == id)
                        .count()
                })
                .sum();
            SccComponentOut {
                id,
                kind: match cond.kinds[id] {
                    ComponentKind::Supernode => "supernode",
                    ComponentKind::Ordinary => "ordinary",
                },
                size: comp.len(),
                internal_edges,
                members: comp
                    .iter()
                    .map(|&v| envelope.nodes().label(v).to_owned())
                    .collect(),
            }
        })
        .collect();
    let out = SccOut {
        meta: file_meta(&config),
        node_count: envelope.node_count(),
        component_count: cond.components.len(),
        supernode_count: cond.supernode_count(),
        nodes_in_supernodes: cond.nodes_in_supernodes(),
        components,
        dag_edges: cond.dag_edges.clone(),
    };
    write_output(args.output.as_deref(), &[&args.input], &json_bytes(&out)?)?;
    Ok(0)
}

pub fn eta(args: &EtaSweepArgs) -> CliResult {
    let config = canonical_config(
        "eta-sweep",
        &[
            ("input", args.input.display().to_string()),
            ("thresholds", args.thresholds.clone()),
            (
                "eta_denominator",
                format!("{:?}", args.eta_denominator).to_lowercase(),
            ),
        ],
    );
    let (log, report) = aggregate_jsonl(open_reader(&args.input)?)?;
    report_line_errors(&report);
    let thresholds = parse_range(&args.thresholds)?;
    let denominator = match args.eta_denominator {
        EtaDenominatorArg::Active => EtaDenominator::ActiveNodes,
        EtaDenominatorArg::All => EtaDenominator::AllNodes,
    };
    let points = eta_sweep(&log, &thresholds, denominator)?;
    let csv = eta_csv(&points, Some(&text_header(&config)));
    write_output(args.output.as_deref(), &[&args.input], csv.as_bytes())?;
    Ok(0)
}

#[derive(Serialize)]
struct TransitivityPointOut {
    p: f64,
    lhs: Option<f64>,
    rhs: Option<f64>,
    holds: bool,
}

#[derive(Serialize)]
struct WaypointEntryOut {
    node: String,
    bound: f64,
    is_intermediate: bool,
    rc_from_source: f64,
    rc_to_target: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    transitivity: Option<Vec<TransitivityPointOut>>,
}

#[derive(Serialize)]
struct WaypointRankingOut {
    source: String,
    target: String,
    entries: Vec<WaypointEntryOut>,
}

#[derive(Serialize)]
struct WaypointsOut {
    meta: FileMeta,
    rankings: Vec<WaypointRankingOut>,
}

pub fn waypoints(args: &WaypointsArgs) -> CliResult {
    let config = canonical_config(
        "waypoints",
        &[
            ("input", args.input.display().to_string()),
            ("pairs", args.pairs.clone()),
            (
                "candidates",
                args.candidates.clone().unwrap_or_else(|| "all-on-path".into()),
            ),
            (
                "p_grid",
                args.p_grid.clone().unwrap_or_else(|| "none".into()),
            ),
        ],
    );
    let envelope = load_kernel(&args.input)?.support();
    let pairs = resolve_pairs(envelope.nodes(), &args.pairs)?;
    let candidates: Option<Vec<NodeId>> = match &args.candidates {
        None => None,
        Some(raw) => Some(
            raw.split(';')
                .filter(|s| !s.trim().is_empty())
                .map(|label| resolve_label(envelope.nodes(), label))
                .collect::<Result<_, _>>()?,
        ),
    };
    let p_grid = args.p_grid.as_deref().map(parse_range).transpose()?;
    let mut rankings = Vec::new();
    for &(f, g) in &pairs {
        let ranking = rank_waypoints::<f64>(&envelope, f, g, candidates.as_deref());
        let mut entries = Vec::new();
        for entry in &ranking.entries {
            let transitivity = match &p_grid {
                None => None,
                Some(grid) => {
                    let points = transitivity_check(&envelope, f, entry.node, g, grid)?;
                    Some(
                        points
                            .iter()
                            .map(|pt| TransitivityPointOut {
                                p: pt.p,
                                lhs: pt.lhs.finite(),
                                rhs: pt.rhs.finite(),
                                holds: pt.holds,
                            })
                            .collect(),
                    )
                }
            };
            entries.push(WaypointEntryOut {
                node: envelope.nodes().label(entry.node).to_owned(),
                bound: entry.bound,
                is_intermediate: entry.is_intermediate,
                rc_from_source: entry.rc_from_source,
                rc_to_target: entry.rc_to_target,
                transitivity,
            });
        }
        rankings.push(WaypointRankingOut {
            source: envelope.nodes().label(f).to_owned(),
            target: envelope.nodes().label(g).to_owned(),
            entries,
        });
    }
    let out = WaypointsOut {
        meta: file_meta(&config),
        rankings,
    };
    write_output(args.output.as_deref(), &[&args.input], &json_bytes(&out)?)?;
    Ok(0)
}

#[derive(Serialize)]
struct EpochLayerOut {
    epoch: usize,
    added: Vec<String>,
    cumulative_size: usize,
}

#[derive(Serialize)]
struct EpochsOut {
    meta: FileMeta,
    start: String,
    epochs: usize,
    layers: Vec<EpochLayerOut>,
    final_size: usize,
}

pub fn epochs(args: &EpochsArgs) -> CliResult {
    let config = canonical_config(
        "epochs",
        &[
            ("input", args.input.display().to_string()),
            ("start", args.start.clone()),
            ("epochs", args.epochs.to_string()),
        ],
    );
    let envelope = load_kernel(&args.input)?.support();
    let start = resolve_label(envelope.nodes(), &args.start)?;
    // One epoch is one breadth-first layer, so the cumulative sets fall out
    // of the distance labelling.
    let dist = distances_from(&envelope, start);
    let mut layers = Vec::new();
    let mut cumulative = 0usize;
    for epoch in 0..=args.epochs {
        let added: Vec<String> = (0..envelope.node_count() as u32)
            .filter(|&v| dist[v as usize] == Some(epoch))
            .map(|v| envelope.nodes().label(NodeId(v)).to_owned())
            .collect();
        cumulative += added.len();
        layers.push(EpochLayerOut {
            epoch,
            added,
            cumulative_size: cumulative,
        });
    }
    let out = EpochsOut {
        meta: file_meta(&config),
        start: args.start.trim().to_owned(),
        epochs: args.epochs,
        layers,
        final_size: cumulative,
    };
    write_output(args.output.as_deref(), &[&args.input], &json_bytes(&out)?)?;
    Ok(0)
}

pub fn export_dot(args: &ExportDotArgs) -> CliResult {
    let config = canonical_config(
        "export-dot",
        &[
            ("input", args.input.display().to_string()),
            ("condensed", args.condensed.to_string()),
        ],
    );
    let kernel = load_kernel(&args.input)?;
    let header = text_header(&config);
    let dot = if args.condensed {
        let envelope: CrispEnvelope = kernel.support();
        condensed_dot(&condense(&envelope), envelope.nodes(), Some(&header))
    } else {
        kernel_dot(&kernel, Some(&header))
    };
    write_output(args.output.as_deref(), &[&args.input], dot.as_bytes())?;
    Ok(0)
}
