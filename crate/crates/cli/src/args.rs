use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(
    name = "covgf",
    version,
    about = "Measure the reachability structure of iterated agents: kernels, envelopes, coverage generating functions."
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Aggregate a JSONL transition log (or transcript stream) into a fuzzy kernel
    Ingest(IngestArgs),
    /// Binarize a JSONL transition log into a crisp envelope at a threshold
    Binarize(BinarizeArgs),
    /// Simulate synthetic grid policies and write the majority-vote kernel
    SimulateGrid(SimulateGridArgs),
    /// Per-pair reachability reports: d0, shortest-path count, p_c, r_c
    Measure(MeasureArgs),
    /// Strongly connected condensation summary
    Scc(SccArgs),
    /// Closed-walk prevalence eta over a threshold grid
    EtaSweep(EtaSweepArgs),
    /// Rank waypoint candidates between node pairs
    Waypoints(WaypointsArgs),
    /// Epoch-by-epoch reachable-set expansion from a start node
    Epochs(EpochsArgs),
    /// DOT rendering of a kernel, envelope, or its condensation
    ExportDot(ExportDotArgs),
    /// Run the built-in verification battery against oracles and fixtures
    Verify(VerifyArgs),
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum IngestFormat {
    /// Transition log: {"from", "to", "weight"?, "run"?}
    Log,
    /// Model transcript: {"model", "state", "target", "sample", "decision"}
    Transcript,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum EtaDenominatorArg {
    /// Count only nodes incident to a surviving edge
    Active,
    /// Count every node ever seen in the log
    All,
}

#[derive(clap::Args, Debug)]
pub struct IngestArgs {
    /// Input JSONL file
    #[arg(long)]
    pub input: PathBuf,
    /// Output kernel JSON (stdout when omitted)
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = IngestFormat::Log)]
    pub format: IngestFormat,
    /// Samples per (model, state) group for transcript input
    #[arg(long, default_value_t = 5)]
    pub samples: u32,
    /// Board side for transcript legality checks
    #[arg(long)]
    pub n: Option<u32>,
    /// Board target "x,y" for transcript legality checks
    #[arg(long)]
    pub target: Option<String>,
}

#[derive(clap::Args, Debug)]
pub struct BinarizeArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Binarization threshold in [0, 1)
    #[arg(long)]
    pub p0: f64,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(clap::Args, Debug)]
pub struct SimulateGridArgs {
    /// Board side length
    #[arg(long, default_value_t = 5)]
    pub n: u32,
    /// Target cell "x,y"
    #[arg(long, default_value = "3,4")]
    pub target: String,
    /// Number of synthetic policies in the roster
    #[arg(long, default_value_t = 8)]
    pub models: usize,
    /// Samples per (policy, cell)
    #[arg(long, default_value_t = 5)]
    pub samples: u32,
    /// Root seed; all randomness flows from here
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output kernel JSON (stdout when omitted)
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Also write the per-sample transcript stream as JSONL
    #[arg(long)]
    pub transcripts: Option<PathBuf>,
}

#[derive(clap::Args, Debug)]
pub struct MeasureArgs {
    /// Kernel or envelope JSON
    #[arg(long)]
    pub input: PathBuf,
    /// Pairs, inline "f->g;f2->g2" or a file (JSON array of [f, g] or lines "f -> g")
    #[arg(long)]
    pub pairs: String,
    /// Evaluate on the fuzzy kernel instead of its crisp support
    #[arg(long)]
    pub fuzzy: bool,
    /// Also evaluate the clipped coverage at this continuation parameter
    #[arg(long)]
    pub p: Option<f64>,
    /// Output CSV (stdout when omitted)
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(clap::Args, Debug)]
pub struct SccArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(clap::Args, Debug)]
pub struct EtaSweepArgs {
    /// Input JSONL transition log
    #[arg(long)]
    pub input: PathBuf,
    /// Threshold grid "a:b:step", endpoints inclusive
    #[arg(long)]
    pub thresholds: String,
    #[arg(long, value_enum, default_value_t = EtaDenominatorArg::Active)]
    pub eta_denominator: EtaDenominatorArg,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(clap::Args, Debug)]
pub struct WaypointsArgs {
    /// Envelope (or kernel; its support is used) JSON
    #[arg(long)]
    pub input: PathBuf,
    /// Pairs to rank waypoints for, same syntax as `measure`
    #[arg(long)]
    pub pairs: String,
    /// Candidate labels "a;b;c" (default: all nodes on some path)
    #[arg(long)]
    pub candidates: Option<String>,
    /// Optional grid "a:b:step" of p values for transitivity sweeps
    #[arg(long)]
    pub p_grid: Option<String>,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(clap::Args, Debug)]
pub struct EpochsArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Start node label
    #[arg(long)]
    pub start: String,
    /// Number of expansion epochs
    #[arg(long)]
    pub epochs: usize,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(clap::Args, Debug)]
pub struct ExportDotArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Render the strongly connected condensation instead of the raw graph
    #[arg(long)]
    pub condensed: bool,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(clap::Args, Debug)]
pub struct VerifyArgs {
    /// Run a reduced battery that finishes in a few seconds
    #[arg(long)]
    pub quick: bool,
    /// Seed for the randomized checks
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Override the bundled 5x5 lattice fixture (negative-control hook)
    #[arg(long)]
    pub input: Option<PathBuf>,
}
