//! Grid walking agents: synthetic policies, transcript aggregation, and the
//! monotone-lattice reference envelope.
//!
//! The construction is majority vote over a roster of models.  Per model and
//! per non-target cell we draw `m` decisions, take the mode, and keep it only
//! on a strict majority (count > m/2); the kernel weight is the fraction of
//! models that produced a strict majority for that move.  Synthetic policies
//! stand in for externally recorded model transcripts, which enter through
//! [`kernel_from_transcripts`] with identical aggregation.

use std::collections::BTreeMap;
use std::io::BufRead;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{IngestReport, LineError};
use crate::relation::{CrispEnvelope, FuzzyKernel, NodeId, NodeTable};
use crate::scalar::Scalar;

/// Board geometry: the `n x n` grid of cells `(x, y)` with a fixed target.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GridSpec {
    pub n: u32,
    pub target: (u32, u32),
}

impl GridSpec {
    pub fn new(n: u32, target: (u32, u32)) -> Result<Self> {
        if n == 0 || target.0 >= n || target.1 >= n {
            return Err(Error::TargetOutsideBoard { n, target });
        }
        Ok(Self { n, target })
    }

    pub fn cell_label(x: u32, y: u32) -> String {
        format!("({x},{y})")
    }

    /// Parse a `(x,y)` cell label.
    pub fn parse_cell(label: &str) -> Option<(u32, u32)> {
        let inner = label.trim().strip_prefix('(')?.strip_suffix(')')?;
        let (x, y) = inner.split_once(',')?;
        Some((x.trim().parse().ok()?, y.trim().parse().ok()?))
    }

    /// All cells in row-major order.
    pub fn cells(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        let n = self.n;
        (0..n).flat_map(move |y| (0..n).map(move |x| (x, y)))
    }

    pub fn contains(&self, cell: (u32, u32)) -> bool {
        cell.0 < self.n && cell.1 < self.n
    }

    pub fn manhattan(a: (u32, u32), b: (u32, u32)) -> u32 {
        a.0.abs_diff(b.0) + a.1.abs_diff(b.1)
    }

    /// Legal unit steps from `cell`: up, down, left, right, staying on the
    /// board.  Order is fixed for determinism.
    pub fn legal_moves(&self, cell: (u32, u32)) -> Vec<(u32, u32)> {
        let (x, y) = cell;
        let mut moves = Vec::with_capacity(4);
        if y + 1 < self.n {
            moves.push((x, y + 1));
        }
        if y > 0 {
            moves.push((x, y - 1));
        }
        if x > 0 {
            moves.push((x - 1, y));
        }
        if x + 1 < self.n {
            moves.push((x + 1, y));
        }
        moves
    }

    /// Legal moves that strictly decrease the Manhattan distance to the
    /// target; empty exactly at the target cell.
    pub fn decreasing_moves(&self, cell: (u32, u32)) -> Vec<(u32, u32)> {
        let d = Self::manhattan(cell, self.target);
        self.legal_moves(cell)
            .into_iter()
            .filter(|&m| Self::manhattan(m, self.target) < d)
            .collect()
    }

    /// Node table of the full board in row-major order.
    pub fn node_table(&self) -> NodeTable {
        let mut table = NodeTable::new();
        for (x, y) in self.cells() {
            table.intern(&Self::cell_label(x, y)).expect("cell labels are nonempty");
        }
        table
    }

    /// The full monotone-lattice envelope: every unit step that strictly
    /// decreases the Manhattan distance to the target.
    pub fn monotone_lattice(&self) -> CrispEnvelope {
        let table = self.node_table();
        let mut edges = Vec::new();
        for (x, y) in self.cells() {
            let f = table.lookup(&Self::cell_label(x, y)).unwrap();
            for (mx, my) in self.decreasing_moves((x, y)) {
                let g = table.lookup(&Self::cell_label(mx, my)).unwrap();
                edges.push((f, g));
            }
        }
        CrispEnvelope::from_edges(table, edges).expect("lattice edges stay on the board")
    }
}

/// The three bundled board configurations used throughout the test fixtures.
pub fn builtin_grid_configs() -> Vec<GridSpec> {
    vec![
        GridSpec::new(3, (1, 2)).unwrap(),
        GridSpec::new(5, (3, 4)).unwrap(),
        GridSpec::new(8, (6, 7)).unwrap(),
    ]
}

/// Which axis a policy prefers to make progress on first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AxisBias {
    XFirst,
    YFirst,
}

/// Parameters of one synthetic walking policy.
///
/// With probability `noise` the policy takes a uniformly random legal move;
/// with probability `greediness` it takes its bias-preferred
/// distance-decreasing move; otherwise it picks uniformly among all
/// distance-decreasing moves.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolicyParams {
    pub bias: AxisBias,
    pub greediness: f64,
    pub noise: f64,
    pub seed: u64,
}

impl PolicyParams {
    pub fn validate(&self) -> Result<()> {
        let ok = (0.0..=1.0).contains(&self.greediness)
            && (0.0..=1.0).contains(&self.noise)
            && self.greediness + self.noise <= 1.0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidPolicy(format!(
                "greediness {} and noise {} must lie in [0,1] with sum <= 1",
                self.greediness, self.noise
            )))
        }
    }

    fn preferred_move(&self, spec: &GridSpec, cell: (u32, u32)) -> (u32, u32) {
        let (x, y) = cell;
        let (tx, ty) = spec.target;
        let step_x = || if x < tx { (x + 1, y) } else { (x - 1, y) };
        let step_y = || if y < ty { (x, y + 1) } else { (x, y - 1) };
        match self.bias {
            AxisBias::XFirst => {
                if x != tx {
                    step_x()
                } else {
                    step_y()
                }
            }
            AxisBias::YFirst => {
                if y != ty {
                    step_y()
                } else {
                    step_x()
                }
            }
        }
    }

    /// Draw one decision for `cell`.  The RNG stream is a pure function of
    /// `(seed, cell, sample)`, so adding a policy to a roster never perturbs
    /// the draws of the others.
    fn decide(&self, spec: &GridSpec, cell: (u32, u32), sample: u32) -> (u32, u32) {
        let mut rng = per_draw_rng(self.seed, cell, sample);
        let u: f64 = rng.random();
        if u < self.noise {
            let legal = spec.legal_moves(cell);
            legal[rng.random_range(0..legal.len())]
        } else if u < self.noise + self.greediness {
            self.preferred_move(spec, cell)
        } else {
            let decreasing = spec.decreasing_moves(cell);
            decreasing[rng.random_range(0..decreasing.len())]
        }
    }
}

fn per_draw_rng(seed: u64, cell: (u32, u32), sample: u32) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..12].copy_from_slice(&cell.0.to_le_bytes());
    key[12..16].copy_from_slice(&cell.1.to_le_bytes());
    key[16..20].copy_from_slice(&sample.to_le_bytes());
    key[20..24].copy_from_slice(b"walk");
    ChaCha8Rng::from_seed(key)
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e3779b97f4a7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d049bb133111eb);
    x ^ (x >> 31)
}

/// Deterministic roster of `count` policies derived from one root seed.
/// Biases alternate and greediness cycles; all policies are noise-free so
/// every emitted edge decreases the distance to the target.
pub fn default_policy_roster(count: usize, root_seed: u64) -> Vec<PolicyParams> {
    (0..count)
        .map(|i| PolicyParams {
            bias: if i % 2 == 0 {
                AxisBias::XFirst
            } else {
                AxisBias::YFirst
            },
            greediness: [1.0, 0.9, 0.75, 0.6][(i / 2) % 4],
            noise: 0.0,
            seed: splitmix64(root_seed ^ (i as u64).wrapping_mul(0xa076_1d64_78bd_642f)),
        })
        .collect()
}

pub fn policy_name(index: usize) -> String {
    format!("policy-{index:02}")
}

/// One recorded model decision.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TranscriptRecord {
    pub model: String,
    pub state: String,
    pub target: String,
    pub sample: u32,
    pub decision: String,
}

/// Result of a grid simulation: the aggregated kernel plus the raw
/// per-sample transcript that produced it.
#[derive(Debug, Clone)]
pub struct SimulationOutput<S> {
    pub kernel: FuzzyKernel<S>,
    pub transcripts: Vec<TranscriptRecord>,
    pub warnings: Vec<String>,
}

/// Simulate the policy roster over every non-target cell, `m` samples per
/// (policy, cell), and aggregate strict-majority modes into a fuzzy kernel.
pub fn simulate_grid_policies<S: Scalar>(
    spec: &GridSpec,
    policies: &[PolicyParams],
    m: u32,
) -> Result<SimulationOutput<S>> {
    if policies.is_empty() {
        return Err(Error::InvalidPolicy("at least one policy is required".into()));
    }
    if m == 0 {
        return Err(Error::InvalidPolicy("sample count m must be positive".into()));
    }
    for p in policies {
        p.validate()?;
    }
    let mut warnings = Vec::new();
    if m.is_multiple_of(2) {
        warnings.push(format!(
            "m = {m} is even: a strict majority needs at least m/2 + 1 agreeing samples"
        ));
    }

    let table = spec.node_table();
    let target_label = GridSpec::cell_label(spec.target.0, spec.target.1);
    let mut transcripts = Vec::new();
    // votes[(from, to)] = number of policies whose strict-majority mode is `to`.
    let mut votes: BTreeMap<(u32, u32), u32> = BTreeMap::new();

    for (i, policy) in policies.iter().enumerate() {
        let model = policy_name(i);
        for cell in spec.cells() {
            if cell == spec.target {
                continue;
            }
            let state = GridSpec::cell_label(cell.0, cell.1);
            let mut tally: BTreeMap<(u32, u32), u32> = BTreeMap::new();
            for sample in 0..m {
                let decision = policy.decide(spec, cell, sample);
                *tally.entry(decision).or_insert(0) += 1;
                transcripts.push(TranscriptRecord {
                    model: model.clone(),
                    state: state.clone(),
                    target: target_label.clone(),
                    sample,
                    decision: GridSpec::cell_label(decision.0, decision.1),
                });
            }
            if let Some(mode) = strict_majority(&tally, m) {
                let f = table.lookup(&state).unwrap();
                let g = table
                    .lookup(&GridSpec::cell_label(mode.0, mode.1))
                    .unwrap();
                *votes.entry((f.0, g.0)).or_insert(0) += 1;
            }
        }
    }

    let kernel = kernel_from_votes(table, &votes, policies.len())?;
    Ok(SimulationOutput {
        kernel,
        transcripts,
        warnings,
    })
}

/// Mode of the tally when its count strictly exceeds `m / 2`.  Two strict
/// majorities would need more than `m` samples, so the winner is unique.
fn strict_majority<K: Copy + Ord>(tally: &BTreeMap<K, u32>, m: u32) -> Option<K> {
    let (&mode, &count) = tally.iter().max_by_key(|&(_, &c)| c)?;
    if 2 * count > m {
        Some(mode)
    } else {
        None
    }
}

fn kernel_from_votes<S: Scalar>(
    table: NodeTable,
    votes: &BTreeMap<(u32, u32), u32>,
    model_count: usize,
) -> Result<FuzzyKernel<S>> {
    let denom = S::from_usize(model_count).unwrap();
    let mut builder = FuzzyKernel::<S>::builder(table);
    for (&(f, g), &v) in votes {
        let mu = S::from_u32(v).unwrap() / denom;
        builder.insert(NodeId(f), NodeId(g), mu)?;
    }
    Ok(builder.finish())
}

/// A transcript record that cannot be a legal unit step; kept in the kernel
/// verbatim but surfaced for inspection.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TranscriptViolation {
    pub model: String,
    pub state: String,
    pub decision: String,
    pub reason: String,
}

/// Summary of a transcript aggregation pass.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TranscriptReport {
    pub groups: usize,
    pub no_majority: usize,
    pub violations: Vec<TranscriptViolation>,
}

/// Aggregate externally recorded model transcripts with the same
/// strict-majority rule as [`simulate_grid_policies`].  Records are grouped
/// by `(model, state)` and every group must contain exactly `m` samples.
/// Decisions that are not legal unit steps are kept verbatim and flagged.
pub fn kernel_from_transcripts<S: Scalar>(
    records: &[TranscriptRecord],
    m: u32,
    grid: Option<&GridSpec>,
) -> Result<(FuzzyKernel<S>, TranscriptReport)> {
    let mut target: Option<&str> = None;
    for rec in records {
        match target {
            None => target = Some(&rec.target),
            Some(t) if t != rec.target => {
                return Err(Error::MixedTargets {
                    first: t.to_owned(),
                    second: rec.target.clone(),
                })
            }
            _ => {}
        }
    }

    let mut table = NodeTable::new();
    if let Some(t) = target {
        table.intern(t)?;
    }
    let mut groups: BTreeMap<(&str, &str), Vec<&TranscriptRecord>> = BTreeMap::new();
    for rec in records {
        table.intern(&rec.state)?;
        table.intern(&rec.decision)?;
        groups
            .entry((rec.model.as_str(), rec.state.as_str()))
            .or_default()
            .push(rec);
    }

    let mut report = TranscriptReport::default();
    let mut models: Vec<&str> = records.iter().map(|r| r.model.as_str()).collect();
    models.sort_unstable();
    models.dedup();

    let mut votes: BTreeMap<(u32, u32), u32> = BTreeMap::new();
    for ((model, state), group) in &groups {
        if group.len() != m as usize {
            return Err(Error::TranscriptGroupSize {
                model: (*model).to_owned(),
                state: (*state).to_owned(),
                got: group.len(),
                expected: m,
            });
        }
        let mut seen = vec![false; m as usize];
        for rec in group {
            if rec.sample >= m || seen[rec.sample as usize] {
                return Err(Error::InvalidRecord(format!(
                    "group (model={model}, state={state}) has duplicate or out-of-range sample index {}",
                    rec.sample
                )));
            }
            seen[rec.sample as usize] = true;
            if let Some(reason) = step_violation(state, &rec.decision, grid) {
                report.violations.push(TranscriptViolation {
                    model: (*model).to_owned(),
                    state: (*state).to_owned(),
                    decision: rec.decision.clone(),
                    reason,
                });
            }
        }
        report.groups += 1;

        let mut tally: BTreeMap<&str, u32> = BTreeMap::new();
        for rec in group {
            *tally.entry(rec.decision.as_str()).or_insert(0) += 1;
        }
        if let Some(mode) = strict_majority(&tally, m) {
            let f = table.lookup(state).unwrap();
            let g = table.lookup(mode).unwrap();
            *votes.entry((f.0, g.0)).or_insert(0) += 1;
        } else {
            report.no_majority += 1;
        }
    }

    let kernel = kernel_from_votes(table, &votes, models.len().max(1))?;
    Ok((kernel, report))
}

fn step_violation(state: &str, decision: &str, grid: Option<&GridSpec>) -> Option<String> {
    let from = match GridSpec::parse_cell(state) {
        Some(c) => c,
        None => return Some("state is not a coordinate pair".into()),
    };
    let to = match GridSpec::parse_cell(decision) {
        Some(c) => c,
        None => return Some("decision is not a coordinate pair".into()),
    };
    if GridSpec::manhattan(from, to) != 1 {
        return Some("decision is not a unit step from the state".into());
    }
    if let Some(spec) = grid {
        if !spec.contains(to) {
            return Some("decision leaves the board".into());
        }
    }
    None
}

/// Read a JSONL transcript stream, skipping malformed lines with a report.
pub fn read_transcripts_jsonl<R: BufRead>(
    reader: R,
) -> Result<(Vec<TranscriptRecord>, IngestReport)> {
    let mut records = Vec::new();
    let mut report = IngestReport::default();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        report.lines += 1;
        match serde_json::from_str::<TranscriptRecord>(&line) {
            Ok(rec) => {
                records.push(rec);
                report.records += 1;
            }
            Err(e) => report.errors.push(LineError {
                line: i + 1,
                message: e.to_string(),
            }),
        }
    }
    Ok((records, report))
}

/// Serialize transcripts as JSONL, one record per line.
pub fn write_transcripts_jsonl<W: std::io::Write>(
    writer: &mut W,
    records: &[TranscriptRecord],
) -> Result<()> {
    for rec in records {
        serde_json::to_writer(&mut *writer, rec)?;
        writeln!(writer)?;
    }
    Ok(())
}
