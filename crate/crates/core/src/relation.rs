//! Node universe, fuzzy relation kernels, and crisp safety envelopes.
//!
//! A [`FuzzyKernel`] stores the transition weights of an iterated agent as a
//! sparse row-grouped adjacency with memberships in `(0, 1]`.  A
//! [`CrispEnvelope`] is the 0/1-valued counterpart: it induces the directed
//! search graph that all geometric quantities are computed on.  Both are
//! immutable once built; construction goes through builders that enforce the
//! structural invariants.

use std::collections::BTreeMap;
use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{s, Scalar};

/// Weights below this are treated as exact zeros at insertion, so float dust
/// can never create phantom edges.
pub const MU_FLOOR: f64 = 1e-12;

/// Dense handle for an interned node label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub u32);

impl NodeId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// Bijective label <-> id table.  Ids are contiguous from zero so they can
/// index arrays.  Identity is exact string equality after trimming leading
/// and trailing whitespace; no semantic canonicalization happens here.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct NodeTable {
    labels: Vec<String>,
    index: HashMap<String, u32>,
}

impl NodeTable {
    pub fn new() -> Self {
        Self::default()
    }

    /// Intern a label, returning the existing id when the label was seen
    /// before and a fresh contiguous id otherwise.
    pub fn intern(&mut self, label: &str) -> Result<NodeId> {
        let trimmed = label.trim();
        if trimmed.is_empty() {
            return Err(Error::EmptyLabel);
        }
        if let Some(&id) = self.index.get(trimmed) {
            return Ok(NodeId(id));
        }
        let id = self.labels.len() as u32;
        self.labels.push(trimmed.to_owned());
        self.index.insert(trimmed.to_owned(), id);
        Ok(NodeId(id))
    }

    pub fn lookup(&self, label: &str) -> Option<NodeId> {
        self.index.get(label.trim()).copied().map(NodeId)
    }

    pub fn label(&self, id: NodeId) -> &str {
        &self.labels[id.index()]
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn iter(&self) -> impl Iterator<Item = (NodeId, &str)> {
        self.labels
            .iter()
            .enumerate()
            .map(|(i, l)| (NodeId(i as u32), l.as_str()))
    }

    /// Build a table from a list of labels that must already be distinct.
    pub fn from_labels<I, T>(labels: I) -> Result<Self>
    where
        I: IntoIterator<Item = T>,
        T: AsRef<str>,
    {
        let mut table = Self::new();
        for (i, label) in labels.into_iter().enumerate() {
            let id = table.intern(label.as_ref())?;
            if id.index() != i {
                return Err(Error::DuplicateLabel(label.as_ref().to_owned()));
            }
        }
        Ok(table)
    }
}

/// Sparse weighted adjacency of an ideal agent: `mu(f, g)` in `(0, 1]`,
/// grouped by source node, at most one entry per ordered pair.
#[derive(Debug, Clone, PartialEq)]
pub struct FuzzyKernel<S> {
    nodes: NodeTable,
    rows: Vec<Vec<(u32, S)>>,
    edge_count: usize,
}

impl<S: Scalar> FuzzyKernel<S> {
    pub fn builder(nodes: NodeTable) -> KernelBuilder<S> {
        let rows = vec![Vec::new(); nodes.len()];
        KernelBuilder {
            nodes,
            rows,
            edge_count: 0,
        }
    }

    pub fn from_edges<I>(nodes: NodeTable, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (NodeId, NodeId, S)>,
    {
        let mut b = Self::builder(nodes);
        for (f, g, mu) in edges {
            b.insert(f, g, mu)?;
        }
        Ok(b.finish())
    }

    pub fn nodes(&self) -> &NodeTable {
        &self.nodes
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    /// Outgoing edges of `f`, sorted by target id.
    pub fn outgoing(&self, f: NodeId) -> &[(u32, S)] {
        &self.rows[f.index()]
    }

    pub fn mu(&self, f: NodeId, g: NodeId) -> Option<S> {
        let row = &self.rows[f.index()];
        row.binary_search_by_key(&g.0, |&(t, _)| t)
            .ok()
            .map(|i| row[i].1)
    }

    pub fn edges(&self) -> impl Iterator<Item = (NodeId, NodeId, S)> + '_ {
        self.rows.iter().enumerate().flat_map(|(f, row)| {
            row.iter()
                .map(move |&(g, mu)| (NodeId(f as u32), NodeId(g), mu))
        })
    }

    pub fn row_sum(&self, f: NodeId) -> S {
        self.rows[f.index()].iter().map(|&(_, mu)| mu).sum()
    }

    /// Maximum row sum, i.e. the infinity-norm upper bound on the spectral
    /// radius of the kernel matrix.
    pub fn max_row_sum(&self) -> S {
        (0..self.nodes.len() as u32)
            .map(|f| self.row_sum(NodeId(f)))
            .fold(S::zero(), S::max)
    }

    /// True when every stored weight is exactly one.
    pub fn is_crisp(&self) -> bool {
        self.rows
            .iter()
            .all(|row| row.iter().all(|&(_, mu)| mu == S::one()))
    }

    /// Binarize the support: edge present in the result iff `mu > 0` here.
    pub fn support(&self) -> CrispEnvelope {
        let rows = self
            .rows
            .iter()
            .map(|row| row.iter().map(|&(g, _)| g).collect())
            .collect();
        CrispEnvelope {
            nodes: self.nodes.clone(),
            edge_count: self.edge_count,
            rows,
        }
    }
}

/// Single-writer construction for [`FuzzyKernel`].
pub struct KernelBuilder<S> {
    nodes: NodeTable,
    rows: Vec<Vec<(u32, S)>>,
    edge_count: usize,
}

impl<S: Scalar> KernelBuilder<S> {
    /// Insert an edge.  Weights below [`MU_FLOOR`] are treated as zero and
    /// dropped; a duplicate pair with a conflicting weight is an error, with
    /// an exact repeat accepted as a no-op.
    pub fn insert(&mut self, from: NodeId, to: NodeId, mu: S) -> Result<()> {
        let n = self.nodes.len();
        if from.index() >= n {
            return Err(Error::NodeOutOfRange(from, n));
        }
        if to.index() >= n {
            return Err(Error::NodeOutOfRange(to, n));
        }
        if !mu.is_finite() || mu < S::zero() || mu > S::one() {
            return Err(Error::InvalidWeight {
                from,
                to,
                value: mu.to_f64().unwrap_or(f64::NAN),
            });
        }
        if mu < s::<S>(MU_FLOOR) {
            return Ok(());
        }
        let row = &mut self.rows[from.index()];
        if let Some(&(_, existing)) = row.iter().find(|&&(t, _)| t == to.0) {
            if existing == mu {
                return Ok(());
            }
            return Err(Error::DuplicateEdge {
                from,
                to,
                existing: existing.to_f64().unwrap_or(f64::NAN),
                new: mu.to_f64().unwrap_or(f64::NAN),
            });
        }
        row.push((to.0, mu));
        self.edge_count += 1;
        Ok(())
    }

    pub fn finish(mut self) -> FuzzyKernel<S> {
        for row in &mut self.rows {
            row.sort_unstable_by_key(|&(t, _)| t);
        }
        FuzzyKernel {
            nodes: self.nodes,
            rows: self.rows,
            edge_count: self.edge_count,
        }
    }
}

/// Crisp safety envelope: boolean adjacency over the same node universe.
/// Equivalent to a fuzzy kernel whose every weight is exactly one.
#[derive(Debug, Clone, PartialEq)]
pub struct CrispEnvelope {
    nodes: NodeTable,
    rows: Vec<Vec<u32>>,
    edge_count: usize,
}

impl CrispEnvelope {
    pub fn from_edges<I>(nodes: NodeTable, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (NodeId, NodeId)>,
    {
        let n = nodes.len();
        let mut rows: Vec<Vec<u32>> = vec![Vec::new(); n];
        for (f, g) in edges {
            if f.index() >= n {
                return Err(Error::NodeOutOfRange(f, n));
            }
            if g.index() >= n {
                return Err(Error::NodeOutOfRange(g, n));
            }
            rows[f.index()].push(g.0);
        }
        let mut edge_count = 0;
        for row in &mut rows {
            row.sort_unstable();
            row.dedup();
            edge_count += row.len();
        }
        Ok(Self {
            nodes,
            rows,
            edge_count,
        })
    }

    pub fn nodes(&self) -> &NodeTable {
        &self.nodes
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    /// Outgoing targets of `f`, sorted by id.
    pub fn out(&self, f: NodeId) -> &[u32] {
        &self.rows[f.index()]
    }

    pub fn has_edge(&self, f: NodeId, g: NodeId) -> bool {
        self.rows[f.index()].binary_search(&g.0).is_ok()
    }

    pub fn edges(&self) -> impl Iterator<Item = (NodeId, NodeId)> + '_ {
        self.rows.iter().enumerate().flat_map(|(f, row)| {
            row.iter().map(move |&g| (NodeId(f as u32), NodeId(g)))
        })
    }

    /// Read the envelope back as a kernel of exact 1-weights.
    pub fn to_kernel<S: Scalar>(&self) -> FuzzyKernel<S> {
        let rows = self
            .rows
            .iter()
            .map(|row| row.iter().map(|&g| (g, S::one())).collect())
            .collect();
        FuzzyKernel {
            nodes: self.nodes.clone(),
            rows,
            edge_count: self.edge_count,
        }
    }

    /// Copy of this envelope with the listed edges removed.
    pub fn without_edges(&self, remove: &[(NodeId, NodeId)]) -> Self {
        let edges = self
            .edges()
            .filter(|&(f, g)| !remove.contains(&(f, g)))
            .collect::<Vec<_>>();
        Self::from_edges(self.nodes.clone(), edges).expect("edges come from a valid envelope")
    }
}

/// Outcome of a safety-domination check.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SafetyCheck {
    pub dominated: bool,
    /// First kernel edge (in `(from, to)` id order) that falls outside the
    /// envelope, when any does.
    pub first_violation: Option<(NodeId, NodeId)>,
}

/// Support of the kernel as a crisp envelope (free-function form of
/// [`FuzzyKernel::support`]).
pub fn support_envelope<S: Scalar>(kernel: &FuzzyKernel<S>) -> CrispEnvelope {
    kernel.support()
}

/// Check that every kernel edge lies inside the envelope, i.e.
/// `0 <= mu(f, g) <= envelope(f, g)` holds edgewise.
pub fn check_safety_domination<S: Scalar>(
    kernel: &FuzzyKernel<S>,
    envelope: &CrispEnvelope,
) -> Result<SafetyCheck> {
    if kernel.node_count() != envelope.node_count() {
        return Err(Error::NodeCountMismatch {
            kernel: kernel.node_count(),
            envelope: envelope.node_count(),
        });
    }
    for (f, g, _) in kernel.edges() {
        if !envelope.has_edge(f, g) {
            return Ok(SafetyCheck {
                dominated: false,
                first_violation: Some((f, g)),
            });
        }
    }
    Ok(SafetyCheck {
        dominated: true,
        first_violation: None,
    })
}

/// Pointwise `min(1, value)` over a map of nonnegative finite values, the
/// clipping that turns accumulated coverage into a unit-bounded membership.
pub fn clip_continuation<S: Scalar>(
    values: &BTreeMap<(NodeId, NodeId), S>,
) -> Result<BTreeMap<(NodeId, NodeId), S>> {
    let mut out = BTreeMap::new();
    for (&pair, &v) in values {
        out.insert(pair, clip_unit(v)?);
    }
    Ok(out)
}

/// Scalar form of [`clip_continuation`].
pub fn clip_unit<S: Scalar>(value: S) -> Result<S> {
    if !value.is_finite() || value < S::zero() {
        return Err(Error::ContractViolation(format!(
            "clip_continuation input {value} must be finite and nonnegative"
        )));
    }
    Ok(value.min(S::one()))
}

/// A node sequence whose every consecutive transition has positive
/// membership in the kernel that produced it.  A single node is a valid
/// trajectory of length zero.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SearchTrajectory {
    nodes: Vec<NodeId>,
}

impl SearchTrajectory {
    pub fn new<S: Scalar>(kernel: &FuzzyKernel<S>, nodes: Vec<NodeId>) -> Result<Self> {
        if nodes.is_empty() {
            return Err(Error::EmptyTrajectory);
        }
        for w in nodes.windows(2) {
            if kernel.mu(w[0], w[1]).is_none() {
                return Err(Error::BrokenTrajectory {
                    from: w[0],
                    to: w[1],
                });
            }
        }
        Ok(Self { nodes })
    }

    pub fn nodes(&self) -> &[NodeId] {
        &self.nodes
    }

    /// Number of transitions, one less than the node count.
    pub fn len(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Product of memberships along the trajectory; the empty product of a
    /// single-node trajectory is one.
    pub fn weight<S: Scalar>(&self, kernel: &FuzzyKernel<S>) -> S {
        self.nodes
            .windows(2)
            .map(|w| kernel.mu(w[0], w[1]).unwrap_or(S::zero()))
            .fold(S::one(), |acc, mu| acc * mu)
    }
}
