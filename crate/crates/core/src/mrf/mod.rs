//! Pairwise MRF data model.
//!
//! A model has `N` nodes sharing one label space of `M` states, a unary table
//! per node, and a list of undirected edges each bound to a [`PairwiseTerm`].
//! Terms live in a table on the model so a homogeneous grid stores a single
//! term that every edge refers to.

mod potential;
pub mod text;

pub use potential::{Column, DensePotential, PairwiseTerm, Potential, SparseTruncatedPotential};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MrfError {
    #[error("label space must have at least one state")]
    EmptyLabelSpace,
    #[error("expected length {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("state {state} outside label space of size {num_labels}")]
    StateOutOfRange { state: usize, num_labels: usize },
    #[error("neighborhood of column {column} is not strictly increasing")]
    UnsortedNeighborhood { column: usize },
    #[error("non-finite value")]
    NonFiniteValue,
    #[error("potential entries must be nonnegative")]
    NegativePotential,
    #[error("unary table of node {node} is invalid: {reason}")]
    InvalidUnary { node: usize, reason: &'static str },
    #[error("node {node} does not exist (model has {num_nodes} nodes)")]
    NodeOutOfRange { node: usize, num_nodes: usize },
    #[error("self-edge on node {0}")]
    SelfEdge(usize),
    #[error("duplicate edge between {0} and {1}")]
    DuplicateEdge(usize, usize),
    #[error("unknown pairwise term {0}")]
    UnknownTerm(usize),
    #[error("grid must have at least one node")]
    EmptyGrid,
    #[error("invalid parameter: {0}")]
    InvalidParameter(&'static str),
}

/// Index into a model's term table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TermId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Edge {
    pub a: usize,
    pub b: usize,
    pub term: TermId,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Topology {
    Generic,
    /// 4-connected grid, nodes row-major. Edges are laid out as all horizontal
    /// pairs row by row, followed by all vertical pairs column by column.
    Grid {
        height: usize,
        width: usize,
    },
}

/// A message flowing into a node: the neighbor it comes from and the id of
/// the directed message. Edge `e = (a, b)` owns ids `2e` (a to b) and `2e + 1`
/// (b to a).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Incoming {
    pub from: usize,
    pub message: usize,
}

#[derive(Debug, Clone)]
pub struct MrfModel {
    num_labels: usize,
    unary: Vec<f64>,
    log_unary: Vec<f64>,
    edges: Vec<Edge>,
    terms: Vec<PairwiseTerm>,
    incoming: Vec<Vec<Incoming>>,
    topology: Topology,
}

impl MrfModel {
    pub fn num_labels(&self) -> usize {
        self.num_labels
    }

    pub fn num_nodes(&self) -> usize {
        self.incoming.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn num_messages(&self) -> usize {
        2 * self.edges.len()
    }

    pub fn topology(&self) -> Topology {
        self.topology
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn terms(&self) -> &[PairwiseTerm] {
        &self.terms
    }

    pub fn term(&self, id: TermId) -> &PairwiseTerm {
        &self.terms[id.0]
    }

    /// Unary potential `g_i` in the probability domain.
    pub fn unary(&self, node: usize) -> &[f64] {
        let m = self.num_labels;
        &self.unary[node * m..(node + 1) * m]
    }

    /// Unary potential in the log domain.
    pub fn log_unary(&self, node: usize) -> &[f64] {
        let m = self.num_labels;
        &self.log_unary[node * m..(node + 1) * m]
    }

    pub fn incoming(&self, node: usize) -> &[Incoming] {
        &self.incoming[node]
    }

    pub fn neighbors(&self, node: usize) -> impl Iterator<Item = usize> + '_ {
        self.incoming[node].iter().map(|inc| inc.from)
    }

    /// Sender and receiver of a directed message.
    #[inline]
    pub fn message_endpoints(&self, message: usize) -> (usize, usize) {
        let e = &self.edges[message / 2];
        if message.is_multiple_of(2) {
            (e.a, e.b)
        } else {
            (e.b, e.a)
        }
    }

    /// Id of the directed message `from -> to`, if the nodes are adjacent.
    pub fn message_id(&self, from: usize, to: usize) -> Option<usize> {
        self.incoming
            .get(to)?
            .iter()
            .find(|inc| inc.from == from)
            .map(|inc| inc.message)
    }

    /// True for a connected acyclic graph.
    pub fn is_tree(&self) -> bool {
        let n = self.num_nodes();
        if self.edges.len() + 1 != n {
            return false;
        }
        let mut seen = vec![false; n];
        let mut stack = vec![0];
        seen[0] = true;
        let mut count = 1;
        while let Some(u) = stack.pop() {
            for v in self.neighbors(u) {
                if !seen[v] {
                    seen[v] = true;
                    count += 1;
                    stack.push(v);
                }
            }
        }
        count == n
    }

    /// Longest shortest path, in edges. Returns `None` for a disconnected graph.
    pub fn diameter(&self) -> Option<usize> {
        let n = self.num_nodes();
        let mut best = 0;
        let mut dist = vec![usize::MAX; n];
        for s in 0..n {
            dist.iter_mut().for_each(|d| *d = usize::MAX);
            dist[s] = 0;
            let mut queue = std::collections::VecDeque::from([s]);
            while let Some(u) = queue.pop_front() {
                for v in self.neighbors(u) {
                    if dist[v] == usize::MAX {
                        dist[v] = dist[u] + 1;
                        queue.push_back(v);
                    }
                }
            }
            if dist.contains(&usize::MAX) {
                return None;
            }
            best = best.max(*dist.iter().max().unwrap());
        }
        Some(best)
    }
}

/// Incremental construction of an [`MrfModel`].
#[derive(Debug, Clone)]
pub struct MrfBuilder {
    num_labels: usize,
    unary: Vec<f64>,
    log_unary: Vec<f64>,
    edges: Vec<Edge>,
    terms: Vec<PairwiseTerm>,
    topology: Topology,
}

impl MrfBuilder {
    pub fn new(num_labels: usize) -> Result<Self, MrfError> {
        if num_labels == 0 {
            return Err(MrfError::EmptyLabelSpace);
        }
        Ok(Self {
            num_labels,
            unary: Vec::new(),
            log_unary: Vec::new(),
            edges: Vec::new(),
            terms: Vec::new(),
            topology: Topology::Generic,
        })
    }

    pub fn num_nodes(&self) -> usize {
        self.unary.len() / self.num_labels
    }

    /// Adds a node; its log-domain unary is `ln` of `unary`.
    pub fn add_node(&mut self, unary: &[f64]) -> Result<usize, MrfError> {
        let log: Vec<f64> = unary.iter().map(|v| v.ln()).collect();
        self.add_node_with_log(unary, &log)
    }

    /// Adds a node with an explicitly supplied log-domain unary.
    pub fn add_node_with_log(
        &mut self,
        unary: &[f64],
        log_unary: &[f64],
    ) -> Result<usize, MrfError> {
        let node = self.num_nodes();
        for table in [unary, log_unary] {
            if table.len() != self.num_labels {
                return Err(MrfError::DimensionMismatch {
                    expected: self.num_labels,
                    found: table.len(),
                });
            }
        }
        if unary.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(MrfError::InvalidUnary {
                node,
                reason: "entries must be finite and nonnegative",
            });
        }
        if !unary.iter().any(|&v| v > 0.0) {
            return Err(MrfError::InvalidUnary {
                node,
                reason: "at least one entry must be positive",
            });
        }
        if log_unary.iter().any(|v| v.is_nan() || *v == f64::INFINITY) {
            return Err(MrfError::InvalidUnary {
                node,
                reason: "log entries must be finite or -inf",
            });
        }
        self.unary.extend_from_slice(unary);
        self.log_unary.extend_from_slice(log_unary);
        Ok(node)
    }

    pub fn add_term(&mut self, term: PairwiseTerm) -> Result<TermId, MrfError> {
        if term.num_labels() != self.num_labels {
            return Err(MrfError::DimensionMismatch {
                expected: self.num_labels,
                found: term.num_labels(),
            });
        }
        self.terms.push(term);
        Ok(TermId(self.terms.len() - 1))
    }

    /// Adds edge `(a, b)`; the term is read as `f(x_a, x_b)`.
    pub fn add_edge(&mut self, a: usize, b: usize, term: TermId) -> Result<usize, MrfError> {
        let n = self.num_nodes();
        for node in [a, b] {
            if node >= n {
                return Err(MrfError::NodeOutOfRange { node, num_nodes: n });
            }
        }
        if a == b {
            return Err(MrfError::SelfEdge(a));
        }
        if term.0 >= self.terms.len() {
            return Err(MrfError::UnknownTerm(term.0));
        }
        self.edges.push(Edge { a, b, term });
        Ok(self.edges.len() - 1)
    }

    pub fn build(self) -> Result<MrfModel, MrfError> {
        let n = self.num_nodes();
        let mut incoming = vec![Vec::new(); n];
        let mut seen = std::collections::HashSet::with_capacity(self.edges.len());
        for (e, edge) in self.edges.iter().enumerate() {
            let key = (edge.a.min(edge.b), edge.a.max(edge.b));
            if !seen.insert(key) {
                return Err(MrfError::DuplicateEdge(key.0, key.1));
            }
            incoming[edge.b].push(Incoming {
                from: edge.a,
                message: 2 * e,
            });
            incoming[edge.a].push(Incoming {
                from: edge.b,
                message: 2 * e + 1,
            });
        }
        Ok(MrfModel {
            num_labels: self.num_labels,
            unary: self.unary,
            log_unary: self.log_unary,
            edges: self.edges,
            terms: self.terms,
            incoming,
            topology: self.topology,
        })
    }
}

/// Unary tables for one node in both domains.
#[derive(Debug, Clone, PartialEq)]
pub struct UnaryPair {
    pub product: Vec<f64>,
    pub log: Vec<f64>,
}

impl From<Vec<f64>> for UnaryPair {
    fn from(product: Vec<f64>) -> Self {
        let log = product.iter().map(|v| v.ln()).collect();
        Self { product, log }
    }
}

/// Builds a 4-connected `height x width` grid with row-major nodes, every edge
/// bound to `term`. `unary(row, col)` supplies each node's table.
pub fn build_grid_mrf<U: Into<UnaryPair>>(
    height: usize,
    width: usize,
    term: PairwiseTerm,
    mut unary: impl FnMut(usize, usize) -> U,
) -> Result<MrfModel, MrfError> {
    if height == 0 || width == 0 {
        return Err(MrfError::EmptyGrid);
    }
    let mut builder = MrfBuilder::new(term.num_labels())?;
    for r in 0..height {
        for c in 0..width {
            let u: UnaryPair = unary(r, c).into();
            builder.add_node_with_log(&u.product, &u.log)?;
        }
    }
    let term = builder.add_term(term)?;
    for r in 0..height {
        for c in 0..width - 1 {
            builder.add_edge(r * width + c, r * width + c + 1, term)?;
        }
    }
    for c in 0..width {
        for r in 0..height - 1 {
            builder.add_edge(r * width + c, (r + 1) * width + c, term)?;
        }
    }
    builder.topology = Topology::Grid { height, width };
    builder.build()
}
