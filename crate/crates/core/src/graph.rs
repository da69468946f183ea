//! Immutable undirected graphs, node subsets ("bags"), and cut computations.

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

/// Dense, zero-based node index, stable for the lifetime of a [`Graph`].
pub type NodeId = usize;

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("line {line}: self-loop at node {node}")]
    SelfLoop { line: usize, node: NodeId },
    #[error("line {line}: node {node} out of range (n = {n})")]
    NodeOutOfRange { line: usize, node: NodeId, n: usize },
    #[error("graph must have at least one node")]
    Empty,
}

/// Immutable undirected graph: adjacency lists plus a normalized edge list.
///
/// No self-loops, no duplicate edges. Disconnected graphs are allowed but
/// produce a warning on construction; the contact process is still well
/// defined on them.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    n: usize,
    edges: Vec<(NodeId, NodeId)>,
    adjacency: Vec<Vec<NodeId>>,
    max_degree: usize,
}

impl Graph {
    /// Builds a graph from an edge list, deduplicating edges. Edges are
    /// normalized to `(min, max)` and sorted.
    pub fn from_edges(
        n: usize,
        edges: impl IntoIterator<Item = (NodeId, NodeId)>,
    ) -> Result<Self, GraphError> {
        if n == 0 {
            return Err(GraphError::Empty);
        }
        let mut set = BTreeSet::new();
        for (line, (u, v)) in edges.into_iter().enumerate() {
            let line = line + 1;
            if u == v {
                return Err(GraphError::SelfLoop { line, node: u });
            }
            for node in [u, v] {
                if node >= n {
                    return Err(GraphError::NodeOutOfRange { line, node, n });
                }
            }
            set.insert((u.min(v), u.max(v)));
        }
        let edges: Vec<_> = set.into_iter().collect();
        let mut adjacency = vec![Vec::new(); n];
        for &(u, v) in &edges {
            adjacency[u].push(v);
            adjacency[v].push(u);
        }
        for nbrs in &mut adjacency {
            nbrs.sort_unstable();
        }
        let max_degree = adjacency.iter().map(Vec::len).max().unwrap_or(0);
        let g = Graph {
            n,
            edges,
            adjacency,
            max_degree,
        };
        if !g.is_connected() {
            log::warn!("graph with {n} nodes is not connected");
        }
        Ok(g)
    }

    /// Parses the edge-list text format: a header line `n m`, then `m` lines
    /// `u v`. Whitespace-delimited; lines starting with `#` are comments.
    pub fn parse_edge_list(text: &str) -> Result<Self, GraphError> {
        let mut header: Option<(usize, usize)> = None;
        let mut edges: Vec<(usize, (NodeId, NodeId))> = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let trimmed = raw.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = trimmed.split_whitespace().collect();
            if fields.len() != 2 {
                return Err(GraphError::Parse {
                    line,
                    msg: format!("expected two fields, got {}", fields.len()),
                });
            }
            let a: usize = fields[0].parse().map_err(|_| GraphError::Parse {
                line,
                msg: format!("invalid integer {:?}", fields[0]),
            })?;
            let b: usize = fields[1].parse().map_err(|_| GraphError::Parse {
                line,
                msg: format!("invalid integer {:?}", fields[1]),
            })?;
            if header.is_none() {
                header = Some((a, b));
            } else {
                edges.push((line, (a, b)));
            }
        }
        let (n, m) = header.ok_or(GraphError::Parse {
            line: 1,
            msg: "missing header line \"n m\"".into(),
        })?;
        if edges.len() != m {
            return Err(GraphError::Parse {
                line: edges.last().map(|&(l, _)| l).unwrap_or(1),
                msg: format!("header declares {m} edges, found {}", edges.len()),
            });
        }
        if n == 0 {
            return Err(GraphError::Empty);
        }
        // Re-validate with real line numbers so errors point at the offender.
        for &(line, (u, v)) in &edges {
            if u == v {
                return Err(GraphError::SelfLoop { line, node: u });
            }
            for node in [u, v] {
                if node >= n {
                    return Err(GraphError::NodeOutOfRange { line, node, n });
                }
            }
        }
        Self::from_edges(n, edges.into_iter().map(|(_, e)| e))
    }

    /// Path graph on `n` nodes with edges `(i, i+1)`.
    pub fn line(n: usize) -> Result<Self, GraphError> {
        if n == 0 {
            return Err(GraphError::Empty);
        }
        Self::from_edges(n, (1..n).map(|i| (i - 1, i)))
    }

    /// 4-neighbor lattice with `rows * cols` nodes, indexed row-major.
    pub fn grid(rows: usize, cols: usize) -> Result<Self, GraphError> {
        if rows == 0 || cols == 0 {
            return Err(GraphError::Empty);
        }
        let id = |r: usize, c: usize| r * cols + c;
        let mut edges = Vec::new();
        for r in 0..rows {
            for c in 0..cols {
                if c + 1 < cols {
                    edges.push((id(r, c), id(r, c + 1)));
                }
                if r + 1 < rows {
                    edges.push((id(r, c), id(r + 1, c)));
                }
            }
        }
        Self::from_edges(rows * cols, edges)
    }

    /// Complete graph on `n` nodes.
    pub fn complete(n: usize) -> Result<Self, GraphError> {
        if n == 0 {
            return Err(GraphError::Empty);
        }
        let mut edges = Vec::new();
        for u in 0..n {
            for v in u + 1..n {
                edges.push((u, v));
            }
        }
        Self::from_edges(n, edges)
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Maximum node degree.
    pub fn max_degree(&self) -> usize {
        self.max_degree
    }

    pub fn degree(&self, v: NodeId) -> usize {
        self.adjacency[v].len()
    }

    pub fn neighbors(&self, v: NodeId) -> &[NodeId] {
        &self.adjacency[v]
    }

    /// Normalized `(min, max)` edge pairs in sorted order.
    pub fn edges(&self) -> &[(NodeId, NodeId)] {
        &self.edges
    }

    pub fn is_connected(&self) -> bool {
        if self.n == 0 {
            return true;
        }
        let mut seen = vec![false; self.n];
        let mut stack = vec![0];
        seen[0] = true;
        let mut count = 1;
        while let Some(v) = stack.pop() {
            for &w in &self.adjacency[v] {
                if !seen[w] {
                    seen[w] = true;
                    count += 1;
                    stack.push(w);
                }
            }
        }
        count == self.n
    }

    /// Number of edges with exactly one endpoint in `bag`. Equals the total
    /// infection rate when the infected set is `bag` and the infection rate
    /// per edge is 1.
    pub fn cut(&self, bag: &Bag) -> usize {
        self.edges
            .iter()
            .filter(|&&(u, v)| bag.contains(u) != bag.contains(v))
            .count()
    }

    /// The boundary edges of `bag`, oriented `(inside, outside)`. The length
    /// of the result equals `cut(bag)`.
    pub fn boundary_edges(&self, bag: &Bag) -> Vec<(NodeId, NodeId)> {
        let mut out = Vec::new();
        for &(u, v) in &self.edges {
            match (bag.contains(u), bag.contains(v)) {
                (true, false) => out.push((u, v)),
                (false, true) => out.push((v, u)),
                _ => {}
            }
        }
        out
    }

    /// Full node set as a bag.
    pub fn full_bag(&self) -> Bag {
        Bag::full(self.n)
    }
}

/// A subset of the node set, stored as a bit set. Membership tests are O(1);
/// iteration is in ascending node order. For graphs with at most 30 nodes the
/// whole bag packs into a single `u32` key (see [`Bag::mask32`]), which is
/// what the impedance memo table indexes by.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct Bag {
    blocks: Vec<u64>,
    len: usize,
}

impl Bag {
    pub fn new() -> Self {
        Bag::default()
    }

    pub fn full(n: usize) -> Self {
        let mut bag = Bag::new();
        for v in 0..n {
            bag.insert(v);
        }
        bag
    }

    pub fn from_mask32(mask: u32) -> Self {
        let mut bag = Bag::new();
        if mask != 0 {
            bag.blocks.push(mask as u64);
            bag.len = mask.count_ones() as usize;
        }
        bag
    }

    /// Packed form, available when every member is below 32. Bags on graphs
    /// in exact-impedance range (n ≤ 30) always qualify.
    pub fn mask32(&self) -> Option<u32> {
        match self.blocks.len() {
            0 => Some(0),
            1 if self.blocks[0] <= u32::MAX as u64 => Some(self.blocks[0] as u32),
            _ => None,
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn contains(&self, v: NodeId) -> bool {
        self.blocks
            .get(v / 64)
            .is_some_and(|b| b & (1 << (v % 64)) != 0)
    }

    /// Returns true if `v` was newly inserted.
    pub fn insert(&mut self, v: NodeId) -> bool {
        let block = v / 64;
        if block >= self.blocks.len() {
            self.blocks.resize(block + 1, 0);
        }
        let bit = 1u64 << (v % 64);
        if self.blocks[block] & bit != 0 {
            return false;
        }
        self.blocks[block] |= bit;
        self.len += 1;
        true
    }

    /// Returns true if `v` was present.
    pub fn remove(&mut self, v: NodeId) -> bool {
        let block = v / 64;
        let bit = 1u64 << (v % 64);
        if block >= self.blocks.len() || self.blocks[block] & bit == 0 {
            return false;
        }
        self.blocks[block] &= !bit;
        self.len -= 1;
        while self.blocks.last() == Some(&0) {
            self.blocks.pop();
        }
        true
    }

    /// Members in ascending order.
    pub fn iter(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.blocks.iter().enumerate().flat_map(|(i, &block)| {
            let mut rest = block;
            std::iter::from_fn(move || {
                if rest == 0 {
                    return None;
                }
                let bit = rest.trailing_zeros() as usize;
                rest &= rest - 1;
                Some(i * 64 + bit)
            })
        })
    }

    pub fn min(&self) -> Option<NodeId> {
        self.iter().next()
    }

    pub fn is_subset_of(&self, other: &Bag) -> bool {
        self.iter().all(|v| other.contains(v))
    }

    pub fn union(&self, other: &Bag) -> Bag {
        let mut out = self.clone();
        for v in other.iter() {
            out.insert(v);
        }
        out
    }

    /// `self \ other`.
    pub fn difference(&self, other: &Bag) -> Bag {
        let mut out = Bag::new();
        for v in self.iter().filter(|&v| !other.contains(v)) {
            out.insert(v);
        }
        out
    }

    /// Complement with respect to the node set `[0, n)`.
    pub fn complement(&self, n: usize) -> Bag {
        let mut out = Bag::new();
        for v in (0..n).filter(|&v| !self.contains(v)) {
            out.insert(v);
        }
        out
    }
}

impl FromIterator<NodeId> for Bag {
    fn from_iter<I: IntoIterator<Item = NodeId>>(iter: I) -> Self {
        let mut bag = Bag::new();
        for v in iter {
            bag.insert(v);
        }
        bag
    }
}

impl fmt::Debug for Bag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}
