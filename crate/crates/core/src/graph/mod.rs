//! Decomposable graphs, junction trees and their counting combinatorics.

mod chordal;
mod count;
pub mod json;
pub(crate) mod junction;

pub use chordal::{is_decomposable, maximal_cliques, mcs_order};
pub use count::{
    clique_sep_symmetric_diff, count_junction_trees, count_trees_of, expansion_separators,
    log_count_trees_of, log_mu_ratio, log_nu, mu_ratio, nu, TreeDelta,
};
pub use junction::{graph_of, junction_tree_of, separators_of, JunctionTree, SeparatorMultiset};

use crate::error::{Error, Result};
use crate::nodeset::{NodeSet, MAX_NODES};

/// An undirected simple graph on nodes `0..n`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct LabeledGraph {
    adj: Vec<NodeSet>,
}

impl LabeledGraph {
    pub fn empty(n: usize) -> Self {
        assert!(n <= MAX_NODES, "at most {MAX_NODES} nodes are supported");
        LabeledGraph {
            adj: vec![NodeSet::EMPTY; n],
        }
    }

    pub fn complete(n: usize) -> Self {
        let all = NodeSet::prefix(n);
        LabeledGraph {
            adj: (0..n).map(|v| all.without(v)).collect(),
        }
    }

    /// Builds a graph from 0-based edge pairs.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        if n > MAX_NODES {
            return Err(Error::TooLarge {
                what: "node count",
                value: n,
                limit: MAX_NODES,
            });
        }
        let mut g = LabeledGraph::empty(n);
        for &(a, b) in edges {
            if a >= n || b >= n {
                return Err(Error::InvalidConfig(format!(
                    "edge ({}, {}) out of range for {n} nodes",
                    a + 1,
                    b + 1
                )));
            }
            if a == b {
                return Err(Error::InvalidConfig(format!("self-loop at node {}", a + 1)));
            }
            g.add_edge(a, b);
        }
        Ok(g)
    }

    /// Graph whose edge `k` (in [`Self::all_pairs`] order) is present iff bit `k` of `mask` is set.
    pub fn from_pair_mask(n: usize, mask: u64) -> Self {
        let mut g = LabeledGraph::empty(n);
        for (k, (a, b)) in Self::all_pairs(n).enumerate() {
            if mask & (1u64 << k) != 0 {
                g.add_edge(a, b);
            }
        }
        g
    }

    /// All unordered pairs `(a, b)`, `a < b`, in lexicographic order.
    pub fn all_pairs(n: usize) -> impl Iterator<Item = (usize, usize)> {
        (0..n).flat_map(move |a| (a + 1..n).map(move |b| (a, b)))
    }

    #[inline]
    pub fn node_count(&self) -> usize {
        self.adj.len()
    }

    #[inline]
    pub fn neighbours(&self, v: usize) -> NodeSet {
        self.adj[v]
    }

    #[inline]
    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.adj[a].contains(b)
    }

    pub fn add_edge(&mut self, a: usize, b: usize) {
        debug_assert_ne!(a, b);
        self.adj[a].insert(b);
        self.adj[b].insert(a);
    }

    pub fn remove_edge(&mut self, a: usize, b: usize) {
        self.adj[a].remove(b);
        self.adj[b].remove(a);
    }

    /// Adds a new node with the given neighbourhood and returns its label.
    pub fn push_node(&mut self, neighbours: NodeSet) -> usize {
        let v = self.adj.len();
        assert!(v < MAX_NODES);
        for u in neighbours {
            self.adj[u].insert(v);
        }
        self.adj.push(neighbours);
        v
    }

    /// Sorted edge list with `a < b`.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for (a, nb) in self.adj.iter().enumerate() {
            for b in nb.iter().filter(|&b| b > a) {
                out.push((a, b));
            }
        }
        out
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(|s| s.len()).sum::<usize>() / 2
    }

    pub fn is_complete_set(&self, set: NodeSet) -> bool {
        set.iter().all(|v| set.without(v).is_subset(self.adj[v]))
    }

    /// Subgraph induced by `{0, .., m-1}`.
    pub fn induced_prefix(&self, m: usize) -> LabeledGraph {
        let keep = NodeSet::prefix(m);
        LabeledGraph {
            adj: self.adj[..m].iter().map(|s| s.intersection(keep)).collect(),
        }
    }

    /// Relabels node `i` to `map[i]` in a graph on `n` nodes.
    pub fn relabel(&self, map: &[usize], n: usize) -> LabeledGraph {
        let mut g = LabeledGraph::empty(n);
        for (a, b) in self.edges() {
            g.add_edge(map[a], map[b]);
        }
        g
    }
}

impl std::fmt::Debug for LabeledGraph {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let edges: Vec<_> = self
            .edges()
            .into_iter()
            .map(|(a, b)| (a + 1, b + 1))
            .collect();
        write!(f, "LabeledGraph(p={}, {:?})", self.node_count(), edges)
    }
}

impl PartialOrd for LabeledGraph {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

/// Node count first, then lexicographic edge list.
impl Ord for LabeledGraph {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.node_count()
            .cmp(&other.node_count())
            .then_with(|| self.edges().cmp(&other.edges()))
    }
}
