use std::collections::BTreeMap;

use super::{maximal_cliques, LabeledGraph};
use crate::error::{Error, Result};
use crate::nodeset::NodeSet;

/// A junction tree over the maximal cliques of a decomposable graph on `0..nodes`.
///
/// Stored in canonical form: cliques sorted lexicographically and tree edges
/// as sorted `(i, j)` pairs with `i < j`. Two trees are equal iff they have the
/// same cliques joined by the same edges.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct JunctionTree {
    nodes: usize,
    cliques: Vec<NodeSet>,
    edges: Vec<(usize, usize)>,
}

/// Multiset of separators, keyed by node set.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct SeparatorMultiset {
    pub entries: BTreeMap<NodeSet, usize>,
}

impl SeparatorMultiset {
    pub fn total(&self) -> usize {
        self.entries.values().sum()
    }

    pub fn multiplicity(&self, s: NodeSet) -> usize {
        self.entries.get(&s).copied().unwrap_or(0)
    }
}

impl JunctionTree {
    /// The tree of the one-node graph.
    pub fn single_node() -> Self {
        JunctionTree {
            nodes: 1,
            cliques: vec![NodeSet::singleton(0)],
            edges: Vec::new(),
        }
    }

    /// Builds and validates a tree.
    pub fn new(nodes: usize, cliques: Vec<NodeSet>, edges: Vec<(usize, usize)>) -> Result<Self> {
        if edges
            .iter()
            .any(|&(a, b)| a >= cliques.len() || b >= cliques.len())
        {
            return Err(Error::InvalidConfig(
                "tree edge refers to a missing clique".into(),
            ));
        }
        let t = Self::from_parts(nodes, cliques, edges);
        t.validate().map_err(Error::InvalidConfig)?;
        Ok(t)
    }

    /// Canonicalises without validating.
    pub(crate) fn from_parts(
        nodes: usize,
        cliques: Vec<NodeSet>,
        edges: Vec<(usize, usize)>,
    ) -> Self {
        let mut perm: Vec<usize> = (0..cliques.len()).collect();
        perm.sort_by(|&a, &b| cliques[a].cmp(&cliques[b]));
        let mut rank = vec![0usize; cliques.len()];
        for (new, &old) in perm.iter().enumerate() {
            rank[old] = new;
        }
        let cliques = perm.iter().map(|&i| cliques[i]).collect();
        let mut edges: Vec<(usize, usize)> = edges
            .into_iter()
            .map(|(a, b)| {
                let (x, y) = (rank[a], rank[b]);
                (x.min(y), x.max(y))
            })
            .collect();
        edges.sort_unstable();
        JunctionTree {
            nodes,
            cliques,
            edges,
        }
    }

    /// The same tree with node `i` renamed `map[i]`; `map` must be a permutation.
    pub fn relabel(&self, map: &[usize]) -> Self {
        debug_assert_eq!(map.len(), self.nodes);
        let cliques = self
            .cliques
            .iter()
            .map(|c| c.iter().map(|v| map[v]).collect())
            .collect();
        Self::from_parts(self.nodes, cliques, self.edges.clone())
    }

    #[inline]
    pub fn node_count(&self) -> usize {
        self.nodes
    }

    #[inline]
    pub fn cliques(&self) -> &[NodeSet] {
        &self.cliques
    }

    #[inline]
    pub fn clique_count(&self) -> usize {
        self.cliques.len()
    }

    /// Tree edges as clique-index pairs.
    #[inline]
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    /// Separator of each tree edge, aligned with [`Self::edges`].
    pub fn separators(&self) -> impl Iterator<Item = NodeSet> + '_ {
        self.edges
            .iter()
            .map(|&(a, b)| self.cliques[a].intersection(self.cliques[b]))
    }

    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.cliques.len()];
        for &(a, b) in &self.edges {
            adj[a].push(b);
            adj[b].push(a);
        }
        adj
    }

    pub fn find_clique(&self, set: NodeSet) -> Option<usize> {
        self.cliques.binary_search(&set).ok()
    }

    pub fn max_clique_size(&self) -> usize {
        self.cliques.iter().map(|c| c.len()).max().unwrap_or(0)
    }

    /// Checks every junction-tree invariant.
    pub fn validate(&self) -> std::result::Result<(), String> {
        let k = self.cliques.len();
        if k == 0 {
            return Err("a junction tree needs at least one clique".into());
        }
        let covered = self
            .cliques
            .iter()
            .fold(NodeSet::EMPTY, |acc, &c| acc.union(c));
        if covered != NodeSet::prefix(self.nodes) {
            return Err(format!(
                "cliques cover {covered} but the tree has {} nodes",
                self.nodes
            ));
        }
        for (i, &c) in self.cliques.iter().enumerate() {
            if c.is_empty() {
                return Err("empty clique".into());
            }
            for &d in &self.cliques[i + 1..] {
                if c.is_subset(d) || d.is_subset(c) {
                    return Err(format!("cliques {c} and {d} are nested"));
                }
            }
        }
        if self.edges.len() != k - 1 {
            return Err(format!("{} edges for {k} cliques", self.edges.len()));
        }
        if self.edges.windows(2).any(|w| w[0] == w[1]) {
            return Err("duplicate tree edge".into());
        }
        if !connected(k, self.edges.iter().copied()) {
            return Err("tree edges do not connect all cliques".into());
        }
        // Running intersection: the cliques holding any node form a subtree.
        for x in 0..self.nodes {
            let holders: Vec<usize> = (0..k).filter(|&i| self.cliques[i].contains(x)).collect();
            let within = self
                .edges
                .iter()
                .filter(|&&(a, b)| self.cliques[a].contains(x) && self.cliques[b].contains(x))
                .count();
            // a forest on h vertices is a tree iff it has h - 1 edges
            if within + 1 != holders.len() {
                return Err(format!(
                    "cliques containing node {} are disconnected",
                    x + 1
                ));
            }
        }
        Ok(())
    }
}

pub(crate) fn connected(k: usize, edges: impl Iterator<Item = (usize, usize)>) -> bool {
    let mut uf = UnionFind::new(k);
    let mut joined = 0;
    for (a, b) in edges {
        if uf.union(a, b) {
            joined += 1;
        }
    }
    joined + 1 == k
}

pub(crate) struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    pub(crate) fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
        }
    }

    pub(crate) fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    pub(crate) fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        self.parent[ra.max(rb)] = ra.min(rb);
        true
    }
}

impl std::fmt::Debug for JunctionTree {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "JunctionTree[")?;
        for (i, c) in self.cliques.iter().enumerate() {
            if i > 0 {
                write!(f, " ")?;
            }
            write!(f, "{i}:{c}")?;
        }
        write!(f, " | {:?}]", self.edges)
    }
}

/// Canonical junction tree: maximum-weight spanning tree over clique
/// intersection sizes, ties broken by lexicographic clique order.
pub fn junction_tree_of(g: &LabeledGraph) -> Result<JunctionTree> {
    if g.node_count() == 0 {
        return Err(Error::InvalidConfig("graph has no nodes".into()));
    }
    let mut cliques = maximal_cliques(g)?;
    cliques.sort();
    let k = cliques.len();
    let mut candidates: Vec<(usize, usize, usize)> = Vec::with_capacity(k * (k - 1) / 2);
    for i in 0..k {
        for j in i + 1..k {
            candidates.push((cliques[i].intersection(cliques[j]).len(), i, j));
        }
    }
    candidates.sort_by(|a, b| b.0.cmp(&a.0).then((a.1, a.2).cmp(&(b.1, b.2))));
    let mut uf = UnionFind::new(k);
    let mut edges = Vec::with_capacity(k.saturating_sub(1));
    for (_, i, j) in candidates {
        if uf.union(i, j) {
            edges.push((i, j));
        }
    }
    let t = JunctionTree::from_parts(g.node_count(), cliques, edges);
    debug_assert!(t.validate().is_ok(), "{t:?}");
    Ok(t)
}

/// Union of complete graphs over the cliques.
pub fn graph_of(t: &JunctionTree) -> LabeledGraph {
    let mut g = LabeledGraph::empty(t.node_count());
    for &c in t.cliques() {
        for a in c {
            for b in c.iter().filter(|&b| b > a) {
                g.add_edge(a, b);
            }
        }
    }
    g
}

pub fn separators_of(t: &JunctionTree) -> SeparatorMultiset {
    let mut entries = BTreeMap::new();
    for s in t.separators() {
        *entries.entry(s).or_insert(0) += 1;
    }
    SeparatorMultiset { entries }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(nodes: &[usize]) -> NodeSet {
        nodes.iter().collect()
    }

    #[test]
    fn complete_graph_has_one_clique() {
        let t = junction_tree_of(&LabeledGraph::complete(3)).unwrap();
        assert_eq!(t.cliques(), &[set(&[0, 1, 2])]);
        assert!(t.edges().is_empty());
    }

    #[test]
    fn path_has_two_cliques() {
        let g = LabeledGraph::from_edges(3, &[(0, 1), (1, 2)]).unwrap();
        let t = junction_tree_of(&g).unwrap();
        assert_eq!(t.cliques(), &[set(&[0, 1]), set(&[1, 2])]);
        assert_eq!(t.edges(), &[(0, 1)]);
        assert_eq!(separators_of(&t).entries, BTreeMap::from([(set(&[1]), 1)]));
    }

    #[test]
    fn empty_graph_is_star_at_first_clique() {
        let t = junction_tree_of(&LabeledGraph::empty(3)).unwrap();
        assert_eq!(t.clique_count(), 3);
        assert_eq!(t.edges(), &[(0, 1), (0, 2)]);
        assert_eq!(
            separators_of(&t).entries,
            BTreeMap::from([(NodeSet::EMPTY, 2)])
        );
    }

    #[test]
    fn two_triangles_share_a_separator() {
        let g = LabeledGraph::from_edges(4, &[(0, 1), (0, 2), (1, 2), (1, 3), (2, 3)]).unwrap();
        let t = junction_tree_of(&g).unwrap();
        assert_eq!(
            separators_of(&t).entries,
            BTreeMap::from([(set(&[1, 2]), 1)])
        );
    }

    #[test]
    fn graph_of_examples() {
        let t = JunctionTree::new(3, vec![set(&[0, 1]), set(&[1, 2])], vec![(0, 1)]).unwrap();
        assert_eq!(graph_of(&t).edges(), vec![(0, 1), (1, 2)]);
        let t = JunctionTree::new(
            3,
            vec![set(&[0]), set(&[1]), set(&[2])],
            vec![(0, 1), (1, 2)],
        )
        .unwrap();
        assert_eq!(graph_of(&t).edge_count(), 0);
        assert_eq!(
            graph_of(&junction_tree_of(&LabeledGraph::complete(4)).unwrap()).edge_count(),
            6
        );
    }

    #[test]
    fn validate_rejects_broken_running_intersection() {
        // {1,2} - {3} - {2,4}: node 2 is split
        let r = JunctionTree::new(
            4,
            vec![set(&[0, 1]), set(&[2]), set(&[1, 3])],
            vec![(0, 1), (1, 2)],
        );
        assert!(r.is_err());
    }

    #[test]
    fn round_trip_through_graph_up_to_five_nodes() {
        for n in 1..=5 {
            for mask in 0u64..(1 << (n * (n - 1) / 2)) {
                let g = LabeledGraph::from_pair_mask(n, mask);
                if let Ok(t) = junction_tree_of(&g) {
                    assert_eq!(graph_of(&t), g);
                    assert_eq!(separators_of(&t).total() + 1, t.clique_count());
                }
            }
        }
    }
}
