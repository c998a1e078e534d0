use super::LabeledGraph;
use crate::error::{Error, Result};
use crate::nodeset::NodeSet;

/// Maximum cardinality search visit order; ties go to the smallest label.
pub fn mcs_order(g: &LabeledGraph) -> Vec<usize> {
    let n = g.node_count();
    let mut weight = vec![0usize; n];
    let mut visited = NodeSet::EMPTY;
    let mut order = Vec::with_capacity(n);
    for _ in 0..n {
        let v = (0..n)
            .filter(|&v| !visited.contains(v))
            .max_by(|&a, &b| weight[a].cmp(&weight[b]).then(b.cmp(&a)))
            .expect("unvisited node remains");
        visited.insert(v);
        order.push(v);
        for u in g.neighbours(v).difference(visited) {
            weight[u] += 1;
        }
    }
    order
}

/// For each node in MCS order, its already-visited neighbours.
fn earlier_neighbours(g: &LabeledGraph, order: &[usize]) -> Vec<NodeSet> {
    let mut seen = NodeSet::EMPTY;
    order
        .iter()
        .map(|&v| {
            let prev = g.neighbours(v).intersection(seen);
            seen.insert(v);
            prev
        })
        .collect()
}

/// Chordality via MCS plus the perfect-elimination check: for every node, its
/// earlier neighbours other than the most recent one must be adjacent to it.
pub fn is_decomposable(g: &LabeledGraph) -> bool {
    let order = mcs_order(g);
    let mut position = vec![0usize; g.node_count()];
    for (k, &v) in order.iter().enumerate() {
        position[v] = k;
    }
    let prev = earlier_neighbours(g, &order);
    for (k, &v) in order.iter().enumerate() {
        let Some(parent) = prev[k].iter().max_by_key(|&u| position[u]) else {
            continue;
        };
        let rest = prev[k].without(parent);
        if !rest.is_subset(g.neighbours(parent)) {
            return false;
        }
        debug_assert!(position[parent] < position[v]);
    }
    true
}

/// Maximal cliques of a decomposable graph in MCS discovery order.
pub fn maximal_cliques(g: &LabeledGraph) -> Result<Vec<NodeSet>> {
    if !is_decomposable(g) {
        return Err(Error::NotDecomposable);
    }
    let order = mcs_order(g);
    let prev = earlier_neighbours(g, &order);
    let candidates: Vec<NodeSet> = order.iter().zip(&prev).map(|(&v, &p)| p.with(v)).collect();
    let mut cliques: Vec<NodeSet> = Vec::new();
    for (k, &c) in candidates.iter().enumerate() {
        let dominated = candidates
            .iter()
            .enumerate()
            .any(|(j, &d)| j != k && (c.is_strict_subset(d) || (c == d && j < k)));
        if !dominated {
            cliques.push(c);
        }
    }
    Ok(cliques)
}
