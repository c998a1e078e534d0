//! Counting junction trees: µ(G) = ∏ over distinct separators of ν(S).

use std::collections::BTreeMap;

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::One;

use super::junction::UnionFind;
use super::{graph_of, junction_tree_of, JunctionTree, LabeledGraph};
use crate::error::{Error, Result};
use crate::nodeset::NodeSet;

/// Sizes of the subtrees left after cutting every edge with separator `s`
/// out of the subtree of cliques that contain `s`.
fn separator_blocks(t: &JunctionTree, s: NodeSet) -> Option<Vec<usize>> {
    let cliques = t.cliques();
    let mut cut_any = false;
    let mut uf = UnionFind::new(cliques.len());
    for &(a, b) in t.edges() {
        let sep = cliques[a].intersection(cliques[b]);
        if sep == s {
            cut_any = true;
        } else if s.is_subset(sep) {
            uf.union(a, b);
        }
    }
    if !cut_any {
        return None;
    }
    let mut sizes: BTreeMap<usize, usize> = BTreeMap::new();
    for (i, &c) in cliques.iter().enumerate() {
        if s.is_subset(c) {
            *sizes.entry(uf.find(i)).or_insert(0) += 1;
        }
    }
    Some(sizes.into_values().collect())
}

fn unknown(s: NodeSet) -> Error {
    Error::UnknownSeparator(s.to_string())
}

/// Number of junction trees reachable by re-linking the tree at separator `s`:
/// `(∏ f_j) (∑ f_j)^(k-2)` over the `k` blocks of sizes `f_j`.
pub fn nu(t: &JunctionTree, s: NodeSet) -> Result<BigUint> {
    let sizes = separator_blocks(t, s).ok_or_else(|| unknown(s))?;
    let total: usize = sizes.iter().sum();
    let mut out: BigUint = sizes.iter().map(|&f| BigUint::from(f)).product();
    out *= BigUint::from(total).pow((sizes.len() - 2) as u32);
    Ok(out)
}

/// `ln ν(s)` in floating point.
pub fn log_nu(t: &JunctionTree, s: NodeSet) -> Result<f64> {
    let sizes = separator_blocks(t, s).ok_or_else(|| unknown(s))?;
    Ok(log_nu_from_sizes(&sizes))
}

fn log_nu_from_sizes(sizes: &[usize]) -> f64 {
    let total: usize = sizes.iter().sum();
    sizes.iter().map(|&f| (f as f64).ln()).sum::<f64>()
        + (sizes.len() as f64 - 2.0) * (total as f64).ln()
}

fn distinct_separators(t: &JunctionTree) -> Vec<NodeSet> {
    let mut seps: Vec<NodeSet> = t.separators().collect();
    seps.sort_unstable();
    seps.dedup();
    seps
}

/// µ of the graph underlying `t`.
pub fn count_trees_of(t: &JunctionTree) -> BigUint {
    distinct_separators(t)
        .into_iter()
        .map(|s| nu(t, s).expect("separator taken from the tree"))
        .fold(BigUint::one(), |acc, v| acc * v)
}

pub fn log_count_trees_of(t: &JunctionTree) -> f64 {
    distinct_separators(t)
        .into_iter()
        .map(|s| log_nu(t, s).expect("separator taken from the tree"))
        .sum()
}

/// µ(g): the number of distinct junction trees of `g`.
pub fn count_junction_trees(g: &LabeledGraph) -> Result<BigUint> {
    Ok(count_trees_of(&junction_tree_of(g)?))
}

fn check_expansion(t_m: &JunctionTree, t_next: &JunctionTree) -> Result<()> {
    let m = t_m.node_count();
    if t_next.node_count() != m + 1 {
        return Err(Error::InconsistentExpansion(format!(
            "expected a tree on {} nodes, got {}",
            m + 1,
            t_next.node_count()
        )));
    }
    if graph_of(t_next).induced_prefix(m) != graph_of(t_m) {
        return Err(Error::InconsistentExpansion(
            "new tree does not restrict to the old graph".into(),
        ));
    }
    Ok(())
}

/// Separators of `t_next` on tree edges touching a clique that holds the new node.
pub fn expansion_separators(t_m: &JunctionTree, t_next: &JunctionTree) -> Vec<NodeSet> {
    let v = t_m.node_count();
    let cl = t_next.cliques();
    let mut out: Vec<NodeSet> = t_next
        .edges()
        .iter()
        .filter(|&&(a, b)| cl[a].contains(v) || cl[b].contains(v))
        .map(|&(a, b)| cl[a].intersection(cl[b]))
        .collect();
    out.sort_unstable();
    out.dedup();
    out
}

fn affected(t: &JunctionTree, new_separators: &[NodeSet]) -> Vec<NodeSet> {
    distinct_separators(t)
        .into_iter()
        .filter(|s| new_separators.iter().any(|n| s.is_subset(*n)))
        .collect()
}

/// µ(g(t_m)) / µ(g(t_next)) from the ν factors of separators lying inside
/// some separator created by the expansion.
pub fn mu_ratio(
    t_m: &JunctionTree,
    t_next: &JunctionTree,
    new_separators: &[NodeSet],
) -> Result<BigRational> {
    check_expansion(t_m, t_next)?;
    let num = affected(t_m, new_separators)
        .into_iter()
        .map(|s| nu(t_m, s))
        .try_fold(BigUint::one(), |acc, v| v.map(|v| acc * v))?;
    let den = affected(t_next, new_separators)
        .into_iter()
        .map(|s| nu(t_next, s))
        .try_fold(BigUint::one(), |acc, v| v.map(|v| acc * v))?;
    Ok(BigRational::new(num.into(), den.into()))
}

/// `ln µ(g(t_m)) − ln µ(g(t_next))`, same factorisation as [`mu_ratio`].
/// The restriction precondition is only checked in debug builds.
pub fn log_mu_ratio(t_m: &JunctionTree, t_next: &JunctionTree) -> f64 {
    debug_assert!(check_expansion(t_m, t_next).is_ok());
    let created = expansion_separators(t_m, t_next);
    let up: f64 = affected(t_m, &created)
        .into_iter()
        .map(|s| log_nu(t_m, s).expect("own separator"))
        .sum();
    let down: f64 = affected(t_next, &created)
        .into_iter()
        .map(|s| log_nu(t_next, s).expect("own separator"))
        .sum();
    up - down
}

/// Signed clique and separator differences between two trees.
///
/// Cliques present only in `t_b` carry `+1`, only in `t_a` carry `-1`.
/// Separator entries carry the multiplicity difference `count_b − count_a`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct TreeDelta {
    pub cliques: Vec<(NodeSet, i32)>,
    pub separators: Vec<(NodeSet, i32)>,
}

impl TreeDelta {
    pub fn is_empty(&self) -> bool {
        self.cliques.is_empty() && self.separators.is_empty()
    }
}

pub fn clique_sep_symmetric_diff(t_a: &JunctionTree, t_b: &JunctionTree) -> TreeDelta {
    // Cliques are stored sorted, so a merge walk finds the difference.
    let (a, b) = (t_a.cliques(), t_b.cliques());
    let mut cliques = Vec::new();
    let (mut i, mut j) = (0, 0);
    while i < a.len() || j < b.len() {
        match (a.get(i), b.get(j)) {
            (Some(x), Some(y)) if x == y => {
                i += 1;
                j += 1;
            }
            (Some(x), Some(y)) if x < y => {
                cliques.push((*x, -1));
                i += 1;
            }
            (Some(_), Some(y)) => {
                cliques.push((*y, 1));
                j += 1;
            }
            (Some(x), None) => {
                cliques.push((*x, -1));
                i += 1;
            }
            (None, Some(y)) => {
                cliques.push((*y, 1));
                j += 1;
            }
            (None, None) => unreachable!(),
        }
    }
    let mut counts: BTreeMap<NodeSet, i32> = BTreeMap::new();
    for s in t_b.separators() {
        *counts.entry(s).or_insert(0) += 1;
    }
    for s in t_a.separators() {
        *counts.entry(s).or_insert(0) -= 1;
    }
    let separators = counts.into_iter().filter(|&(_, c)| c != 0).collect();
    TreeDelta {
        cliques,
        separators,
    }
}
