//! The junction-tree expander K_m, its exact density and its inverse.
//!
//! A move adds internal node `m` to a tree on `0..m`. With probability β the
//! node is isolated: a singleton clique hangs off a uniformly chosen host and
//! takes each of the host's empty-separator neighbours with probability 1/2.
//! Otherwise a connected subtree τ is grown from a uniform anchor, each
//! frontier clique joining with probability α. Every C ∈ τ gets a neighbour
//! set N_C with (union of its τ-separators) ⊆ N_C ⊆ C that strictly contains
//! each of those separators; N_C ∪ {m} replaces C when N_C = C and hangs off C
//! otherwise. τ-edges move to the new cliques, and a clique Z outside τ with
//! C ∩ Z ⊆ N_C moves from a kept C to its new clique with probability 1/2.

use rand::Rng;

use crate::error::{Error, Result};
use crate::graph::{graph_of, JunctionTree};
use crate::nodeset::NodeSet;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExpanderConfig {
    alpha: f64,
    beta: f64,
}

impl ExpanderConfig {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        for (name, x) in [("alpha", alpha), ("beta", beta)] {
            if !(x > 0.0 && x < 1.0) {
                return Err(Error::InvalidConfig(format!(
                    "{name} must lie in (0, 1), got {x}"
                )));
            }
        }
        Ok(ExpanderConfig { alpha, beta })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }
}

/// The random choices of one expansion. Indices refer to cliques of the source tree.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum ExpansionMove {
    Isolate {
        host: usize,
        moved: Vec<usize>,
    },
    Connect {
        anchor: usize,
        /// Sorted clique indices of τ.
        subtree: Vec<usize>,
        /// N_C for each entry of `subtree`.
        attach: Vec<NodeSet>,
        /// Cliques moved to the new clique of each entry of `subtree`.
        moved: Vec<Vec<usize>>,
    },
}

/// Union of the separators between `c` and its τ-neighbours, and the list of them.
fn tau_separators(
    t: &JunctionTree,
    adj: &[Vec<usize>],
    in_tau: &[bool],
    c: usize,
) -> (NodeSet, Vec<NodeSet>) {
    let cl = t.cliques();
    let seps: Vec<NodeSet> = adj[c]
        .iter()
        .filter(|&&z| in_tau[z])
        .map(|&z| cl[c].intersection(cl[z]))
        .collect();
    let union = seps.iter().fold(NodeSet::EMPTY, |acc, &s| acc.union(s));
    (union, seps)
}

fn attach_is_valid(c: NodeSet, union: NodeSet, seps: &[NodeSet], single: bool, n: NodeSet) -> bool {
    union.is_subset(n)
        && n.is_subset(c)
        && seps.iter().all(|s| s.is_strict_subset(n))
        && !(single && n.is_empty())
}

/// ln of the number of valid N_C given the τ-separators of C.
fn log_attach_count(c: NodeSet, union: NodeSet, seps: &[NodeSet], single: bool) -> f64 {
    let free = c.difference(union).len() as i32;
    let empty_invalid = (single && union.is_empty()) || seps.contains(&union);
    (2f64.powi(free) - if empty_invalid { 1.0 } else { 0.0 }).ln()
}

/// Cliques outside τ that may follow `c` to its new clique.
fn movable(
    t: &JunctionTree,
    adj: &[Vec<usize>],
    in_tau: &[bool],
    c: usize,
    n: NodeSet,
) -> Vec<usize> {
    let cl = t.cliques();
    adj[c]
        .iter()
        .copied()
        .filter(|&z| !in_tau[z] && cl[c].intersection(cl[z]).is_subset(n))
        .collect()
}

fn empty_separator_neighbours(t: &JunctionTree, adj: &[Vec<usize>], h: usize) -> Vec<usize> {
    let cl = t.cliques();
    adj[h]
        .iter()
        .copied()
        .filter(|&z| cl[h].intersection(cl[z]).is_empty())
        .collect()
}

fn sorted(mut v: Vec<usize>) -> Vec<usize> {
    v.sort_unstable();
    v
}

/// Draws an expansion of `t` and returns the new tree with the move that built it.
pub fn expand<R: Rng + ?Sized>(
    t: &JunctionTree,
    cfg: &ExpanderConfig,
    rng: &mut R,
) -> (JunctionTree, ExpansionMove) {
    let k = t.clique_count();
    let adj = t.adjacency();
    let cl = t.cliques();
    let mv = if rng.random::<f64>() < cfg.beta {
        let host = rng.random_range(0..k);
        let moved = empty_separator_neighbours(t, &adj, host)
            .into_iter()
            .filter(|_| rng.random::<bool>())
            .collect();
        ExpansionMove::Isolate {
            host,
            moved: sorted(moved),
        }
    } else {
        let anchor = rng.random_range(0..k);
        let mut in_tau = vec![false; k];
        let mut seen = vec![false; k];
        in_tau[anchor] = true;
        seen[anchor] = true;
        let mut queue = std::collections::VecDeque::from([anchor]);
        while let Some(c) = queue.pop_front() {
            for &z in &adj[c] {
                if !seen[z] {
                    seen[z] = true;
                    if rng.random::<f64>() < cfg.alpha {
                        in_tau[z] = true;
                        queue.push_back(z);
                    }
                }
            }
        }
        let subtree: Vec<usize> = (0..k).filter(|&c| in_tau[c]).collect();
        let single = subtree.len() == 1;
        let mut attach = Vec::with_capacity(subtree.len());
        let mut moved = Vec::with_capacity(subtree.len());
        for &c in &subtree {
            let (union, seps) = tau_separators(t, &adj, &in_tau, c);
            let free = cl[c].difference(union);
            let n = loop {
                let w = NodeSet::from_bits(rng.random::<u64>() & free.bits());
                let n = union.union(w);
                if attach_is_valid(cl[c], union, &seps, single, n) {
                    break n;
                }
            };
            let m: Vec<usize> = if n == cl[c] {
                Vec::new()
            } else {
                movable(t, &adj, &in_tau, c, n)
                    .into_iter()
                    .filter(|_| rng.random::<bool>())
                    .collect()
            };
            attach.push(n);
            moved.push(m);
        }
        ExpansionMove::Connect {
            anchor,
            subtree,
            attach,
            moved,
        }
    };
    (replay(t, &mv), mv)
}

/// Rebuilds the target of `mv` applied to `t`.
pub fn replay(t: &JunctionTree, mv: &ExpansionMove) -> JunctionTree {
    let v = t.node_count();
    let mut cliques = t.cliques().to_vec();
    let mut edges = Vec::with_capacity(cliques.len() + 1);
    match mv {
        ExpansionMove::Isolate { host, moved } => {
            let d = cliques.len();
            cliques.push(NodeSet::singleton(v));
            for &(a, b) in t.edges() {
                if a == *host && moved.contains(&b) {
                    edges.push((d, b));
                } else if b == *host && moved.contains(&a) {
                    edges.push((a, d));
                } else {
                    edges.push((a, b));
                }
            }
            edges.push((*host, d));
        }
        ExpansionMove::Connect {
            subtree,
            attach,
            moved,
            ..
        } => {
            let mut pos = vec![None; cliques.len()];
            for (i, &c) in subtree.iter().enumerate() {
                pos[c] = Some(i);
            }
            let mut new_of = Vec::with_capacity(subtree.len());
            for (&c, &n) in subtree.iter().zip(attach) {
                if n == cliques[c] {
                    cliques[c] = n.with(v);
                    new_of.push(c);
                } else {
                    cliques.push(n.with(v));
                    let d = cliques.len() - 1;
                    edges.push((c, d));
                    new_of.push(d);
                }
            }
            for &(a, b) in t.edges() {
                edges.push(match (pos[a], pos[b]) {
                    (Some(i), Some(j)) => (new_of[i], new_of[j]),
                    (Some(i), None) if moved[i].contains(&b) => (new_of[i], b),
                    (None, Some(j)) if moved[j].contains(&a) => (a, new_of[j]),
                    _ => (a, b),
                });
            }
        }
    }
    let out = JunctionTree::from_parts(v + 1, cliques, edges);
    debug_assert!(out.validate().is_ok(), "{t:?} {mv:?} -> {out:?}");
    out
}

/// ln of the probability that [`expand`] draws exactly `mv` from `t`.
pub fn log_move_probability(t: &JunctionTree, mv: &ExpansionMove, cfg: &ExpanderConfig) -> f64 {
    let k = t.clique_count() as f64;
    let adj = t.adjacency();
    let ln2 = std::f64::consts::LN_2;
    match mv {
        ExpansionMove::Isolate { host, .. } => {
            let free = empty_separator_neighbours(t, &adj, *host).len() as f64;
            cfg.beta.ln() - k.ln() - free * ln2
        }
        ExpansionMove::Connect {
            subtree, attach, ..
        } => {
            let cl = t.cliques();
            let mut in_tau = vec![false; cl.len()];
            for &c in subtree {
                in_tau[c] = true;
            }
            let boundary = (0..cl.len())
                .filter(|&z| !in_tau[z] && adj[z].iter().any(|&c| in_tau[c]))
                .count() as f64;
            let size = subtree.len() as f64;
            let mut out = (1.0 - cfg.beta).ln() + size.ln() - k.ln()
                + (size - 1.0) * cfg.alpha.ln()
                + boundary * (1.0 - cfg.alpha).ln();
            let single = subtree.len() == 1;
            for (&c, &n) in subtree.iter().zip(attach) {
                let (union, seps) = tau_separators(t, &adj, &in_tau, c);
                out -= log_attach_count(cl[c], union, &seps, single);
                if n != cl[c] {
                    out -= movable(t, &adj, &in_tau, c, n).len() as f64 * ln2;
                }
            }
            out
        }
    }
}

/// Whether `mv` is a move [`expand`] can draw from `t`.
fn move_is_possible(t: &JunctionTree, mv: &ExpansionMove) -> bool {
    let k = t.clique_count();
    let adj = t.adjacency();
    let cl = t.cliques();
    match mv {
        ExpansionMove::Isolate { host, moved } => {
            let allowed = empty_separator_neighbours(t, &adj, *host);
            moved.iter().all(|z| allowed.contains(z))
        }
        ExpansionMove::Connect {
            subtree,
            attach,
            moved,
            ..
        } => {
            let mut in_tau = vec![false; k];
            for &c in subtree {
                in_tau[c] = true;
            }
            let inner = t
                .edges()
                .iter()
                .filter(|&&(a, b)| in_tau[a] && in_tau[b])
                .map(|&(a, b)| {
                    let i = subtree.binary_search(&a).expect("in subtree");
                    let j = subtree.binary_search(&b).expect("in subtree");
                    (i, j)
                });
            if !crate::graph::junction::connected(subtree.len(), inner) {
                return false;
            }
            let single = subtree.len() == 1;
            subtree.iter().zip(attach).zip(moved).all(|((&c, &n), m)| {
                let (union, seps) = tau_separators(t, &adj, &in_tau, c);
                if !attach_is_valid(cl[c], union, &seps, single, n) {
                    return false;
                }
                if n == cl[c] {
                    return m.is_empty();
                }
                let allowed = movable(t, &adj, &in_tau, c, n);
                m.iter().all(|z| allowed.contains(z))
            })
        }
    }
}

/// A source tree from which `t_next` is reachable, with the move that reaches it.
#[derive(Clone, Debug)]
pub struct Contraction {
    pub tree: JunctionTree,
    pub mv: ExpansionMove,
}

/// Every (tree, move) pair that expands to `t_next`.
///
/// Cliques holding the new node are mapped back to their source cliques: a
/// clique whose remainder is still maximal was a replacement, otherwise it
/// merges into one of its neighbours that contains the remainder. All such
/// choices are tried and the ones that replay to `t_next` are kept.
pub fn contractions(t_next: &JunctionTree) -> Vec<Contraction> {
    let v = t_next.node_count() - 1;
    let cl = t_next.cliques();
    let adj = t_next.adjacency();
    let is_new: Vec<bool> = cl.iter().map(|c| c.contains(v)).collect();
    let news: Vec<usize> = (0..cl.len()).filter(|&i| is_new[i]).collect();
    let rest = |d: usize| cl[d].without(v);

    // per new clique: None = it replaced its remainder, Some(y) = it merges into y
    let mut options: Vec<Vec<Option<usize>>> = Vec::with_capacity(news.len());
    for &d in &news {
        let n = rest(d);
        let maximal = !(0..cl.len()).any(|x| x != d && n.is_subset(cl[x].without(v)));
        if maximal {
            options.push(vec![None]);
        } else {
            options.push(
                adj[d]
                    .iter()
                    .copied()
                    .filter(|&y| !is_new[y] && n.is_subset(cl[y]))
                    .collect::<Vec<_>>()
                    .into_iter()
                    .map(Some)
                    .collect(),
            );
        }
    }
    if options.iter().any(Vec::is_empty) {
        return Vec::new();
    }

    let mut cliques: Vec<NodeSet> = (0..cl.len())
        .filter(|&i| !is_new[i])
        .map(|i| cl[i])
        .collect();
    for (i, &d) in news.iter().enumerate() {
        if options[i][0].is_none() {
            cliques.push(rest(d));
        }
    }
    cliques.sort_unstable();
    let index_of = |s: NodeSet| cliques.binary_search(&s).expect("clique present");

    let mut out = Vec::new();
    let mut choice = vec![0usize; news.len()];
    loop {
        // image of each clique of t_next in the source tree
        let image: Vec<usize> = (0..cl.len())
            .map(|i| {
                if !is_new[i] {
                    return index_of(cl[i]);
                }
                let j = news.binary_search(&i).expect("new clique");
                match options[j][choice[j]] {
                    None => index_of(rest(i)),
                    Some(y) => index_of(cl[y]),
                }
            })
            .collect();
        if let Some(c) = contract(t_next, &cliques, &image, &news, &options, &choice, &adj) {
            out.push(c);
        }
        let mut i = 0;
        while i < choice.len() {
            choice[i] += 1;
            if choice[i] < options[i].len() {
                break;
            }
            choice[i] = 0;
            i += 1;
        }
        if i == choice.len() {
            break;
        }
    }
    out
}

fn contract(
    t_next: &JunctionTree,
    cliques: &[NodeSet],
    image: &[usize],
    news: &[usize],
    options: &[Vec<Option<usize>>],
    choice: &[usize],
    adj: &[Vec<usize>],
) -> Option<Contraction> {
    let v = t_next.node_count() - 1;
    let cl = t_next.cliques();
    let mut edges: Vec<(usize, usize)> = t_next
        .edges()
        .iter()
        .map(|&(a, b)| (image[a], image[b]))
        .filter(|&(a, b)| a != b)
        .map(|(a, b)| (a.min(b), a.max(b)))
        .collect();
    edges.sort_unstable();
    let tree = JunctionTree::from_parts(v, cliques.to_vec(), edges);
    tree.validate().ok()?;

    let absorber = |j: usize| options[j][choice[j]];
    let moved_from = |j: usize| -> Vec<usize> {
        if absorber(j).is_none() {
            // a replaced clique keeps all of its neighbours
            return Vec::new();
        }
        let d = news[j];
        sorted(
            adj[d]
                .iter()
                .copied()
                .filter(|&z| !cl[z].contains(v) && Some(z) != absorber(j))
                .map(|z| image[z])
                .collect(),
        )
    };
    let mv = if news.len() == 1 && cl[news[0]] == NodeSet::singleton(v) {
        ExpansionMove::Isolate {
            host: image[news[0]],
            moved: moved_from(0),
        }
    } else {
        let mut entries: Vec<(usize, NodeSet, Vec<usize>)> = news
            .iter()
            .enumerate()
            .map(|(j, &d)| (image[d], cl[d].without(v), moved_from(j)))
            .collect();
        entries.sort_unstable_by_key(|e| e.0);
        if entries.windows(2).any(|w| w[0].0 == w[1].0) {
            return None;
        }
        ExpansionMove::Connect {
            anchor: entries[0].0,
            subtree: entries.iter().map(|e| e.0).collect(),
            attach: entries.iter().map(|e| e.1).collect(),
            moved: entries.into_iter().map(|e| e.2).collect(),
        }
    };
    if !move_is_possible(&tree, &mv) || replay(&tree, &mv) != *t_next {
        return None;
    }
    Some(Contraction { tree, mv })
}

fn check_restriction(t: &JunctionTree, t_next: &JunctionTree) -> Result<()> {
    let m = t.node_count();
    if t_next.node_count() != m + 1 || graph_of(t_next).induced_prefix(m) != graph_of(t) {
        return Err(Error::InconsistentExpansion(format!(
            "{t_next:?} does not extend {t:?}"
        )));
    }
    Ok(())
}

/// Exact probability that [`expand`] turns `t` into `t_next`.
pub fn expand_density(
    t: &JunctionTree,
    t_next: &JunctionTree,
    cfg: &ExpanderConfig,
) -> Result<f64> {
    check_restriction(t, t_next)?;
    Ok(link(t, t_next, cfg).log_forward.exp())
}

/// The distinct trees from which `t_next` is reachable, sorted.
pub fn collapse_support(t_next: &JunctionTree) -> Vec<JunctionTree> {
    let mut trees: Vec<JunctionTree> = contractions(t_next).into_iter().map(|c| c.tree).collect();
    trees.sort_by(|a, b| {
        a.cliques()
            .cmp(b.cliques())
            .then_with(|| a.edges().cmp(b.edges()))
    });
    trees.dedup();
    trees
}

/// Uniform draw from [`collapse_support`].
pub fn backward_sample<R: Rng + ?Sized>(
    t_next: &JunctionTree,
    rng: &mut R,
) -> Result<JunctionTree> {
    let mut support = collapse_support(t_next);
    if support.is_empty() {
        return Err(Error::EmptySupport);
    }
    let i = rng.random_range(0..support.len());
    Ok(support.swap_remove(i))
}

/// Density of the uniform backward kernel at `t`.
pub fn backward_density(t_next: &JunctionTree, t: &JunctionTree) -> f64 {
    let support = collapse_support(t_next);
    if support.contains(t) {
        1.0 / support.len() as f64
    } else {
        0.0
    }
}

/// Forward density and backward support size for one transition, from a
/// single enumeration of contractions.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Link {
    /// ln K(t, t_next); `-inf` when unreachable.
    pub log_forward: f64,
    /// |R(t_next)|.
    pub support_size: usize,
}

pub fn link(t: &JunctionTree, t_next: &JunctionTree, cfg: &ExpanderConfig) -> Link {
    let found = contractions(t_next);
    let mut distinct: Vec<&JunctionTree> = Vec::with_capacity(found.len());
    let mut forward = Vec::new();
    for c in &found {
        if !distinct.contains(&&c.tree) {
            distinct.push(&c.tree);
        }
        if c.tree == *t {
            forward.push(log_move_probability(t, &c.mv, cfg));
        }
    }
    Link {
        log_forward: log_sum_exp(&forward),
        support_size: distinct.len(),
    }
}

pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + xs.iter().map(|x| (x - max).exp()).sum::<f64>().ln()
}
