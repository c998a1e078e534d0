//! Brute-force ground truth for small graphs.

use crate::error::{Error, Result};
use crate::graph::{
    count_junction_trees, graph_of, is_decomposable, maximal_cliques, JunctionTree, LabeledGraph,
};
use rand::Rng;

use crate::nodeset::NodeSet;
use crate::pgibbs::{draw_index, Trajectory};
use crate::rng::StreamKey;
use crate::scores::ScoreModel;
use crate::smc::{ExtendedState, TemporalModel};

/// Largest `p` enumerated without an explicit override.
pub const MAX_ENUMERATION_NODES: usize = 6;

fn guard(p: usize, allow_seven: bool) -> Result<()> {
    let limit = if allow_seven {
        7
    } else {
        MAX_ENUMERATION_NODES
    };
    if p > limit {
        return Err(Error::TooLarge {
            what: "node count for exhaustive enumeration",
            value: p,
            limit,
        });
    }
    Ok(())
}

/// Every decomposable graph on `p` labelled nodes, in pair-mask order.
pub fn enumerate_decomposable(p: usize) -> Result<Vec<LabeledGraph>> {
    enumerate_decomposable_with(p, false)
}

/// As [`enumerate_decomposable`], optionally lifting the guard to `p = 7`.
pub fn enumerate_decomposable_with(p: usize, allow_seven: bool) -> Result<Vec<LabeledGraph>> {
    guard(p, allow_seven)?;
    let pairs = p * p.saturating_sub(1) / 2;
    let masks = 0u64..(1u64 << pairs);
    let keep = |mask: u64| {
        let g = LabeledGraph::from_pair_mask(p, mask);
        is_decomposable(&g).then_some(g)
    };
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        Ok(masks.into_par_iter().filter_map(keep).collect())
    }
    #[cfg(not(feature = "parallel"))]
    {
        Ok(masks.filter_map(keep).collect())
    }
}

/// Decodes a Prüfer sequence over `k` vertices into tree edges.
fn prufer_edges(seq: &[usize], k: usize) -> Vec<(usize, usize)> {
    let mut degree = vec![1usize; k];
    for &x in seq {
        degree[x] += 1;
    }
    let mut edges = Vec::with_capacity(k - 1);
    for &x in seq {
        let leaf = (0..k).find(|&i| degree[i] == 1).expect("a leaf exists");
        edges.push((leaf, x));
        degree[leaf] -= 1;
        degree[x] -= 1;
    }
    let rest: Vec<usize> = (0..k).filter(|&i| degree[i] == 1).collect();
    edges.push((rest[0], rest[1]));
    edges
}

/// All junction trees of `g`: every labelled spanning tree over its cliques
/// that has the running-intersection property.
pub fn enumerate_junction_trees(g: &LabeledGraph) -> Result<Vec<JunctionTree>> {
    guard(g.node_count(), true)?;
    let cliques = maximal_cliques(g)?;
    let k = cliques.len();
    if k == 1 {
        return Ok(vec![JunctionTree::from_parts(
            g.node_count(),
            cliques,
            vec![],
        )]);
    }
    let mut out = Vec::new();
    let mut seq = vec![0usize; k - 2];
    loop {
        let t = JunctionTree::from_parts(g.node_count(), cliques.clone(), prufer_edges(&seq, k));
        if t.validate().is_ok() {
            out.push(t);
        }
        // odometer increment
        let mut i = 0;
        while i < seq.len() {
            seq[i] += 1;
            if seq[i] < k {
                break;
            }
            seq[i] = 0;
            i += 1;
        }
        if i == seq.len() {
            break;
        }
    }
    out.sort_by_cached_key(|t| (t.cliques().to_vec(), t.edges().to_vec()));
    Ok(out)
}

/// Every junction tree on `m + 1` nodes whose graph restricts to `g(t_m)`.
pub fn exact_expansion_support(t_m: &JunctionTree) -> Result<Vec<JunctionTree>> {
    let m = t_m.node_count();
    if m > 4 {
        return Err(Error::TooLarge {
            what: "node count for exact expansion support",
            value: m,
            limit: 4,
        });
    }
    let base = graph_of(t_m);
    let mut out = Vec::new();
    for nb in NodeSet::prefix(m).subsets() {
        let mut g = base.clone();
        g.push_node(nb);
        if is_decomposable(&g) {
            out.extend(enumerate_junction_trees(&g)?);
        }
    }
    Ok(out)
}

/// The exact graph posterior π(g) ∝ γ(g) over all decomposable graphs.
#[derive(Clone, Debug)]
pub struct ExactPosterior {
    pub p: usize,
    /// Graphs in enumeration order with their probabilities.
    pub support: Vec<(LabeledGraph, f64)>,
    /// log ∑ γ(g).
    pub log_normaliser: f64,
}

/// Enumerates and normalises the posterior in log space.
pub fn exact_posterior(model: &ScoreModel) -> Result<ExactPosterior> {
    let p = model.p();
    let graphs = enumerate_decomposable(p)?;
    let score = |g: &LabeledGraph| model.log_gamma_of(g).map(|s| s.value());
    #[cfg(feature = "parallel")]
    let logs: Vec<f64> = {
        use rayon::prelude::*;
        graphs.par_iter().map(score).collect::<Result<_>>()?
    };
    #[cfg(not(feature = "parallel"))]
    let logs: Vec<f64> = graphs.iter().map(score).collect::<Result<_>>()?;
    let max = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = logs.iter().map(|l| (l - max).exp()).sum();
    let log_normaliser = max + sum.ln();
    let support = graphs
        .into_iter()
        .zip(logs)
        .map(|(g, l)| (g, (l - log_normaliser).exp()))
        .collect();
    Ok(ExactPosterior {
        p,
        support,
        log_normaliser,
    })
}

impl ExactPosterior {
    pub fn probability(&self, g: &LabeledGraph) -> f64 {
        self.support
            .iter()
            .find(|(h, _)| h == g)
            .map_or(0.0, |(_, pr)| *pr)
    }

    /// Support sorted by decreasing probability, ties by edge list.
    pub fn ranked(&self) -> Vec<(LabeledGraph, f64)> {
        let mut out = self.support.clone();
        out.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        out
    }

    /// Symmetric `p × p` matrix of edge inclusion probabilities.
    pub fn edge_marginals(&self) -> Vec<Vec<f64>> {
        let mut m = vec![vec![0.0; self.p]; self.p];
        for (g, pr) in &self.support {
            for (a, b) in g.edges() {
                m[a][b] += pr;
                m[b][a] += pr;
            }
        }
        m
    }

    /// A trajectory distributed exactly as the particle Gibbs target: graph
    /// from the posterior, order from the order kernel, junction tree uniform
    /// among the graph's trees, and the prefix from the backward kernels.
    pub fn stationary_trajectory(
        &self,
        model: &TemporalModel,
        key: StreamKey,
    ) -> Result<Trajectory> {
        let probs: Vec<f64> = self.support.iter().map(|(_, pr)| *pr).collect();
        let g = &self.support[draw_index(&probs, key.child(0))?].0;
        let mut rng = key.child(1).rng();
        let order = model.order.sample_order(&mut rng);
        let mut inverse = vec![0; self.p];
        for (i, &v) in order.as_slice().iter().enumerate() {
            inverse[v] = i;
        }
        let mut trees = enumerate_junction_trees(&g.relabel(&inverse, self.p))?;
        let tree = trees.swap_remove(rng.random_range(0..trees.len()));
        Trajectory::from_final(ExtendedState { order, tree }, key.child(2))
    }

    /// The junction-tree law τ(t) = π(g(t)) / µ(g(t)).
    pub fn tree_law(&self) -> Result<Vec<(JunctionTree, f64)>> {
        let mut out = Vec::new();
        for (g, pr) in &self.support {
            let mu: f64 = count_junction_trees(g)?
                .to_string()
                .parse()
                .expect("integer");
            for t in enumerate_junction_trees(g)? {
                out.push((t, pr / mu));
            }
        }
        Ok(out)
    }
}
