//! Sequential Monte Carlo over growing junction trees.

use std::sync::Arc;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::graph::{clique_sep_symmetric_diff, log_count_trees_of, log_mu_ratio, JunctionTree};
use crate::kernels::{expand, link, ExpanderConfig, NodeOrder, OrderKernelConfig};
use crate::nodeset::NodeSet;
use crate::rng::StreamKey;
use crate::scores::ScoreModel;

/// Score model plus the kernels that grow a state one node at a time.
#[derive(Clone, Debug)]
pub struct TemporalModel {
    pub score: Arc<ScoreModel>,
    pub order: OrderKernelConfig,
    pub expander: ExpanderConfig,
}

impl TemporalModel {
    pub fn new(score: Arc<ScoreModel>, bandwidth: usize, expander: ExpanderConfig) -> Result<Self> {
        let order = OrderKernelConfig::new(score.p(), bandwidth)?;
        Ok(TemporalModel {
            score,
            order,
            expander,
        })
    }

    pub fn p(&self) -> usize {
        self.score.p()
    }
}

/// `(v_m, T_m)`: which variables have been placed, and a tree over their internal indices.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ExtendedState {
    pub order: NodeOrder,
    pub tree: JunctionTree,
}

impl ExtendedState {
    pub fn initial(label: usize) -> Self {
        ExtendedState {
            order: NodeOrder::single(label),
            tree: JunctionTree::single_node(),
        }
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    /// The underlying graph on external labels `0..p`.
    pub fn graph(&self, p: usize) -> crate::LabeledGraph {
        crate::graph::graph_of(&self.tree).relabel(self.order.as_slice(), p)
    }
}

#[derive(Clone, Debug)]
pub struct Particle {
    pub state: ExtendedState,
    pub log_weight: f64,
    /// Index of the parent in the previous generation.
    pub ancestor: usize,
}

#[derive(Clone, Debug)]
pub struct Generation {
    pub particles: Vec<Particle>,
    /// ln(Ω_m / N).
    pub log_mean_weight: f64,
    /// Effective sample size of the normalised weights.
    pub ess: f64,
}

impl Generation {
    fn new(particles: Vec<Particle>) -> Self {
        let lw: Vec<f64> = particles.iter().map(|p| p.log_weight).collect();
        let lse = crate::kernels::log_sum_exp(&lw);
        let n = lw.len() as f64;
        let ess = if lse == f64::NEG_INFINITY {
            0.0
        } else {
            1.0 / lw.iter().map(|w| (2.0 * (w - lse)).exp()).sum::<f64>()
        };
        Generation {
            particles,
            log_mean_weight: lse - n.ln(),
            ess,
        }
    }

    pub fn len(&self) -> usize {
        self.particles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.particles.is_empty()
    }

    /// Multinomial ancestor draws from the normalised weights.
    pub fn resample(&self, count: usize, step: usize, key: StreamKey) -> Result<Vec<usize>> {
        let max = self
            .particles
            .iter()
            .map(|p| p.log_weight)
            .fold(f64::NEG_INFINITY, f64::max);
        if max == f64::NEG_INFINITY {
            return Err(Error::AllWeightsZero { step });
        }
        let w: Vec<f64> = self
            .particles
            .iter()
            .map(|p| (p.log_weight - max).exp())
            .collect();
        let dist = WeightedIndex::new(&w).map_err(|_| Error::AllWeightsZero { step })?;
        let mut rng = key.rng();
        Ok((0..count).map(|_| dist.sample(&mut rng)).collect())
    }
}

/// All generations of one pass, `generations[m - 1]` holding step `m`.
#[derive(Clone, Debug)]
pub struct ParticleSystem {
    pub generations: Vec<Generation>,
}

impl ParticleSystem {
    /// The unbiased estimate ln((1/N^p) ∏ Ω_m) of the normalising constant.
    pub fn log_normalising_constant(&self) -> f64 {
        self.generations.iter().map(|g| g.log_mean_weight).sum()
    }

    /// States along the ancestry of final particle `index`.
    pub fn trace(&self, mut index: usize) -> Vec<ExtendedState> {
        let mut out = Vec::with_capacity(self.generations.len());
        for g in self.generations.iter().rev() {
            let p = &g.particles[index];
            out.push(p.state.clone());
            index = p.ancestor;
        }
        out.reverse();
        out
    }
}

/// ln η̃_m(x): ln γ of the relabelled graph, minus ln µ, plus ln ρ_m(v).
pub fn log_unnormalised_target(model: &TemporalModel, x: &ExtendedState) -> f64 {
    let g = model
        .score
        .log_gamma_graph(&x.tree, x.order.as_slice())
        .value();
    g - log_count_trees_of(&x.tree) + model.order.log_order_probability(&x.order)
}

/// ln ω for the initial state: η̃_1 / ν_1 reduces to γ({v_1}).
pub fn initial_log_weight(model: &TemporalModel, x: &ExtendedState) -> f64 {
    model
        .score
        .log_potential(NodeSet::singleton(x.order.as_slice()[0]))
        .value()
}

/// ln ω for the move `from → to`:
/// Δ ln γ + ln µ(T)/µ(T') + ln L(T', T) − ln K(T, T'), the order terms cancelling.
pub fn incremental_log_weight(
    model: &TemporalModel,
    from: &ExtendedState,
    to: &ExtendedState,
) -> f64 {
    let delta = clique_sep_symmetric_diff(&from.tree, &to.tree);
    let dg = model.score.log_gamma_delta(&delta, to.order.as_slice());
    if dg.is_structural_zero() {
        return f64::NEG_INFINITY;
    }
    let l = link(&from.tree, &to.tree, &model.expander);
    debug_assert!(l.log_forward > f64::NEG_INFINITY && l.support_size > 0);
    dg.value() + log_mu_ratio(&from.tree, &to.tree) - (l.support_size as f64).ln() - l.log_forward
}

/// Stream layout: `key.child(step)` owns one step, with child `n` for
/// resampling and child `i < n` for particle `i`.
fn particle_key(key: StreamKey, step: usize, i: usize) -> StreamKey {
    key.child(step as u64).child(i as u64)
}

/// First generation. With a reference, the last particle is pinned to it.
pub fn initial_particles(
    model: &TemporalModel,
    n: usize,
    key: StreamKey,
    reference: Option<&ExtendedState>,
    exec: Execution,
) -> Result<Generation> {
    if n < 2 {
        return Err(Error::InvalidConfig(format!(
            "need at least 2 particles, got {n}"
        )));
    }
    let free = if reference.is_some() { n - 1 } else { n };
    let mut particles = exec.map(free, |i| {
        let mut rng = particle_key(key, 1, i).rng();
        let state = ExtendedState::initial(model.order.sample_initial(&mut rng));
        let log_weight = initial_log_weight(model, &state);
        Particle {
            state,
            log_weight,
            ancestor: i,
        }
    });
    if let Some(r) = reference {
        particles.push(Particle {
            state: r.clone(),
            log_weight: initial_log_weight(model, r),
            ancestor: n - 1,
        });
    }
    Ok(Generation::new(particles))
}

/// Generation `m + 1` from generation `m`: resample, extend order and tree, reweight.
/// With a reference, the last particle is pinned to it and descends from the
/// previous last particle.
pub fn smc_step(
    model: &TemporalModel,
    prev: &Generation,
    m: usize,
    key: StreamKey,
    reference: Option<(&ExtendedState, &ExtendedState)>,
    exec: Execution,
) -> Result<Generation> {
    let n = prev.len();
    let free = if reference.is_some() { n - 1 } else { n };
    let step = m + 1;
    let ancestors = prev.resample(free, m, key.child(step as u64).child(n as u64))?;
    let mut particles = exec.map(free, |i| {
        let a = ancestors[i];
        let from = &prev.particles[a].state;
        let mut rng = particle_key(key, step, i).rng();
        let label = model.order.sample_step(&from.order, &mut rng);
        let (tree, _) = expand(&from.tree, &model.expander, &mut rng);
        let state = ExtendedState {
            order: from.order.extended(label),
            tree,
        };
        let log_weight = incremental_log_weight(model, from, &state);
        Particle {
            state,
            log_weight,
            ancestor: a,
        }
    });
    if let Some((r_from, r_to)) = reference {
        particles.push(Particle {
            state: r_to.clone(),
            log_weight: incremental_log_weight(model, r_from, r_to),
            ancestor: n - 1,
        });
    }
    Ok(Generation::new(particles))
}

/// A full pass from one node to `p`, optionally conditional on `reference`.
pub fn run_smc(
    model: &TemporalModel,
    n: usize,
    key: StreamKey,
    reference: Option<&[ExtendedState]>,
    exec: Execution,
) -> Result<ParticleSystem> {
    let p = model.p();
    if let Some(r) = reference {
        if r.len() != p {
            return Err(Error::InvalidReference(format!(
                "reference has {} states, expected {p}",
                r.len()
            )));
        }
    }
    let mut generations = Vec::with_capacity(p);
    generations.push(initial_particles(
        model,
        n,
        key,
        reference.map(|r| &r[0]),
        exec,
    )?);
    for m in 1..p {
        let pinned = reference.map(|r| (&r[m - 1], &r[m]));
        let next = smc_step(model, &generations[m - 1], m, key, pinned, exec)?;
        generations.push(next);
    }
    Ok(ParticleSystem { generations })
}
