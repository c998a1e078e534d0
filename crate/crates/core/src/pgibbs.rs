//! Particle Gibbs over junction-tree trajectories, with optional systematic
//! refreshment, plus the estimators computed from a chain's output.

use std::collections::HashMap;
use std::time::Instant;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::graph::{graph_of, is_decomposable};
use crate::kernels::backward_sample;
use crate::rng::StreamKey;
use crate::smc::{run_smc, ExtendedState, ParticleSystem, TemporalModel};
use crate::LabeledGraph;

/// States `x_1, .., x_p` of one particle genealogy.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Trajectory {
    states: Vec<ExtendedState>,
}

impl Trajectory {
    pub fn new(states: Vec<ExtendedState>) -> Result<Self> {
        let t = Trajectory { states };
        t.validate().map_err(Error::InvalidReference)?;
        Ok(t)
    }

    /// Each state adds one node: the order grows by one label and the
    /// graph restricted to the old nodes is unchanged.
    pub fn validate(&self) -> std::result::Result<(), String> {
        if self.states.is_empty() {
            return Err("empty trajectory".into());
        }
        for (m, x) in self.states.iter().enumerate() {
            if x.order.len() != m + 1 || x.tree.node_count() != m + 1 {
                return Err(format!("state {} has the wrong size", m + 1));
            }
            x.tree.validate()?;
            if m > 0 {
                let prev = &self.states[m - 1];
                if x.order.prefix(m) != prev.order {
                    return Err(format!(
                        "order at step {} does not extend its parent",
                        m + 1
                    ));
                }
                if graph_of(&x.tree).induced_prefix(m) != graph_of(&prev.tree) {
                    return Err(format!(
                        "graph at step {} does not extend its parent",
                        m + 1
                    ));
                }
            }
        }
        Ok(())
    }

    pub fn states(&self) -> &[ExtendedState] {
        &self.states
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn last(&self) -> &ExtendedState {
        self.states.last().expect("trajectories are non-empty")
    }

    /// A trajectory ending in `x_p`, with the prefix drawn from the backward kernels.
    pub fn from_final(x_p: ExtendedState, key: StreamKey) -> Result<Self> {
        let p = x_p.len();
        let mut rng = key.rng();
        let mut states = vec![x_p];
        for m in (1..p).rev() {
            let next = states.last().unwrap();
            let tree = backward_sample(&next.tree, &mut rng)?;
            states.push(ExtendedState {
                order: next.order.prefix(m),
                tree,
            });
        }
        states.reverse();
        Ok(Trajectory { states })
    }
}

/// Final index `B_p ~ Pr({ω_p})` and the genealogy ending there.
fn draw_trajectory(system: &ParticleSystem, key: StreamKey) -> Result<Trajectory> {
    let p = system.generations.len();
    let pick = system.generations[p - 1].resample(1, p, key)?[0];
    Ok(Trajectory {
        states: system.trace(pick),
    })
}

/// One particle Gibbs transition: conditional SMC with the last particle
/// pinned to `reference`, then a genealogy traced from a final index drawn
/// by weight.
pub fn csmc_transition(
    model: &TemporalModel,
    reference: &Trajectory,
    n: usize,
    key: StreamKey,
    exec: Execution,
) -> Result<Trajectory> {
    if reference.len() != model.p() {
        return Err(Error::InvalidReference(format!(
            "reference has {} states, expected {}",
            reference.len(),
            model.p()
        )));
    }
    let x = reference.last();
    if model
        .score
        .log_gamma_graph(&x.tree, x.order.as_slice())
        .is_structural_zero()
    {
        return Err(Error::InvalidReference(
            "reference graph has zero posterior mass".into(),
        ));
    }
    let system = run_smc(model, n, key.child(0), Some(&reference.states), exec)?;
    draw_trajectory(&system, key.child(1))
}

/// Systematic refreshment. The junction tree on the variable labels is
/// kept; the node order is redrawn from the order kernel, which is its exact
/// conditional law, and the prefix is redrawn from the backward kernels.
pub fn refresh(model: &TemporalModel, traj: &Trajectory, key: StreamKey) -> Result<Trajectory> {
    let last = traj.last();
    let p = last.len();
    if p != model.p() {
        return Err(Error::InvalidReference(format!(
            "reference has {p} states, expected {}",
            model.p()
        )));
    }
    let order = model.order.sample_order(&mut key.child(0).rng());
    let mut position = vec![0; p];
    for (i, &v) in order.as_slice().iter().enumerate() {
        position[v] = i;
    }
    let map: Vec<usize> = last.order.as_slice().iter().map(|&v| position[v]).collect();
    let tree = last.tree.relabel(&map);
    Trajectory::from_final(ExtendedState { order, tree }, key.child(1))
}

#[derive(Clone, Debug)]
pub struct ChainConfig {
    pub particles: usize,
    /// Total sweeps, burn-in included.
    pub sweeps: usize,
    /// Discarded leading sweeps; `None` means 30% of `sweeps`.
    pub burn_in: Option<usize>,
    pub refresh: bool,
    pub exec: Execution,
}

impl ChainConfig {
    pub fn new(particles: usize, sweeps: usize) -> Self {
        ChainConfig {
            particles,
            sweeps,
            burn_in: None,
            refresh: true,
            exec: Execution::default(),
        }
    }

    pub fn burn_in(&self) -> usize {
        self.burn_in.unwrap_or(self.sweeps * 3 / 10)
    }

    fn check(&self) -> Result<()> {
        if self.particles < 2 {
            return Err(Error::InvalidConfig(format!(
                "need at least 2 particles, got {}",
                self.particles
            )));
        }
        if self.sweeps <= self.burn_in() {
            return Err(Error::InvalidConfig(format!(
                "burn-in {} leaves nothing of {} sweeps",
                self.burn_in(),
                self.sweeps
            )));
        }
        Ok(())
    }
}

/// The graph visited at one sweep, on external labels.
#[derive(Clone, Debug, PartialEq)]
pub struct ChainRecord {
    /// 1-based sweep number.
    pub sweep: usize,
    pub graph: LabeledGraph,
    pub size: usize,
    pub log_gamma: f64,
    /// Seconds since the chain started.
    pub wall_time: f64,
}

/// Runs one chain. Every sweep is passed to `sink` together with whether it
/// is kept; the kept records are returned.
pub fn run_chain(
    model: &TemporalModel,
    cfg: &ChainConfig,
    key: StreamKey,
    initial: Option<Trajectory>,
    mut sink: impl FnMut(&ChainRecord, bool),
) -> Result<Vec<ChainRecord>> {
    cfg.check()?;
    let p = model.p();
    let start = Instant::now();
    let mut traj = match initial {
        Some(t) => t,
        None => {
            let system = run_smc(model, cfg.particles, key.child(0).child(0), None, cfg.exec)?;
            draw_trajectory(&system, key.child(0).child(1))?
        }
    };
    let burn_in = cfg.burn_in();
    let mut kept = Vec::with_capacity(cfg.sweeps - burn_in);
    for sweep in 1..=cfg.sweeps {
        let k = key.child(sweep as u64);
        traj = csmc_transition(model, &traj, cfg.particles, k.child(0), cfg.exec)?;
        if cfg.refresh {
            traj = refresh(model, &traj, k.child(1))?;
        }
        let x = traj.last();
        let graph = x.graph(p);
        debug_assert!(is_decomposable(&graph));
        let record = ChainRecord {
            sweep,
            size: graph.edge_count(),
            log_gamma: model
                .score
                .log_gamma_graph(&x.tree, x.order.as_slice())
                .value(),
            graph,
            wall_time: start.elapsed().as_secs_f64(),
        };
        let keep = sweep > burn_in;
        sink(&record, keep);
        if keep {
            kept.push(record);
        }
    }
    Ok(kept)
}

fn require_records(records: &[ChainRecord]) -> Result<usize> {
    records
        .first()
        .map(|r| r.graph.node_count())
        .ok_or_else(|| Error::InvalidConfig("no records to summarise".into()))
}

/// Fraction of records containing each edge, as a symmetric matrix.
pub fn edge_marginals(records: &[ChainRecord]) -> Result<Vec<Vec<f64>>> {
    let p = require_records(records)?;
    let mut m = vec![vec![0.0; p]; p];
    for r in records {
        for (a, b) in r.graph.edges() {
            m[a][b] += 1.0;
            m[b][a] += 1.0;
        }
    }
    let n = records.len() as f64;
    m.iter_mut().flatten().for_each(|x| *x /= n);
    Ok(m)
}

/// Distinct graphs by decreasing frequency, ties by edge list.
pub fn top_k(records: &[ChainRecord], k: usize) -> Result<Vec<(LabeledGraph, f64)>> {
    require_records(records)?;
    let mut counts: HashMap<&LabeledGraph, usize> = HashMap::new();
    for r in records {
        *counts.entry(&r.graph).or_default() += 1;
    }
    let mut ranked: Vec<(&LabeledGraph, usize)> = counts.into_iter().collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    let n = records.len() as f64;
    Ok(ranked
        .into_iter()
        .take(k)
        .map(|(g, c)| (g.clone(), c as f64 / n))
        .collect())
}

/// The most frequent graph and its frequency.
pub fn map_graph(records: &[ChainRecord]) -> Result<(LabeledGraph, f64)> {
    Ok(top_k(records, 1)?.remove(0))
}

/// Biased sample autocorrelation at lags `0..=max_lag`. A constant series
/// has autocorrelation 1 at every lag.
pub fn autocorrelation(series: &[f64], max_lag: usize) -> Vec<f64> {
    let n = series.len();
    let max_lag = max_lag.min(n.saturating_sub(1));
    if n == 0 {
        return Vec::new();
    }
    let mean = series.iter().sum::<f64>() / n as f64;
    let centred: Vec<f64> = series.iter().map(|x| x - mean).collect();
    let c0: f64 = centred.iter().map(|x| x * x).sum();
    if c0 <= f64::EPSILON * n as f64 * mean.abs().max(1.0) {
        return vec![1.0; max_lag + 1];
    }
    (0..=max_lag)
        .map(|k| lag_product(&centred, k) / c0)
        .collect()
}

fn lag_product(centred: &[f64], k: usize) -> f64 {
    centred.iter().zip(&centred[k..]).map(|(a, b)| a * b).sum()
}

/// Integrated autocorrelation time 1 + 2∑ρ_k, summed until the first negative ρ_k.
pub fn iact(series: &[f64]) -> f64 {
    let n = series.len();
    if n < 2 {
        return 1.0;
    }
    let mean = series.iter().sum::<f64>() / n as f64;
    let centred: Vec<f64> = series.iter().map(|x| x - mean).collect();
    let c0: f64 = centred.iter().map(|x| x * x).sum();
    if c0 <= f64::EPSILON * n as f64 * mean.abs().max(1.0) {
        // Every lag has autocorrelation 1.
        return (2 * n - 1) as f64;
    }
    let mut tau = 1.0;
    for k in 1..n {
        let rho = lag_product(&centred, k) / c0;
        if rho < 0.0 {
            break;
        }
        tau += 2.0 * rho;
    }
    tau
}

/// Draws a graph index from exact probabilities, for chains started at stationarity.
pub fn draw_index(probabilities: &[f64], key: StreamKey) -> Result<usize> {
    let dist = WeightedIndex::new(probabilities).map_err(|_| Error::EmptySupport)?;
    Ok(dist.sample(&mut key.rng()))
}
