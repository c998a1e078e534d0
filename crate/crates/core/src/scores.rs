//! Clique-separator factorised scores γ with conjugate marginal likelihoods.

use std::sync::atomic::{AtomicU64, Ordering};

use dashmap::DashMap;
use nalgebra::DMatrix;
use statrs::function::gamma::ln_gamma;

use crate::data::{ContinuousData, DiscreteData};
use crate::error::{Error, Result};
use crate::graph::{junction_tree_of, JunctionTree, LabeledGraph, TreeDelta};
use crate::nodeset::{NodeSet, MAX_NODES};

/// A natural-log score. `-inf` marks a structural zero: the set or graph has
/// no mass under the prior, and any particle landing there gets weight 0.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd)]
pub struct LogScore(f64);

impl LogScore {
    pub const STRUCTURAL_ZERO: LogScore = LogScore(f64::NEG_INFINITY);
    pub const ONE: LogScore = LogScore(0.0);

    pub fn new(value: f64) -> Self {
        debug_assert!(!value.is_nan());
        LogScore(value)
    }

    #[inline]
    pub fn value(self) -> f64 {
        self.0
    }

    #[inline]
    pub fn is_structural_zero(self) -> bool {
        self.0 == f64::NEG_INFINITY
    }
}

/// The structural prior ϖ on cliques and separators.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GraphPrior {
    Uniform,
    /// Zero mass on graphs with a clique larger than `max_clique`.
    SizeCap {
        max_clique: usize,
    },
}

#[derive(Clone, Debug)]
pub enum Likelihood {
    /// Prior only: γ depends on the graph prior alone.
    None,
    Dirichlet {
        data: DiscreteData,
        pseudo_count_total: f64,
    },
    Wishart {
        dof: f64,
        scale: DMatrix<f64>,
        gram: DMatrix<f64>,
        n: usize,
    },
}

/// γ(Q) = ϖ(Q) · I(ϑ_Q^y) / I(ϑ_Q), with a concurrent per-subset cache.
pub struct ScoreModel {
    p: usize,
    likelihood: Likelihood,
    prior: GraphPrior,
    cache: DashMap<NodeSet, f64>,
    potential_evaluations: AtomicU64,
    graph_evaluations: AtomicU64,
}

impl std::fmt::Debug for ScoreModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ScoreModel")
            .field("p", &self.p)
            .field("likelihood", &self.likelihood_name())
            .field("prior", &self.prior)
            .finish()
    }
}

impl Clone for ScoreModel {
    fn clone(&self) -> Self {
        Self::build(self.p, self.likelihood.clone(), self.prior)
    }
}

fn check_p(p: usize) -> Result<()> {
    if p == 0 || p > MAX_NODES {
        return Err(Error::TooLarge {
            what: "variable count",
            value: p,
            limit: MAX_NODES,
        });
    }
    Ok(())
}

impl ScoreModel {
    fn build(p: usize, likelihood: Likelihood, prior: GraphPrior) -> Self {
        ScoreModel {
            p,
            likelihood,
            prior,
            cache: DashMap::new(),
            potential_evaluations: AtomicU64::new(0),
            graph_evaluations: AtomicU64::new(0),
        }
    }

    /// γ ≡ 1: the uniform law over decomposable graphs.
    pub fn uniform(p: usize) -> Result<Self> {
        check_p(p)?;
        Ok(Self::build(p, Likelihood::None, GraphPrior::Uniform))
    }

    /// Hyper-Dirichlet with `pseudo_count_total` spread evenly over the full table.
    pub fn dirichlet(data: DiscreteData, pseudo_count_total: f64) -> Result<Self> {
        check_p(data.p())?;
        if !(pseudo_count_total > 0.0 && pseudo_count_total.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "pseudo count total must be positive, got {pseudo_count_total}"
            )));
        }
        Ok(Self::build(
            data.p(),
            Likelihood::Dirichlet {
                data,
                pseudo_count_total,
            },
            GraphPrior::Uniform,
        ))
    }

    /// Hyper-Wishart with `dof` degrees of freedom and scale matrix `scale`.
    pub fn wishart(data: &ContinuousData, dof: f64, scale: DMatrix<f64>) -> Result<Self> {
        let p = data.p();
        check_p(p)?;
        if !(dof > 0.0 && dof.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "dof must be positive, got {dof}"
            )));
        }
        if scale.nrows() != p || scale.ncols() != p {
            return Err(Error::DimensionMismatch(format!(
                "scale is {}x{}, data has {p} variables",
                scale.nrows(),
                scale.ncols()
            )));
        }
        if (&scale - scale.transpose()).amax() > 1e-12 * scale.amax().max(1.0) {
            return Err(Error::InvalidConfig("scale matrix is not symmetric".into()));
        }
        if let Some(k) = first_failing_minor(&scale) {
            return Err(Error::NotPositiveDefinite(k));
        }
        Ok(Self::build(
            p,
            Likelihood::Wishart {
                dof,
                scale,
                gram: data.gram.clone(),
                n: data.n,
            },
            GraphPrior::Uniform,
        ))
    }

    pub fn with_prior(mut self, prior: GraphPrior) -> Self {
        self.prior = prior;
        self
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn prior(&self) -> GraphPrior {
        self.prior
    }

    pub fn likelihood(&self) -> &Likelihood {
        &self.likelihood
    }

    pub fn likelihood_name(&self) -> &'static str {
        match self.likelihood {
            Likelihood::None => "uniform",
            Likelihood::Dirichlet { .. } => "dirichlet",
            Likelihood::Wishart { .. } => "wishart",
        }
    }

    /// Number of potentials computed (cache misses) so far.
    pub fn potential_evaluations(&self) -> u64 {
        self.potential_evaluations.load(Ordering::Relaxed)
    }

    /// Number of whole-graph scores computed so far.
    pub fn graph_evaluations(&self) -> u64 {
        self.graph_evaluations.load(Ordering::Relaxed)
    }

    /// Per-cell pseudo count of the marginal table over `subset`.
    pub fn dirichlet_cell_pseudo_count(&self, subset: NodeSet) -> Option<f64> {
        match &self.likelihood {
            Likelihood::Dirichlet {
                data,
                pseudo_count_total,
            } => {
                let cells: f64 = subset
                    .iter()
                    .map(|v| data.cardinalities[v] as f64)
                    .product();
                Some(pseudo_count_total / cells)
            }
            _ => None,
        }
    }

    /// log γ(subset) over external variable labels.
    pub fn log_potential(&self, subset: NodeSet) -> LogScore {
        debug_assert!(subset.is_subset(NodeSet::prefix(self.p)));
        if let GraphPrior::SizeCap { max_clique } = self.prior {
            if subset.len() > max_clique {
                return LogScore::STRUCTURAL_ZERO;
            }
        }
        if subset.is_empty() || matches!(self.likelihood, Likelihood::None) {
            return LogScore::ONE;
        }
        if let Some(v) = self.cache.get(&subset) {
            return LogScore(*v);
        }
        let v = self.compute(subset);
        self.potential_evaluations.fetch_add(1, Ordering::Relaxed);
        self.cache.insert(subset, v);
        LogScore(v)
    }

    fn compute(&self, subset: NodeSet) -> f64 {
        match &self.likelihood {
            Likelihood::None => 0.0,
            Likelihood::Dirichlet {
                data,
                pseudo_count_total,
            } => dirichlet_log_ratio(data, subset, *pseudo_count_total),
            Likelihood::Wishart {
                dof,
                scale,
                gram,
                n,
            } => wishart_log_ratio(subset, *dof, scale, gram, *n),
        }
    }

    /// log γ(g(t)) with internal node `i` standing for external label `labels[i]`.
    pub fn log_gamma_graph(&self, t: &JunctionTree, labels: &[usize]) -> LogScore {
        self.graph_evaluations.fetch_add(1, Ordering::Relaxed);
        let mut total = 0.0;
        for &c in t.cliques() {
            let s = self.log_potential(relabel(c, labels));
            if s.is_structural_zero() {
                return LogScore::STRUCTURAL_ZERO;
            }
            total += s.0;
        }
        for s in t.separators() {
            // separators sit inside cliques, so they are finite here
            total -= self.log_potential(relabel(s, labels)).0;
        }
        LogScore(total)
    }

    /// log γ of a graph on external labels `0..p`.
    pub fn log_gamma_of(&self, g: &LabeledGraph) -> Result<LogScore> {
        let t = junction_tree_of(g)?;
        let labels: Vec<usize> = (0..g.node_count()).collect();
        Ok(self.log_gamma_graph(&t, &labels))
    }

    /// log γ(t_b) − log γ(t_a) from the signed clique/separator differences.
    ///
    /// Returns the structural zero when `t_b` has no mass. `t_a` is assumed to
    /// have positive mass.
    pub fn log_gamma_delta(&self, delta: &TreeDelta, labels: &[usize]) -> LogScore {
        let mut total = 0.0;
        for &(c, sign) in &delta.cliques {
            let s = self.log_potential(relabel(c, labels));
            if s.is_structural_zero() {
                if sign > 0 {
                    return LogScore::STRUCTURAL_ZERO;
                }
                debug_assert!(false, "source tree has zero mass");
                return LogScore(f64::INFINITY);
            }
            total += f64::from(sign) * s.0;
        }
        for &(s, count) in &delta.separators {
            total -= f64::from(count) * self.log_potential(relabel(s, labels)).0;
        }
        LogScore(total)
    }
}

/// Maps internal node indices to the external labels they stand for.
#[inline]
pub fn relabel(set: NodeSet, labels: &[usize]) -> NodeSet {
    set.iter().map(|i| labels[i]).collect()
}

fn dirichlet_log_ratio(data: &DiscreteData, subset: NodeSet, total: f64) -> f64 {
    let vars = subset.to_vec();
    let cells: f64 = vars.iter().map(|&v| data.cardinalities[v] as f64).product();
    let a = total / cells;
    let n = data.n();
    let counts = cell_counts(data, &vars);
    let ln_a = ln_gamma(a);
    let mut out = 0.0;
    for c in counts {
        out += ln_gamma(a + c as f64) - ln_a;
    }
    out - (ln_gamma(total + n as f64) - ln_gamma(total))
}

/// Counts of the observed cells of the marginal table over `vars`.
fn cell_counts(data: &DiscreteData, vars: &[usize]) -> Vec<usize> {
    let n = data.n();
    let cols: Vec<&[u32]> = vars.iter().map(|&v| data.column(v)).collect();
    let radix: Option<u64> = vars.iter().try_fold(1u64, |acc, &v| {
        acc.checked_mul(data.cardinalities[v] as u64)
    });
    let mut runs = Vec::new();
    if radix.is_some() {
        let mut keys: Vec<u64> = (0..n)
            .map(|i| {
                vars.iter().zip(&cols).fold(0u64, |acc, (&v, col)| {
                    acc * data.cardinalities[v] as u64 + u64::from(col[i])
                })
            })
            .collect();
        keys.sort_unstable();
        count_runs(&keys, &mut runs);
    } else {
        let mut keys: Vec<Vec<u32>> = (0..n)
            .map(|i| cols.iter().map(|c| c[i]).collect())
            .collect();
        keys.sort_unstable();
        count_runs(&keys, &mut runs);
    }
    runs
}

fn count_runs<T: PartialEq>(sorted: &[T], out: &mut Vec<usize>) {
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i + 1;
        while j < sorted.len() && sorted[j] == sorted[i] {
            j += 1;
        }
        out.push(j - i);
        i = j;
    }
}

/// ln Γ_k(a), the multivariate gamma function.
pub fn ln_multigamma(k: usize, a: f64) -> f64 {
    let kf = k as f64;
    kf * (kf - 1.0) / 4.0 * std::f64::consts::PI.ln()
        + (0..k).map(|j| ln_gamma(a - j as f64 / 2.0)).sum::<f64>()
}

fn submatrix(m: &DMatrix<f64>, idx: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(idx.len(), idx.len(), |i, j| m[(idx[i], idx[j])])
}

fn log_det_spd(m: DMatrix<f64>) -> f64 {
    let chol = m
        .cholesky()
        .expect("principal submatrix of a positive definite matrix");
    2.0 * chol
        .l_dirty()
        .diagonal()
        .iter()
        .map(|d| d.ln())
        .sum::<f64>()
}

fn wishart_log_ratio(
    subset: NodeSet,
    dof: f64,
    scale: &DMatrix<f64>,
    gram: &DMatrix<f64>,
    n: usize,
) -> f64 {
    let idx = subset.to_vec();
    let k = idx.len();
    let kf = k as f64;
    let nf = n as f64;
    let beta = (dof + kf - 1.0) / 2.0;
    let alpha = beta + nf / 2.0;
    let phi = submatrix(scale, &idx);
    let post = &phi + submatrix(gram, &idx);
    -(nf * kf / 2.0) * std::f64::consts::PI.ln() + ln_multigamma(k, alpha) - ln_multigamma(k, beta)
        + beta * log_det_spd(phi)
        - alpha * log_det_spd(post)
}

/// Index (1-based) of the first leading principal minor that is not positive,
/// or `None` when the matrix is positive definite.
pub fn first_failing_minor(m: &DMatrix<f64>) -> Option<usize> {
    if m.clone().cholesky().is_some() {
        return None;
    }
    (1..=m.nrows()).find(|&k| m.view((0, 0), (k, k)).into_owned().cholesky().is_none())
}
