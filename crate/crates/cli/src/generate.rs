//! Synthetic datasets with a known graph.

use jtsmc::data::{ContinuousData, DiscreteData};
use jtsmc::graph::{junction_tree_of, separators_of};
use jtsmc::rng::StreamKey;
use jtsmc::scores::first_failing_minor;
use jtsmc::{Error, LabeledGraph, NodeSet, Result};
use nalgebra::{DMatrix, DVector};
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use rand_distr::{Gamma, StandardNormal};

/// A banded graph where node `i` links to its previous `l_i` nodes. Each
/// `l_i` is drawn from `lags`, then capped at `l_{i-1} + 1` and at `i`, which
/// keeps the graph decomposable.
pub fn ar_graph(p: usize, lags: &[usize], key: StreamKey) -> Result<(LabeledGraph, Vec<usize>)> {
    if lags.is_empty() {
        return Err(Error::InvalidConfig("at least one lag is required".into()));
    }
    let mut rng = key.rng();
    let mut g = LabeledGraph::empty(p);
    let mut out = Vec::with_capacity(p);
    let mut prev = 0;
    for i in 0..p {
        let drawn = lags[rng.random_range(0..lags.len())];
        let l = drawn.min(prev + 1).min(i);
        for k in 1..=l {
            g.add_edge(i - k, i);
        }
        out.push(l);
        prev = l;
    }
    Ok((g, out))
}

fn intra_class(k: usize, rho: f64, sigma2: f64) -> DMatrix<f64> {
    DMatrix::from_fn(k, k, |i, j| if i == j { sigma2 } else { rho * sigma2 })
}

fn indices(s: NodeSet) -> Vec<usize> {
    s.iter().collect()
}

/// Precision matrix of the Gaussian that is Markov to `g` and whose
/// covariance is σ² on the diagonal and ρσ² on every edge: the sum of the
/// inverted clique blocks minus the inverted separator blocks.
pub fn ar_precision(g: &LabeledGraph, rho: f64, sigma2: f64) -> Result<DMatrix<f64>> {
    let p = g.node_count();
    let tree = junction_tree_of(g)?;
    let mut k = DMatrix::zeros(p, p);
    let mut add = |set: NodeSet, sign: f64| -> Result<()> {
        if set.is_empty() {
            return Ok(());
        }
        let idx = indices(set);
        let block = intra_class(idx.len(), rho, sigma2);
        if let Some(minor) = first_failing_minor(&block) {
            return Err(Error::NotPositiveDefinite(idx[minor - 1] + 1));
        }
        let inv = block.cholesky().expect("checked above").inverse();
        for (a, &i) in idx.iter().enumerate() {
            for (b, &j) in idx.iter().enumerate() {
                k[(i, j)] += sign * inv[(a, b)];
            }
        }
        Ok(())
    };
    for &c in tree.cliques() {
        add(c, 1.0)?;
    }
    for (&s, &mult) in &separators_of(&tree).entries {
        for _ in 0..mult {
            add(s, -1.0)?;
        }
    }
    Ok(k)
}

pub struct GaussianSample {
    pub graph: LabeledGraph,
    pub lags: Vec<usize>,
    pub covariance: DMatrix<f64>,
    pub observations: DMatrix<f64>,
}

/// Draws `n` zero-mean observations from the banded model.
pub fn gen_gaussian(
    p: usize,
    n: usize,
    rho: f64,
    sigma2: f64,
    lags: &[usize],
    key: StreamKey,
) -> Result<GaussianSample> {
    if !(sigma2 > 0.0 && sigma2.is_finite()) {
        return Err(Error::InvalidConfig(format!(
            "sigma2 must be positive, got {sigma2}"
        )));
    }
    if !rho.is_finite() || rho.abs() >= 1.0 {
        return Err(Error::InvalidConfig(format!(
            "rho must lie in (-1, 1), got {rho}"
        )));
    }
    let (graph, lags) = ar_graph(p, lags, key.child(0))?;
    let precision = ar_precision(&graph, rho, sigma2)?;
    if let Some(k) = first_failing_minor(&precision) {
        return Err(Error::NotPositiveDefinite(k));
    }
    let covariance = precision.cholesky().expect("checked above").inverse();
    let chol = covariance
        .clone()
        .cholesky()
        .ok_or(Error::NotPositiveDefinite(p))?;
    let l = chol.l();
    let mut rng = key.child(1).rng();
    let mut observations = DMatrix::zeros(n, p);
    for i in 0..n {
        let z = DVector::from_fn(p, |_, _| rng.sample::<f64, _>(StandardNormal));
        observations.set_row(i, &(&l * z).transpose());
    }
    Ok(GaussianSample {
        graph,
        lags,
        covariance,
        observations,
    })
}

pub fn column_names(p: usize) -> Vec<String> {
    (1..=p).map(|i| format!("X{i}")).collect()
}

pub fn to_continuous(s: &GaussianSample) -> Result<ContinuousData> {
    ContinuousData::from_rows(column_names(s.graph.node_count()), &s.observations)
}

pub fn gaussian_csv(s: &GaussianSample) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(column_names(s.graph.node_count()))
        .expect("in-memory write");
    for row in s.observations.row_iter() {
        w.write_record(row.iter().map(|x| x.to_string()))
            .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("ascii output")
}

/// Largest |θ_ij| over non-edges, a check on the precision's sparsity.
pub fn off_graph_precision(g: &LabeledGraph, covariance: &DMatrix<f64>) -> f64 {
    let precision = covariance
        .clone()
        .try_inverse()
        .unwrap_or_else(|| DMatrix::from_element(1, 1, f64::NAN));
    LabeledGraph::all_pairs(g.node_count())
        .filter(|&(a, b)| !g.has_edge(a, b))
        .map(|(a, b)| precision[(a, b)].abs())
        .fold(0.0, f64::max)
}

fn dirichlet<R: Rng + ?Sized>(k: usize, concentration: f64, rng: &mut R) -> Vec<f64> {
    let gamma = Gamma::new(concentration, 1.0).expect("positive concentration");
    loop {
        let draws: Vec<f64> = (0..k).map(|_| gamma.sample(rng)).collect();
        let total: f64 = draws.iter().sum();
        if total > 0.0 {
            return draws.into_iter().map(|x| x / total).collect();
        }
    }
}

/// One clique in sampling order: the variables it adds, the separator it
/// conditions on, and a conditional law per separator configuration.
struct Factor {
    new: Vec<usize>,
    given: Vec<usize>,
    tables: Vec<WeightedIndex<f64>>,
}

fn cells(vars: &[usize], card: &[usize]) -> usize {
    vars.iter().map(|&v| card[v]).product()
}

/// Mixed-radix index of `values` restricted to `vars`.
fn cell_index(vars: &[usize], card: &[usize], values: &[u32]) -> usize {
    vars.iter()
        .fold(0, |acc, &v| acc * card[v] + values[v] as usize)
}

fn assign(vars: &[usize], card: &[usize], mut index: usize, values: &mut [u32]) {
    for &v in vars.iter().rev() {
        values[v] = (index % card[v]) as u32;
        index /= card[v];
    }
}

/// Draws `n` observations from a categorical law that factorises over the
/// cliques and separators of `g`. The root clique's table is Dirichlet;
/// every other clique draws, for each configuration of its separator, a
/// Dirichlet conditional law for its remaining variables.
pub fn gen_discrete(
    g: &LabeledGraph,
    cardinalities: &[usize],
    n: usize,
    concentration: f64,
    key: StreamKey,
) -> Result<DiscreteData> {
    let p = g.node_count();
    if cardinalities.len() != p {
        return Err(Error::DimensionMismatch(format!(
            "{} cardinalities for {p} variables",
            cardinalities.len()
        )));
    }
    if cardinalities.iter().any(|&c| c < 2) {
        return Err(Error::InvalidConfig(
            "every variable needs at least two levels".into(),
        ));
    }
    if !(concentration > 0.0 && concentration.is_finite()) {
        return Err(Error::InvalidConfig(format!(
            "concentration must be positive, got {concentration}"
        )));
    }
    let tree = junction_tree_of(g)?;
    let mut rng = key.child(0).rng();

    // Breadth-first from clique 0, so each separator is assigned before use.
    let adj = tree.adjacency();
    let cliques = tree.cliques();
    let mut seen = vec![false; cliques.len()];
    let mut queue = std::collections::VecDeque::from([(0usize, NodeSet::EMPTY)]);
    seen[0] = true;
    let mut factors = Vec::new();
    while let Some((c, sep)) = queue.pop_front() {
        let new = indices(cliques[c].difference(sep));
        let given = indices(sep);
        let k = cells(&new, cardinalities);
        let tables = (0..cells(&given, cardinalities))
            .map(|_| {
                WeightedIndex::new(dirichlet(k, concentration, &mut rng))
                    .expect("Dirichlet draw has positive mass")
            })
            .collect();
        factors.push(Factor { new, given, tables });
        for &d in &adj[c] {
            if !seen[d] {
                seen[d] = true;
                queue.push_back((d, cliques[c].intersection(cliques[d])));
            }
        }
    }

    let mut rng = key.child(1).rng();
    let mut columns = vec![Vec::with_capacity(n); p];
    let mut values = vec![0u32; p];
    for _ in 0..n {
        for f in &factors {
            let row = cell_index(&f.given, cardinalities, &values);
            let cell = f.tables[row].sample(&mut rng);
            assign(&f.new, cardinalities, cell, &mut values);
        }
        for (col, &v) in columns.iter_mut().zip(&values) {
            col.push(v);
        }
    }
    DiscreteData::new(column_names(p), columns, Some(cardinalities.to_vec()))
}

/// Area under the ROC curve of `scores` against `truth`, counting ties as
/// half. Both classes must be present.
pub fn auc(scores: &[f64], truth: &[bool]) -> Result<f64> {
    let pos: Vec<f64> = scores
        .iter()
        .zip(truth)
        .filter(|(_, &t)| t)
        .map(|(s, _)| *s)
        .collect();
    let neg: Vec<f64> = scores
        .iter()
        .zip(truth)
        .filter(|(_, &t)| !t)
        .map(|(s, _)| *s)
        .collect();
    if pos.is_empty() || neg.is_empty() {
        return Err(Error::InvalidConfig(
            "AUC needs both present and absent edges".into(),
        ));
    }
    let mut wins = 0.0;
    for &a in &pos {
        for &b in &neg {
            wins += if a > b {
                1.0
            } else if a == b {
                0.5
            } else {
                0.0
            };
        }
    }
    Ok(wins / (pos.len() * neg.len()) as f64)
}

/// AUC of an edge-marginal matrix against the edges of `truth`.
pub fn edge_auc(marginals: &[Vec<f64>], truth: &LabeledGraph) -> Result<f64> {
    let pairs: Vec<(usize, usize)> = LabeledGraph::all_pairs(truth.node_count()).collect();
    let scores: Vec<f64> = pairs.iter().map(|&(a, b)| marginals[a][b]).collect();
    let labels: Vec<bool> = pairs.iter().map(|&(a, b)| truth.has_edge(a, b)).collect();
    auc(&scores, &labels)
}
