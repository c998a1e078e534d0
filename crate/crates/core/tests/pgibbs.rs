use std::collections::HashMap;
use std::sync::Arc;

use jtsmc::exec::Execution;
use jtsmc::kernels::{collapse_support, ExpanderConfig, NodeOrder};
use jtsmc::oracle::{
    enumerate_decomposable, enumerate_junction_trees, exact_posterior, ExactPosterior,
};
use jtsmc::pgibbs::{csmc_transition, iact, refresh, run_chain, ChainConfig, Trajectory};
use jtsmc::rng::StreamKey;
use jtsmc::scores::ScoreModel;
use jtsmc::smc::{run_smc, ExtendedState, TemporalModel};
use jtsmc::LabeledGraph;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

fn uniform(p: usize) -> (TemporalModel, ExactPosterior) {
    let score = ScoreModel::uniform(p).unwrap();
    let exact = exact_posterior(&score).unwrap();
    let model =
        TemporalModel::new(Arc::new(score), p, ExpanderConfig::new(0.5, 0.5).unwrap()).unwrap();
    (model, exact)
}

fn total_variation(
    counts: &HashMap<LabeledGraph, usize>,
    total: usize,
    exact: &ExactPosterior,
) -> f64 {
    let mut tv: f64 = exact
        .support
        .iter()
        .map(|(g, pr)| (counts.get(g).copied().unwrap_or(0) as f64 / total as f64 - pr).abs())
        .sum();
    tv += counts
        .iter()
        .filter(|(g, _)| exact.probability(g) == 0.0)
        .map(|(_, &c)| c as f64 / total as f64)
        .sum::<f64>();
    tv / 2.0
}

fn chain_tv(
    model: &TemporalModel,
    exact: &ExactPosterior,
    n: usize,
    sweeps: usize,
    refresh: bool,
    seed: u64,
) -> f64 {
    let key = StreamKey::new(seed);
    let init = exact.stationary_trajectory(model, key.child(99)).unwrap();
    let cfg = ChainConfig {
        burn_in: Some(0),
        refresh,
        ..ChainConfig::new(n, sweeps)
    };
    let mut counts = HashMap::new();
    let records = run_chain(model, &cfg, key, Some(init), |r, _| {
        *counts.entry(r.graph.clone()).or_insert(0) += 1;
    })
    .unwrap();
    assert_eq!(records.len(), sweeps);
    total_variation(&counts, sweeps, exact)
}

#[test]
fn two_node_chain_matches_exact_law() {
    let (model, exact) = uniform(2);
    let tv = chain_tv(&model, &exact, 2, 100_000, false, 1);
    assert!(tv <= 0.02, "{tv}");
}

#[test]
fn four_node_chain_is_invariant_with_and_without_refresh() {
    let (model, exact) = uniform(4);
    for refresh in [false, true] {
        let tv = chain_tv(&model, &exact, 5, 50_000, refresh, 2);
        assert!(tv <= 0.05, "refresh {refresh}: {tv}");
    }
}

#[test]
fn transitions_return_valid_trajectories() {
    let (model, _) = uniform(6);
    let sys = run_smc(&model, 8, StreamKey::new(3), None, Execution::Sequential).unwrap();
    let mut t = Trajectory::new(sys.trace(0)).unwrap();
    for i in 0..200 {
        t = csmc_transition(
            &model,
            &t,
            8,
            StreamKey::new(4).child(i),
            Execution::Sequential,
        )
        .unwrap();
        t.validate().unwrap();
        let r = refresh(&model, &t, StreamKey::new(5).child(i)).unwrap();
        r.validate().unwrap();
        assert_eq!(r.last().graph(6), t.last().graph(6));
        t = r;
    }
}

#[test]
fn backward_kernel_draws_the_penultimate_tree_uniformly() {
    // Every three-node tree has a single collapse, so the check runs on four.
    for t in enumerate_decomposable(3)
        .unwrap()
        .iter()
        .flat_map(|g| enumerate_junction_trees(g).unwrap())
    {
        assert_eq!(collapse_support(&t).len(), 1);
    }
    let tree = enumerate_decomposable(4)
        .unwrap()
        .iter()
        .flat_map(|g| enumerate_junction_trees(g).unwrap())
        .max_by_key(|t| collapse_support(t).len())
        .unwrap();
    let x3 = ExtendedState {
        order: NodeOrder::identity(4),
        tree,
    };
    let t = Trajectory::from_final(x3, StreamKey::new(6)).unwrap();
    let support = collapse_support(&t.last().tree);
    let mut counts = vec![0.0f64; support.len()];
    let draws = 100_000;
    for i in 0..draws {
        let r = Trajectory::from_final(t.last().clone(), StreamKey::new(7).child(i)).unwrap();
        let x3 = &r.states()[2];
        assert_eq!(x3.order, t.states()[2].order);
        counts[support.iter().position(|s| *s == x3.tree).unwrap()] += 1.0;
    }
    let e = draws as f64 / support.len() as f64;
    let chi2: f64 = counts.iter().map(|c| (c - e).powi(2) / e).sum();
    assert!(support.len() > 2);
    // 99th percentiles of χ² with 2 to 6 degrees of freedom.
    let limit = [9.210, 11.345, 13.277, 15.086, 16.812][support.len() - 3];
    assert!(chi2 < limit, "{chi2} over {} cells", support.len());
}

#[test]
fn refresh_redraws_the_order_and_keeps_the_graph() {
    let (model, _) = uniform(3);
    let sys = run_smc(&model, 4, StreamKey::new(10), None, Execution::Sequential).unwrap();
    let t = Trajectory::new(sys.trace(0)).unwrap();
    let g = t.last().graph(3);
    let mut counts: HashMap<Vec<usize>, f64> = HashMap::new();
    let draws = 60_000;
    for i in 0..draws {
        let r = refresh(&model, &t, StreamKey::new(11).child(i)).unwrap();
        assert_eq!(r.last().graph(3), g);
        *counts
            .entry(r.last().order.as_slice().to_vec())
            .or_insert(0.0) += 1.0;
    }
    assert_eq!(counts.len(), 6);
    let e = draws as f64 / 6.0;
    let chi2: f64 = counts.values().map(|c| (c - e).powi(2) / e).sum();
    // 99th percentile of χ² with 5 degrees of freedom.
    assert!(chi2 < 15.086, "{chi2}");
}

#[test]
fn white_noise_has_unit_iact() {
    let mut rng = StreamKey::new(8).rng();
    let s: Vec<f64> = (0..100_000)
        .map(|_| StandardNormal.sample(&mut rng))
        .collect();
    let tau = iact(&s);
    assert!((0.9..=1.1).contains(&tau), "{tau}");
    let u: Vec<f64> = (0..100_000).map(|_| rng.random::<f64>()).collect();
    assert!((0.9..=1.1).contains(&iact(&u)));
}

#[test]
fn ar_process_has_known_iact() {
    // AR(1) with coefficient φ has IACT (1 + φ) / (1 - φ).
    let phi: f64 = 0.5;
    let mut rng = StreamKey::new(9).rng();
    let mut x = 0.0;
    let s: Vec<f64> = (0..200_000)
        .map(|_| {
            let e: f64 = StandardNormal.sample(&mut rng);
            x = phi * x + e;
            x
        })
        .collect();
    let tau = iact(&s);
    assert!((tau - 3.0).abs() < 0.25, "{tau}");
}
