//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any fail. Pass criterion numbers as arguments to run a subset:
//! `cargo test --release --test acceptance -- 3 4`.

use std::collections::HashMap;
use std::sync::Arc;
use std::time::{Duration, Instant};

use jtsmc::exec::Execution;
use jtsmc::fixtures::czech_autoworkers;
use jtsmc::graph::{count_junction_trees, graph_of};
use jtsmc::kernels::{backward_density, collapse_support, expand_density, ExpanderConfig};
use jtsmc::oracle::{
    enumerate_decomposable, enumerate_junction_trees, exact_expansion_support, exact_posterior,
    ExactPosterior,
};
use jtsmc::pgibbs::{edge_marginals, iact, run_chain, ChainConfig, ChainRecord};
use jtsmc::rng::StreamKey;
use jtsmc::scores::ScoreModel;
use jtsmc::smc::{run_smc, TemporalModel};
use jtsmc::{JunctionTree, LabeledGraph};
use jtsmc_cli::generate::{edge_auc, gen_discrete, gen_gaussian, to_continuous};
use nalgebra::DMatrix;
use rand::Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn temporal(score: ScoreModel, alpha: f64, beta: f64, delta: usize) -> TemporalModel {
    TemporalModel::new(
        Arc::new(score),
        delta,
        ExpanderConfig::new(alpha, beta).unwrap(),
    )
    .unwrap()
}

fn czech_exact() -> ExactPosterior {
    exact_posterior(&ScoreModel::dirichlet(czech_autoworkers(), 1.0).unwrap()).unwrap()
}

fn czech_model(alpha: f64, beta: f64) -> TemporalModel {
    temporal(
        ScoreModel::dirichlet(czech_autoworkers(), 1.0).unwrap(),
        alpha,
        beta,
        6,
    )
}

fn graph6(edges: &[(usize, usize)]) -> LabeledGraph {
    let pairs: Vec<_> = edges.iter().map(|&(a, b)| (a - 1, b - 1)).collect();
    LabeledGraph::from_edges(6, &pairs).unwrap()
}

/// The five graphs of the Czech table with their published posterior probabilities.
fn table_one() -> Vec<(LabeledGraph, f64)> {
    vec![
        (graph6(&[(1, 3), (1, 5), (2, 3), (3, 5), (4, 5)]), 0.248),
        (
            graph6(&[(1, 3), (1, 4), (1, 5), (2, 3), (3, 5), (4, 5)]),
            0.104,
        ),
        (graph6(&[(1, 3), (1, 4), (1, 5), (2, 3), (3, 5)]), 0.101),
        (graph6(&[(1, 3), (2, 3), (2, 5), (4, 5)]), 0.059),
        (
            graph6(&[(1, 3), (1, 5), (2, 3), (2, 6), (3, 5), (4, 5)]),
            0.051,
        ),
    ]
}

fn all_trees(p: usize) -> Vec<JunctionTree> {
    enumerate_decomposable(p)
        .unwrap()
        .iter()
        .flat_map(|g| enumerate_junction_trees(g).unwrap())
        .collect()
}

fn decomposable_counts() -> Outcome {
    let expected = [2, 8, 61, 822, 18154];
    let got: Vec<usize> = (2..=6)
        .map(|p| enumerate_decomposable(p).unwrap().len())
        .collect();
    outcome(got == expected, format!("counts {got:?}"))
}

fn exact_table() -> Outcome {
    let post = czech_exact();
    let worst = table_one()
        .iter()
        .map(|(g, pr)| (post.probability(g) - pr).abs())
        .fold(0.0, f64::max);
    outcome(worst <= 0.002, format!("max deviation {worst:.4}"))
}

/// Three chains at the paper's Czech settings, reused by criteria 3 and 4.
fn czech_chains() -> Vec<Vec<ChainRecord>> {
    let model = czech_model(0.5, 0.5);
    let cfg = ChainConfig {
        exec: Execution::Parallel,
        ..ChainConfig::new(100, 10_000)
    };
    (1..=3)
        .map(|seed| run_chain(&model, &cfg, StreamKey::new(seed), None, |_, _| {}).unwrap())
        .collect()
}

fn estimated_table(chains: &[Vec<ChainRecord>]) -> Outcome {
    let post = czech_exact();
    let mut worst: f64 = 0.0;
    let mut freqs = Vec::new();
    for (g, _) in table_one() {
        let f = chains
            .iter()
            .map(|c| c.iter().filter(|r| r.graph == g).count() as f64 / c.len() as f64)
            .sum::<f64>()
            / chains.len() as f64;
        worst = worst.max((f - post.probability(&g)).abs());
        freqs.push(format!("{f:.3}"));
    }
    outcome(
        worst <= 0.02,
        format!(
            "frequencies [{}], max deviation {worst:.4}",
            freqs.join(", ")
        ),
    )
}

fn marginal_agreement(chains: &[Vec<ChainRecord>]) -> Outcome {
    let exact = czech_exact().edge_marginals();
    let mut gap: f64 = 0.0;
    let per_chain: Vec<Vec<Vec<f64>>> = chains.iter().map(|c| edge_marginals(c).unwrap()).collect();
    for a in 0..6 {
        for b in a + 1..6 {
            let m = per_chain.iter().map(|m| m[a][b]).sum::<f64>() / chains.len() as f64;
            gap = gap.max((m - exact[a][b]).abs());
        }
    }
    outcome(gap <= 0.03, format!("L∞ {gap:.4}"))
}

fn mu_correctness() -> Outcome {
    let mut mismatches = 0;
    for g in enumerate_decomposable(4).unwrap() {
        if count_junction_trees(&g).unwrap() != enumerate_junction_trees(&g).unwrap().len().into() {
            mismatches += 1;
        }
    }
    let mut rng = StreamKey::new(5).rng();
    let mut checked = 0;
    while checked < 200 {
        let p = rng.random_range(5..=6);
        let g = LabeledGraph::from_pair_mask(p, rng.random_range(0..1u64 << (p * (p - 1) / 2)));
        let Ok(mu) = count_junction_trees(&g) else {
            continue;
        };
        if mu != enumerate_junction_trees(&g).unwrap().len().into() {
            mismatches += 1;
        }
        checked += 1;
    }
    outcome(
        mismatches == 0,
        format!(
            "61 graphs at p = 4 and {checked} random graphs at p = 5-6, {mismatches} mismatches"
        ),
    )
}

fn expander_soundness() -> Outcome {
    let cfgs =
        [(0.5, 0.5), (0.2, 0.8), (0.8, 0.2)].map(|(a, b)| ExpanderConfig::new(a, b).unwrap());
    let mut failures = Vec::new();
    for cfg in &cfgs {
        for m in 1..=3 {
            let sources = all_trees(m);
            // Normalisation over the exhaustive extension support.
            for t in &sources {
                let total: f64 = exact_expansion_support(t)
                    .unwrap()
                    .iter()
                    .map(|t2| expand_density(t, t2, cfg).unwrap())
                    .sum();
                if (total - 1.0).abs() > 1e-9 {
                    failures.push(format!("density sums to {total}"));
                }
            }
            for t_next in all_trees(m + 1) {
                // Completeness: every tree on m + 1 nodes has a source.
                let support = collapse_support(&t_next);
                if support.is_empty() {
                    failures.push(format!("{t_next:?} unreachable"));
                }
                // Reverse support: exactly the sources with positive density.
                let mut brute: Vec<&JunctionTree> = sources
                    .iter()
                    .filter(|t| {
                        graph_of(&t_next).induced_prefix(m) == graph_of(t)
                            && expand_density(t, &t_next, cfg).unwrap() > 0.0
                    })
                    .collect();
                brute.sort_by(|a, b| a.cliques().cmp(b.cliques()).then(a.edges().cmp(b.edges())));
                if brute.len() != support.len() || brute.iter().zip(&support).any(|(a, b)| *a != b)
                {
                    failures.push(format!("{t_next:?} reverse support differs"));
                }
                let back: f64 = support.iter().map(|t| backward_density(&t_next, t)).sum();
                if (back - 1.0).abs() > 1e-12 {
                    failures.push(format!("backward density sums to {back}"));
                }
            }
        }
    }
    let detail = match failures.first() {
        None => "support, normalisation and reverse support hold at p ≤ 4".to_string(),
        Some(f) => format!("{} failures, first: {f}", failures.len()),
    };
    outcome(failures.is_empty(), detail)
}

fn smc_unbiasedness() -> Outcome {
    let model = temporal(ScoreModel::uniform(4).unwrap(), 0.5, 0.5, 4);
    let runs = 1000;
    let z: Vec<f64> = (0..runs)
        .map(|r| {
            run_smc(
                &model,
                20,
                StreamKey::new(7).child(r),
                None,
                Execution::Parallel,
            )
            .unwrap()
            .log_normalising_constant()
            .exp()
        })
        .collect();
    let n = z.len() as f64;
    let mean = z.iter().sum::<f64>() / n;
    let se = (z.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0) / n).sqrt();
    let exact = exact_posterior(&ScoreModel::uniform(4).unwrap())
        .unwrap()
        .log_normaliser
        .exp();
    outcome(
        (mean - exact).abs() <= 3.0 * se,
        format!("mean {mean:.3} ± {se:.3}, exact {exact}"),
    )
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

fn pg_invariance() -> Outcome {
    let score = ScoreModel::uniform(4).unwrap();
    let exact = exact_posterior(&score).unwrap();
    let model = temporal(score, 0.5, 0.5, 4);
    let sweeps = 50_000;
    let mut tvs = Vec::new();
    for refresh in [true, false] {
        let key = StreamKey::new(8);
        let init = exact.stationary_trajectory(&model, key.child(0)).unwrap();
        let cfg = ChainConfig {
            burn_in: Some(0),
            refresh,
            ..ChainConfig::new(5, sweeps)
        };
        let mut counts = HashMap::new();
        run_chain(&model, &cfg, key.child(1), Some(init), |r, _| {
            *counts.entry(r.graph.clone()).or_insert(0) += 1;
        })
        .unwrap();
        tvs.push(total_variation(&counts, sweeps, &exact));
    }
    outcome(
        tvs.iter().all(|&tv| tv <= 0.05),
        format!("TV {:.4} with refresh, {:.4} without", tvs[0], tvs[1]),
    )
}

fn refresh_iact() -> Outcome {
    let model = czech_model(0.5, 0.5);
    let mut means = Vec::new();
    for refresh in [true, false] {
        let cfg = ChainConfig {
            refresh,
            exec: Execution::Parallel,
            ..ChainConfig::new(20, 20_000)
        };
        let taus: Vec<f64> = (0..10)
            .map(|c| {
                let recs =
                    run_chain(&model, &cfg, StreamKey::new(900 + c), None, |_, _| {}).unwrap();
                let sizes: Vec<f64> = recs.iter().map(|r| r.size as f64).collect();
                iact(&sizes)
            })
            .collect();
        means.push(taus.iter().sum::<f64>() / taus.len() as f64);
    }
    outcome(
        means[0] <= 1.05 * means[1],
        format!(
            "mean IACT {:.2} with refresh, {:.2} without",
            means[0], means[1]
        ),
    )
}

fn demo_auc() -> Outcome {
    // A ten-node decomposable graph with two triangles and tree-like links.
    let edges = [
        (0, 1),
        (1, 2),
        (1, 3),
        (2, 3),
        (3, 4),
        (4, 5),
        (4, 6),
        (5, 6),
        (6, 7),
        (7, 8),
        (7, 9),
    ];
    let truth = LabeledGraph::from_edges(10, &edges).unwrap();
    let data = gen_discrete(&truth, &[2; 10], 1000, 1.0, StreamKey::new(10)).unwrap();
    let model = temporal(ScoreModel::dirichlet(data, 1.0).unwrap(), 0.5, 0.5, 10);
    let cfg = ChainConfig {
        exec: Execution::Parallel,
        ..ChainConfig::new(20, 2000)
    };
    let recs = run_chain(&model, &cfg, StreamKey::new(11), None, |_, _| {}).unwrap();
    let discrete = edge_auc(&edge_marginals(&recs).unwrap(), &truth).unwrap();

    let sample = gen_gaussian(20, 100, 0.9, 1.0, &[1, 2, 3, 4, 5], StreamKey::new(12)).unwrap();
    let data = to_continuous(&sample).unwrap();
    let score = ScoreModel::wishart(&data, 20.0, DMatrix::identity(20, 20)).unwrap();
    let model = temporal(score, 0.5, 0.5, 20);
    let recs = run_chain(&model, &cfg, StreamKey::new(13), None, |_, _| {}).unwrap();
    let gaussian = edge_auc(&edge_marginals(&recs).unwrap(), &sample.graph).unwrap();
    outcome(
        discrete >= 0.85 && gaussian >= 0.85,
        format!("AUC {discrete:.3} discrete p = 10, {gaussian:.3} Gaussian p = 20"),
    )
}

fn main() {
    let wanted: Vec<usize> = std::env::args()
        .skip(1)
        .filter_map(|a| a.parse().ok())
        .collect();
    let run = |n: usize| wanted.is_empty() || wanted.contains(&n);
    let mut all_pass = true;
    let mut report = |n: usize, name: &str, limit: Option<u64>, f: &mut dyn FnMut() -> Outcome| {
        if !run(n) {
            return;
        }
        let start = Instant::now();
        let mut o = f();
        let elapsed = start.elapsed();
        if let Some(secs) = limit {
            if elapsed > Duration::from_secs(secs) {
                o.pass = false;
                o.detail.push_str(&format!("; over the {secs} s limit"));
            }
        }
        all_pass &= o.pass;
        println!(
            "criterion {n:>2} {}: {name}: {} [{:.1} s]",
            if o.pass { "PASS" } else { "FAIL" },
            o.detail,
            elapsed.as_secs_f64()
        );
    };

    report(
        1,
        "decomposable graph counts",
        Some(30),
        &mut decomposable_counts,
    );
    report(2, "exact Czech posterior", Some(120), &mut exact_table);
    let chains = if run(3) || run(4) {
        let start = Instant::now();
        let c = czech_chains();
        println!("(Czech chains: {:.1} s)", start.elapsed().as_secs_f64());
        Some(c)
    } else {
        None
    };
    report(3, "estimated Czech posterior", Some(1200), &mut || {
        estimated_table(chains.as_ref().unwrap())
    });
    report(4, "Czech edge marginals", None, &mut || {
        marginal_agreement(chains.as_ref().unwrap())
    });
    report(5, "junction tree counts", None, &mut mu_correctness);
    report(6, "expander soundness", None, &mut expander_soundness);
    report(7, "SMC unbiasedness", Some(300), &mut smc_unbiasedness);
    report(8, "particle Gibbs invariance", None, &mut pg_invariance);
    report(
        9,
        "refreshment does not slow mixing",
        None,
        &mut refresh_iact,
    );
    report(
        10,
        "edge recovery on synthetic data",
        Some(1800),
        &mut demo_auc,
    );

    if !all_pass {
        std::process::exit(1);
    }
}
