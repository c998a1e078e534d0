use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use jtsmc::rng::StreamKey;
use jtsmc::LabeledGraph;
use jtsmc_cli::generate::{auc, gen_discrete, gen_gaussian};
use jtsmc_cli::output::read_trajectory;

fn czech() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/data/czech_autoworkers.csv")
}

fn jtsmc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_jtsmc"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) {
    let out = jtsmc(args);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
}

fn code(args: &[&str]) -> i32 {
    jtsmc(args).status.code().unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

const SUMMARIES: [&str; 5] = [
    "edge_marginals.csv",
    "map_graph.json",
    "top_graphs.csv",
    "size_autocorr.csv",
    "summary.json",
];

#[test]
fn sample_is_reproducible_and_analyze_matches() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b, c) = (
        dir.path().join("a"),
        dir.path().join("b"),
        dir.path().join("c"),
    );
    let data = czech();
    for out in [&a, &b] {
        ok(&[
            "sample",
            "--data",
            s(&data),
            "--N",
            "20",
            "--M",
            "150",
            "--seed",
            "4",
            "--sequential",
            "--out",
            s(out),
        ]);
    }
    let traj = fs::read(a.join("trajectory.jsonl")).unwrap();
    assert_eq!(traj, fs::read(b.join("trajectory.jsonl")).unwrap());
    assert_eq!(
        read_trajectory(&a.join("trajectory.jsonl")).unwrap().len(),
        150
    );

    fs::create_dir(&c).unwrap();
    fs::write(c.join("trajectory.jsonl"), &traj).unwrap();
    fs::copy(a.join("run_meta.json"), c.join("run_meta.json")).unwrap();
    ok(&["analyze", s(&c.join("trajectory.jsonl"))]);
    for f in SUMMARIES {
        assert_eq!(
            fs::read(a.join(f)).unwrap(),
            fs::read(c.join(f)).unwrap(),
            "{f}"
        );
    }
    // Analysing twice changes nothing.
    ok(&["analyze", s(&c.join("trajectory.jsonl"))]);
    assert_eq!(
        fs::read(a.join("top_graphs.csv")).unwrap(),
        fs::read(c.join("top_graphs.csv")).unwrap()
    );
}

#[test]
fn run_meta_reproduces_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    ok(&[
        "sample",
        "--p",
        "5",
        "--N",
        "8",
        "--M",
        "60",
        "--seed",
        "9",
        "--out",
        s(&a),
    ]);
    ok(&[
        "sample",
        "--config",
        s(&a.join("run_meta.json")),
        "--out",
        s(&b),
    ]);
    assert_eq!(
        fs::read(a.join("trajectory.jsonl")).unwrap(),
        fs::read(b.join("trajectory.jsonl")).unwrap()
    );
}

#[test]
fn flags_override_the_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    fs::write(
        &cfg,
        r#"{"p": 4, "N": 6, "M": 40, "burn_in": 10, "seed": 1, "alpha": 0.3}"#,
    )
    .unwrap();
    let out = dir.path().join("o");
    ok(&["sample", "--config", s(&cfg), "--M", "30", "--out", s(&out)]);
    let meta: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("run_meta.json")).unwrap()).unwrap();
    assert_eq!(meta["config"]["M"], 30);
    assert_eq!(meta["config"]["N"], 6);
    assert_eq!(meta["config"]["alpha"], 0.3);
    assert_eq!(meta["records"], 20);
}

#[test]
fn single_sweep_outputs_are_well_formed() {
    let dir = tempfile::tempdir().unwrap();
    ok(&[
        "sample",
        "--p",
        "3",
        "--N",
        "4",
        "--M",
        "1",
        "--out",
        s(dir.path()),
    ]);
    assert_eq!(
        read_trajectory(&dir.path().join("trajectory.jsonl"))
            .unwrap()
            .len(),
        1
    );
    let map: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("map_graph.json")).unwrap())
            .unwrap();
    assert_eq!(map["frequency"], 1.0);
    let top = fs::read_to_string(dir.path().join("top_graphs.csv")).unwrap();
    assert_eq!(top.lines().count(), 2);
}

#[test]
fn identical_graphs_give_map_frequency_one() {
    let dir = tempfile::tempdir().unwrap();
    let line = r#"{"sweep":SW,"p":3,"edges":[[1,2]],"size":1,"log_gamma":0.0}"#;
    let text: String = (1..=5)
        .map(|i| line.replace("SW", &i.to_string()) + "\n")
        .collect();
    let traj = dir.path().join("trajectory.jsonl");
    fs::write(&traj, text).unwrap();
    ok(&["analyze", s(&traj), "--burnin", "2"]);
    let map: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("map_graph.json")).unwrap())
            .unwrap();
    assert_eq!(map["frequency"], 1.0);
    assert_eq!(map["edges"], serde_json::json!([[1, 2]]));
    assert_eq!(code(&["analyze", s(&traj), "--burnin", "5"]), 2);
}

#[test]
fn malformed_trajectory_reports_the_line() {
    let dir = tempfile::tempdir().unwrap();
    let traj = dir.path().join("trajectory.jsonl");
    fs::write(
        &traj,
        "{\"sweep\":1,\"p\":3,\"edges\":[],\"size\":0,\"log_gamma\":0.0}\nnot json\n",
    )
    .unwrap();
    let out = jtsmc(&["analyze", s(&traj)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2"));
}

#[test]
fn exact_uniform_three_nodes() {
    let dir = tempfile::tempdir().unwrap();
    ok(&["exact", "--p", "3", "--out", s(dir.path())]);
    let mut rdr = csv::Reader::from_path(dir.path().join("exact_posterior.csv")).unwrap();
    let probs: Vec<f64> = rdr
        .records()
        .map(|r| r.unwrap()[1].parse().unwrap())
        .collect();
    assert_eq!(probs.len(), 8);
    assert!(probs.iter().all(|&p| (p - 0.125).abs() < 1e-12));
    assert!((probs.iter().sum::<f64>() - 1.0).abs() < 1e-9);
}

#[test]
fn invalid_input_exits_with_two() {
    let data = czech();
    assert_eq!(code(&["sample", "--p", "4", "--N", "1"]), 2);
    assert_eq!(
        code(&["sample", "--p", "4", "--M", "10", "--burnin", "10"]),
        2
    );
    assert_eq!(code(&["sample", "--p", "4", "--alpha", "1.5"]), 2);
    assert_eq!(code(&["sample", "--p", "4", "--delta", "5"]), 2);
    assert_eq!(code(&["sample", "--data", "/nonexistent.csv"]), 2);
    assert_eq!(code(&["sample", "--model", "wishart"]), 2);
    assert_eq!(code(&["exact", "--p", "8"]), 2);
    assert_eq!(code(&["sample", "--data", s(&data), "--frobnicate"]), 2);
}

#[test]
fn unwritable_output_exits_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("f");
    fs::write(&file, "").unwrap();
    let out = file.join("sub");
    assert_eq!(
        code(&[
            "sample",
            "--p",
            "3",
            "--M",
            "5",
            "--N",
            "2",
            "--out",
            s(&out)
        ]),
        3
    );
}

#[test]
fn smc_writes_one_estimate_per_run() {
    let dir = tempfile::tempdir().unwrap();
    ok(&[
        "smc",
        "--p",
        "4",
        "--N",
        "10",
        "--runs",
        "4",
        "--out",
        s(dir.path()),
    ]);
    let text = fs::read_to_string(dir.path().join("smc_log_z.csv")).unwrap();
    assert_eq!(text.lines().count(), 5);
}

#[test]
fn generators_write_data_and_truth() {
    let dir = tempfile::tempdir().unwrap();
    let g = dir.path().join("g");
    ok(&[
        "gen-gaussian",
        "--p",
        "12",
        "--n",
        "40",
        "--seed",
        "2",
        "--out",
        s(&g),
    ]);
    let truth: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(g.join("true_graph.json")).unwrap()).unwrap();
    assert_eq!(truth["p"], 12);
    assert_eq!(
        fs::read_to_string(g.join("data.csv"))
            .unwrap()
            .lines()
            .count(),
        41
    );
    let w = dir.path().join("w");
    ok(&[
        "sample",
        "--data",
        s(&g.join("data.csv")),
        "--model",
        "wishart",
        "--N",
        "4",
        "--M",
        "5",
        "--out",
        s(&w),
    ]);

    let d = dir.path().join("d");
    ok(&[
        "gen-discrete",
        "--graph",
        s(&g.join("true_graph.json")),
        "--n",
        "30",
        "--cardinalities",
        "3",
        "--out",
        s(&d),
    ]);
    assert_eq!(
        fs::read_to_string(d.join("data.csv"))
            .unwrap()
            .lines()
            .count(),
        31
    );

    let cycle = dir.path().join("c4.json");
    fs::write(&cycle, r#"{"p":4,"edges":[[1,2],[2,3],[3,4],[1,4]]}"#).unwrap();
    assert_eq!(
        code(&[
            "gen-discrete",
            "--graph",
            s(&cycle),
            "--n",
            "5",
            "--out",
            s(&d)
        ]),
        2
    );
}

#[test]
fn zero_correlation_gives_a_diagonal_covariance() {
    let sample = gen_gaussian(8, 2000, 0.0, 1.0, &[1, 2, 3], StreamKey::new(1)).unwrap();
    let cov = &sample.covariance;
    for i in 0..8 {
        for j in 0..8 {
            let want = if i == j { 1.0 } else { 0.0 };
            assert!((cov[(i, j)] - want).abs() < 1e-12);
        }
    }
    let y = &sample.observations;
    let s = y.transpose() * y / 2000.0;
    for i in 0..8 {
        let off: f64 = (0..8).filter(|&j| j != i).map(|j| s[(i, j)].abs()).sum();
        assert!(s[(i, i)] > off, "row {i}");
    }
}

#[test]
fn gaussian_covariance_matches_the_graph() {
    let sample = gen_gaussian(20, 10, 0.9, 2.0, &[1, 2, 3, 4, 5], StreamKey::new(3)).unwrap();
    let cov = &sample.covariance;
    assert!(cov.clone().cholesky().is_some());
    let precision = cov.clone().try_inverse().unwrap();
    for (a, b) in LabeledGraph::all_pairs(20) {
        if sample.graph.has_edge(a, b) {
            assert!((cov[(a, b)] - 1.8).abs() < 1e-9);
        } else {
            assert!(precision[(a, b)].abs() < 1e-9);
        }
    }
    assert!(jtsmc::graph::is_decomposable(&sample.graph));
    // Each lag is capped by the position and by the previous lag plus one.
    for (i, w) in sample.lags.windows(2).enumerate() {
        assert!(w[1] <= w[0] + 1 && w[1] <= i + 1);
    }
}

fn mutual_information(x: &[u32], y: &[u32], kx: usize, ky: usize) -> f64 {
    let n = x.len() as f64;
    let mut joint = vec![vec![0.0; ky]; kx];
    for (&a, &b) in x.iter().zip(y) {
        joint[a as usize][b as usize] += 1.0 / n;
    }
    let px: Vec<f64> = joint.iter().map(|r| r.iter().sum()).collect();
    let py: Vec<f64> = (0..ky).map(|b| joint.iter().map(|r| r[b]).sum()).collect();
    let mut mi = 0.0;
    for a in 0..kx {
        for b in 0..ky {
            if joint[a][b] > 0.0 {
                mi += joint[a][b] * (joint[a][b] / (px[a] * py[b])).ln();
            }
        }
    }
    mi
}

#[test]
fn empty_graph_gives_independent_columns() {
    let g = LabeledGraph::empty(4);
    let d = gen_discrete(&g, &[2, 3, 2, 2], 20_000, 1.0, StreamKey::new(4)).unwrap();
    for (a, b) in LabeledGraph::all_pairs(4) {
        let mi = mutual_information(
            d.column(a),
            d.column(b),
            d.cardinalities[a],
            d.cardinalities[b],
        );
        assert!(mi < 2e-3, "{a}-{b}: {mi}");
    }
}

#[test]
fn single_clique_has_dependent_columns() {
    let g = LabeledGraph::complete(3);
    let d = gen_discrete(&g, &[2, 2, 2], 5000, 0.5, StreamKey::new(6)).unwrap();
    let mi: f64 = LabeledGraph::all_pairs(3)
        .map(|(a, b)| mutual_information(d.column(a), d.column(b), 2, 2))
        .sum();
    assert!(mi > 0.01, "{mi}");
}

#[test]
fn auc_of_perfect_and_tied_rankings() {
    assert_eq!(auc(&[0.9, 0.8, 0.1], &[true, true, false]).unwrap(), 1.0);
    assert_eq!(auc(&[0.5, 0.5], &[true, false]).unwrap(), 0.5);
    assert_eq!(auc(&[0.1, 0.9], &[true, false]).unwrap(), 0.0);
    assert!(auc(&[0.1], &[true]).is_err());
}
