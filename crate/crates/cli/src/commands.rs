//! Subcommand implementations.

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use jtsmc::graph::json::GraphJson;
use jtsmc::oracle::exact_posterior;
use jtsmc::pgibbs::run_chain;
use jtsmc::rng::StreamKey;
use jtsmc::smc::run_smc;
use jtsmc::LabeledGraph;
use serde::Serialize;

use crate::config::{load_config_file, RunConfig, Settings};
use crate::error::{read_err, write_err, CliError, CliResult};
use crate::generate::{gaussian_csv, gen_discrete, gen_gaussian, off_graph_precision};
use crate::output::{
    ensure_dir, read_trajectory, write_graph_table, write_json, write_pair_table, write_summaries,
    TrajectoryWriter,
};

#[derive(Parser, Debug)]
#[command(
    name = "jtsmc",
    version,
    about = "Particle Gibbs for decomposable graph posteriors"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Run a particle Gibbs chain and summarise it.
    Sample(Settings),
    /// Enumerate the exact posterior (at most six variables).
    Exact(Settings),
    /// Run independent SMC passes and report the normalising-constant estimates.
    Smc(SmcArgs),
    /// Generate Gaussian data from a banded graph with varying lag.
    GenGaussian(GaussianArgs),
    /// Generate categorical data Markov to a given decomposable graph.
    GenDiscrete(DiscreteArgs),
    /// Recompute the summaries of a stored trajectory.
    Analyze(AnalyzeArgs),
}

#[derive(Args, Debug)]
pub struct SmcArgs {
    #[command(flatten)]
    pub settings: Settings,
    /// Number of independent passes.
    #[arg(long, default_value_t = 10)]
    pub runs: usize,
}

#[derive(Args, Debug)]
pub struct GaussianArgs {
    #[arg(long)]
    pub p: usize,
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 0.9)]
    pub rho: f64,
    #[arg(long, default_value_t = 1.0)]
    pub sigma2: f64,
    /// Candidate lags, as a range `a-b` or a list `a,b,c`.
    #[arg(long, default_value = "1-5")]
    pub lags: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct DiscreteArgs {
    /// Graph JSON: `{"p": .., "edges": [[a, b], ..]}` with 1-based labels.
    #[arg(long)]
    pub graph: PathBuf,
    /// Levels per variable: one number for all, or a comma-separated list.
    #[arg(long, default_value = "2")]
    pub cardinalities: String,
    #[arg(long)]
    pub n: usize,
    /// Dirichlet concentration of every table cell.
    #[arg(long, default_value_t = 1.0)]
    pub concentration: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct AnalyzeArgs {
    /// A `trajectory.jsonl` written by `sample`.
    pub trajectory: PathBuf,
    /// Leading sweeps to discard (default: from the neighbouring run_meta.json, else 0).
    #[arg(long = "burnin")]
    pub burn_in: Option<usize>,
    /// Output directory (default: the trajectory's directory).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Sample(s) => cmd_sample(s),
        Command::Exact(s) => cmd_exact(s),
        Command::Smc(a) => cmd_smc(a),
        Command::GenGaussian(a) => cmd_gen_gaussian(a),
        Command::GenDiscrete(a) => cmd_gen_discrete(a),
        Command::Analyze(a) => cmd_analyze(a),
    }
}

#[derive(Serialize)]
struct RunMeta<'a> {
    config: &'a RunConfig,
    version: &'static str,
    parallel_feature: bool,
    records: usize,
    elapsed_seconds: f64,
}

pub fn cmd_sample(settings: Settings) -> CliResult<()> {
    let (cfg, score) = RunConfig::resolve(settings.merged()?)?;
    let model = cfg.temporal_model(score)?;
    ensure_dir(&cfg.out)?;
    let start = Instant::now();
    let mut writer = TrajectoryWriter::create(&cfg.out)?;
    let mut failure = None;
    let kept = run_chain(
        &model,
        &cfg.chain_config(),
        StreamKey::new(cfg.seed),
        None,
        |r, _| {
            if failure.is_none() {
                failure = writer.write(r).err();
            }
        },
    )
    .map_err(|e| CliError::runtime(e.to_string()))?;
    if let Some(e) = failure {
        return Err(e);
    }
    writer.finish()?;
    write_summaries(&cfg.out, &kept, cfg.burn_in)?;
    write_json(
        &cfg.out.join("run_meta.json"),
        &RunMeta {
            config: &cfg,
            version: env!("CARGO_PKG_VERSION"),
            parallel_feature: cfg!(feature = "parallel"),
            records: kept.len(),
            elapsed_seconds: start.elapsed().as_secs_f64(),
        },
    )
}

pub fn cmd_exact(settings: Settings) -> CliResult<()> {
    let s = settings.merged()?;
    let out = s.out.clone().unwrap_or_else(|| PathBuf::from("."));
    // Sampler settings are irrelevant here; only the model is resolved.
    let (_, score) = RunConfig::resolve(Settings {
        particles: None,
        sweeps: None,
        burn_in: None,
        delta: None,
        ..s
    })?;
    let exact = exact_posterior(&score)?;
    ensure_dir(&out)?;
    write_graph_table(&out.join("exact_posterior.csv"), &exact.ranked())?;
    write_pair_table(
        &out.join("exact_edge_marginals.csv"),
        &exact.edge_marginals(),
    )?;
    #[derive(Serialize)]
    struct ExactMeta {
        p: usize,
        graphs: usize,
        log_normaliser: f64,
    }
    write_json(
        &out.join("exact_meta.json"),
        &ExactMeta {
            p: exact.p,
            graphs: exact.support.len(),
            log_normaliser: exact.log_normaliser,
        },
    )
}

pub fn cmd_smc(args: SmcArgs) -> CliResult<()> {
    if args.runs == 0 {
        return Err(CliError::validation("--runs must be positive"));
    }
    let (cfg, score) = RunConfig::resolve(args.settings.merged()?)?;
    let model = cfg.temporal_model(score)?;
    ensure_dir(&cfg.out)?;
    let key = StreamKey::new(cfg.seed);
    let path = cfg.out.join("smc_log_z.csv");
    let mut w = csv::Writer::from_path(&path).map_err(|e| write_err(&path, e))?;
    w.write_record(["run", "log_z"])
        .map_err(|e| write_err(&path, e))?;
    for r in 0..args.runs {
        let sys = run_smc(
            &model,
            cfg.particles,
            key.child(r as u64),
            None,
            cfg.execution(),
        )
        .map_err(|e| CliError::runtime(e.to_string()))?;
        w.write_record([
            (r + 1).to_string(),
            sys.log_normalising_constant().to_string(),
        ])
        .map_err(|e| write_err(&path, e))?;
    }
    w.flush().map_err(|e| write_err(&path, e))
}

/// Parses `a-b` as an inclusive range or `a,b,c` as a list.
pub fn parse_lags(spec: &str) -> CliResult<Vec<usize>> {
    let bad = || CliError::validation(format!("cannot read lags `{spec}`"));
    let lags: Vec<usize> = if let Some((a, b)) = spec.split_once('-') {
        let a: usize = a.trim().parse().map_err(|_| bad())?;
        let b: usize = b.trim().parse().map_err(|_| bad())?;
        (a..=b).collect()
    } else {
        spec.split(',')
            .map(|x| x.trim().parse().map_err(|_| bad()))
            .collect::<CliResult<_>>()?
    };
    if lags.is_empty() {
        return Err(bad());
    }
    Ok(lags)
}

fn write_text(path: &Path, text: &str) -> CliResult<()> {
    std::fs::write(path, text).map_err(|e| write_err(path, e))
}

fn write_graph(path: &Path, g: &LabeledGraph) -> CliResult<()> {
    write_json(path, &GraphJson::from(g))
}

pub fn cmd_gen_gaussian(a: GaussianArgs) -> CliResult<()> {
    let lags = parse_lags(&a.lags)?;
    let sample = gen_gaussian(a.p, a.n, a.rho, a.sigma2, &lags, StreamKey::new(a.seed))?;
    ensure_dir(&a.out)?;
    write_text(&a.out.join("data.csv"), &gaussian_csv(&sample))?;
    write_graph(&a.out.join("true_graph.json"), &sample.graph)?;
    #[derive(Serialize)]
    struct GenMeta<'a> {
        p: usize,
        n: usize,
        rho: f64,
        sigma2: f64,
        seed: u64,
        lags: &'a [usize],
        max_off_graph_precision: f64,
    }
    write_json(
        &a.out.join("gen_meta.json"),
        &GenMeta {
            p: a.p,
            n: a.n,
            rho: a.rho,
            sigma2: a.sigma2,
            seed: a.seed,
            lags: &sample.lags,
            max_off_graph_precision: off_graph_precision(&sample.graph, &sample.covariance),
        },
    )
}

pub fn parse_cardinalities(spec: &str, p: usize) -> CliResult<Vec<usize>> {
    let bad = || CliError::validation(format!("cannot read cardinalities `{spec}`"));
    let values: Vec<usize> = spec
        .split(',')
        .map(|x| x.trim().parse().map_err(|_| bad()))
        .collect::<CliResult<_>>()?;
    match values.len() {
        1 => Ok(vec![values[0]; p]),
        n if n == p => Ok(values),
        n => Err(CliError::validation(format!(
            "{n} cardinalities for {p} variables"
        ))),
    }
}

pub fn cmd_gen_discrete(a: DiscreteArgs) -> CliResult<()> {
    let text = std::fs::read_to_string(&a.graph).map_err(|e| read_err(&a.graph, e))?;
    let json: GraphJson = serde_json::from_str(&text).map_err(|e| read_err(&a.graph, e))?;
    let g = LabeledGraph::try_from(&json)?;
    let card = parse_cardinalities(&a.cardinalities, g.node_count())?;
    let data = gen_discrete(&g, &card, a.n, a.concentration, StreamKey::new(a.seed))?;
    ensure_dir(&a.out)?;
    write_text(&a.out.join("data.csv"), &data.to_csv())?;
    write_graph(&a.out.join("true_graph.json"), &g)
}

pub fn cmd_analyze(a: AnalyzeArgs) -> CliResult<()> {
    let dir = a
        .trajectory
        .parent()
        .map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from("."));
    let burn_in = match a.burn_in {
        Some(b) => b,
        None => {
            let meta = dir.join("run_meta.json");
            if meta.exists() {
                load_config_file(&meta)?.burn_in.unwrap_or(0)
            } else {
                0
            }
        }
    };
    let records = read_trajectory(&a.trajectory)?;
    if burn_in >= records.len() {
        return Err(CliError::validation(format!(
            "burn-in {burn_in} leaves nothing of {} records",
            records.len()
        )));
    }
    let out = a.out.unwrap_or(dir);
    ensure_dir(&out)?;
    write_summaries(&out, &records[burn_in..], burn_in)
}
