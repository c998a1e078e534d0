//! Command-line and config-file settings for the sampling commands.
//!
//! A JSON config file supplies defaults; any flag given explicitly wins.

use std::fs::File;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, ValueEnum};
use jtsmc::data::{matrix_from_csv, ContinuousData, DiscreteData};
use jtsmc::exec::Execution;
use jtsmc::kernels::ExpanderConfig;
use jtsmc::pgibbs::ChainConfig;
use jtsmc::scores::ScoreModel;
use jtsmc::smc::TemporalModel;
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{read_err, CliError, CliResult};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Uniform,
    Dirichlet,
    Wishart,
}

/// Every setting is optional here so that flags and file can be merged.
#[derive(Args, Clone, Debug, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Settings {
    /// JSON file of settings; explicit flags override it.
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    /// CSV with a header row and one observation per row.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Score model; defaults to dirichlet with data and uniform without.
    #[arg(long, value_enum)]
    pub model: Option<ModelKind>,
    /// Variable count for the uniform model when no data is given.
    #[arg(long)]
    pub p: Option<usize>,
    /// Total Dirichlet pseudo count, spread evenly over the full table.
    #[arg(long)]
    pub pseudo_count_total: Option<f64>,
    /// Wishart degrees of freedom (default: number of variables).
    #[arg(long)]
    pub dof: Option<f64>,
    /// Wishart scale: a number c for c·I, or a headerless CSV matrix.
    #[arg(long)]
    pub scale: Option<String>,
    /// Particles per SMC pass.
    #[arg(long = "N")]
    #[serde(rename = "N")]
    pub particles: Option<usize>,
    /// Particle Gibbs sweeps, burn-in included.
    #[arg(long = "M")]
    #[serde(rename = "M")]
    pub sweeps: Option<usize>,
    /// Leading sweeps to discard (default: 30% of M).
    #[arg(long = "burnin")]
    pub burn_in: Option<usize>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub beta: Option<f64>,
    /// Node-order bandwidth (default: number of variables).
    #[arg(long)]
    pub delta: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Turn off systematic refreshment.
    #[arg(long)]
    pub no_refresh: bool,
    /// Run particle moves on one thread.
    #[arg(long)]
    pub sequential: bool,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl Settings {
    /// Fills unset fields from the config file, if one was named.
    pub fn merged(self) -> CliResult<Settings> {
        let Some(path) = self.config.clone() else {
            return Ok(self);
        };
        let file = load_config_file(&path)?;
        Ok(Settings {
            config: self.config,
            data: self.data.or(file.data),
            model: self.model.or(file.model),
            p: self.p.or(file.p),
            pseudo_count_total: self.pseudo_count_total.or(file.pseudo_count_total),
            dof: self.dof.or(file.dof),
            scale: self.scale.or(file.scale),
            particles: self.particles.or(file.particles),
            sweeps: self.sweeps.or(file.sweeps),
            burn_in: self.burn_in.or(file.burn_in),
            alpha: self.alpha.or(file.alpha),
            beta: self.beta.or(file.beta),
            delta: self.delta.or(file.delta),
            seed: self.seed.or(file.seed),
            no_refresh: self.no_refresh || file.no_refresh,
            sequential: self.sequential || file.sequential,
            out: self.out.or(file.out),
        })
    }
}

/// Reads settings from JSON. A `run_meta.json` is accepted too: its
/// `config` object is used.
pub fn load_config_file(path: &Path) -> CliResult<Settings> {
    let text = std::fs::read_to_string(path).map_err(|e| read_err(path, e))?;
    let mut value: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| read_err(path, e))?;
    if let Some(inner) = value.get_mut("config") {
        value = inner.take();
    }
    serde_json::from_value(value).map_err(|e| read_err(path, e))
}

/// Settings after defaults and validation. Serialised into `run_meta.json`
/// in a form [`load_config_file`] reads back.
#[derive(Clone, Debug, Serialize)]
pub struct RunConfig {
    pub data: Option<PathBuf>,
    pub model: ModelKind,
    pub p: usize,
    pub pseudo_count_total: Option<f64>,
    pub dof: Option<f64>,
    pub scale: Option<String>,
    #[serde(rename = "N")]
    pub particles: usize,
    #[serde(rename = "M")]
    pub sweeps: usize,
    pub burn_in: usize,
    pub alpha: f64,
    pub beta: f64,
    pub delta: usize,
    pub seed: u64,
    pub no_refresh: bool,
    pub sequential: bool,
    pub out: PathBuf,
}

impl RunConfig {
    /// Applies defaults, checks ranges and loads the score model.
    pub fn resolve(s: Settings) -> CliResult<(RunConfig, ScoreModel)> {
        let model_kind = s.model.unwrap_or(if s.data.is_some() {
            ModelKind::Dirichlet
        } else {
            ModelKind::Uniform
        });
        let (score, pseudo_count_total, dof) = load_score(&s, model_kind)?;
        let p = score.p();
        let particles = s.particles.unwrap_or(100);
        let sweeps = s.sweeps.unwrap_or(10_000);
        let burn_in = s.burn_in.unwrap_or(sweeps * 3 / 10);
        let delta = s.delta.unwrap_or(p);
        if particles < 2 {
            return Err(CliError::validation(format!(
                "N must be at least 2, got {particles}"
            )));
        }
        if sweeps <= burn_in {
            return Err(CliError::validation(format!(
                "M ({sweeps}) must exceed the burn-in ({burn_in})"
            )));
        }
        if !(1..=p).contains(&delta) {
            return Err(CliError::validation(format!(
                "delta must lie in 1..={p}, got {delta}"
            )));
        }
        let cfg = RunConfig {
            data: s.data,
            model: model_kind,
            p,
            pseudo_count_total,
            dof,
            scale: match model_kind {
                ModelKind::Wishart => Some(s.scale.unwrap_or_else(|| "1".into())),
                _ => None,
            },
            particles,
            sweeps,
            burn_in,
            alpha: s.alpha.unwrap_or(0.5),
            beta: s.beta.unwrap_or(0.5),
            delta,
            seed: s.seed.unwrap_or(0),
            no_refresh: s.no_refresh,
            sequential: s.sequential,
            out: s.out.unwrap_or_else(|| PathBuf::from(".")),
        };
        ExpanderConfig::new(cfg.alpha, cfg.beta)?;
        Ok((cfg, score))
    }

    pub fn temporal_model(&self, score: ScoreModel) -> CliResult<TemporalModel> {
        Ok(TemporalModel::new(
            Arc::new(score),
            self.delta,
            ExpanderConfig::new(self.alpha, self.beta)?,
        )?)
    }

    pub fn execution(&self) -> Execution {
        if self.sequential {
            Execution::Sequential
        } else {
            Execution::Parallel
        }
    }

    pub fn chain_config(&self) -> ChainConfig {
        ChainConfig {
            burn_in: Some(self.burn_in),
            refresh: !self.no_refresh,
            exec: self.execution(),
            ..ChainConfig::new(self.particles, self.sweeps)
        }
    }
}

fn open(path: &Path) -> CliResult<File> {
    File::open(path).map_err(|e| read_err(path, e))
}

fn require_data(s: &Settings, model: &str) -> CliResult<PathBuf> {
    s.data
        .clone()
        .ok_or_else(|| CliError::validation(format!("the {model} model needs --data")))
}

type LoadedScore = (ScoreModel, Option<f64>, Option<f64>);

fn load_score(s: &Settings, kind: ModelKind) -> CliResult<LoadedScore> {
    match kind {
        ModelKind::Uniform => {
            let p = match (&s.data, s.p) {
                (_, Some(p)) => p,
                (Some(path), None) => {
                    let mut rdr = csv::Reader::from_reader(open(path)?);
                    rdr.headers().map_err(|e| read_err(path, e))?.len()
                }
                (None, None) => {
                    return Err(CliError::validation(
                        "the uniform model needs --p or --data",
                    ))
                }
            };
            Ok((ScoreModel::uniform(p)?, None, None))
        }
        ModelKind::Dirichlet => {
            let path = require_data(s, "dirichlet")?;
            let data = DiscreteData::from_csv(open(&path)?, None)?;
            let total = s.pseudo_count_total.unwrap_or(1.0);
            Ok((ScoreModel::dirichlet(data, total)?, Some(total), None))
        }
        ModelKind::Wishart => {
            let path = require_data(s, "wishart")?;
            let data = ContinuousData::from_csv(open(&path)?)?;
            let p = data.p();
            let dof = s.dof.unwrap_or(p as f64);
            let scale = parse_scale(s.scale.as_deref().unwrap_or("1"), p)?;
            Ok((ScoreModel::wishart(&data, dof, scale)?, None, Some(dof)))
        }
    }
}

fn parse_scale(spec: &str, p: usize) -> CliResult<DMatrix<f64>> {
    if let Ok(c) = spec.parse::<f64>() {
        if !(c > 0.0 && c.is_finite()) {
            return Err(CliError::validation(format!(
                "scale must be positive, got {c}"
            )));
        }
        return Ok(DMatrix::identity(p, p) * c);
    }
    let path = Path::new(spec);
    Ok(matrix_from_csv(open(path)?)?)
}
