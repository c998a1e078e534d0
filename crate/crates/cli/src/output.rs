//! On-disk artifacts. `sample` and `analyze` both go through
//! [`write_summaries`], so the summary files they produce are identical.

use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use jtsmc::graph::json::GraphJson;
use jtsmc::pgibbs::{autocorrelation, edge_marginals, iact, top_k, ChainRecord};
use jtsmc::LabeledGraph;
use serde::{Deserialize, Serialize};

use crate::error::{read_err, write_err, CliError, CliResult};

/// Number of graphs listed in `top_graphs.csv`.
pub const TOP_GRAPHS: usize = 10;
/// Largest lag written to `size_autocorr.csv`.
pub const MAX_LAG: usize = 100;

/// One line of `trajectory.jsonl`. Labels are 1-based.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrajectoryLine {
    pub sweep: usize,
    pub p: usize,
    pub edges: Vec<[usize; 2]>,
    pub size: usize,
    pub log_gamma: f64,
}

impl From<&ChainRecord> for TrajectoryLine {
    fn from(r: &ChainRecord) -> Self {
        TrajectoryLine {
            sweep: r.sweep,
            p: r.graph.node_count(),
            edges: GraphJson::from(&r.graph).edges,
            size: r.size,
            log_gamma: r.log_gamma,
        }
    }
}

impl TrajectoryLine {
    fn into_record(self, line: usize) -> CliResult<ChainRecord> {
        let graph = LabeledGraph::try_from(&GraphJson {
            p: self.p,
            edges: self.edges,
        })
        .map_err(|e| parse_error(line, e))?;
        if graph.edge_count() != self.size {
            return Err(parse_error(
                line,
                format!("size {} but {} edges", self.size, graph.edge_count()),
            ));
        }
        Ok(ChainRecord {
            sweep: self.sweep,
            graph,
            size: self.size,
            log_gamma: self.log_gamma,
            wall_time: 0.0,
        })
    }
}

fn parse_error(line: usize, e: impl std::fmt::Display) -> CliError {
    CliError::validation(format!("trajectory line {line}: {e}"))
}

/// Streams records to `trajectory.jsonl`, one JSON object per line.
pub struct TrajectoryWriter {
    out: BufWriter<File>,
    path: std::path::PathBuf,
}

impl TrajectoryWriter {
    pub fn create(dir: &Path) -> CliResult<Self> {
        let path = dir.join("trajectory.jsonl");
        let file = File::create(&path).map_err(|e| write_err(&path, e))?;
        Ok(TrajectoryWriter {
            out: BufWriter::new(file),
            path,
        })
    }

    pub fn write(&mut self, r: &ChainRecord) -> CliResult<()> {
        let line = serde_json::to_string(&TrajectoryLine::from(r))
            .map_err(|e| write_err(&self.path, e))?;
        writeln!(self.out, "{line}").map_err(|e| write_err(&self.path, e))
    }

    pub fn finish(mut self) -> CliResult<()> {
        self.out.flush().map_err(|e| write_err(&self.path, e))
    }
}

/// Reads every record of a trajectory file, checking that sweeps count up
/// from 1 and that all graphs have the same node count.
pub fn read_trajectory(path: &Path) -> CliResult<Vec<ChainRecord>> {
    let file = File::open(path).map_err(|e| read_err(path, e))?;
    let mut out: Vec<ChainRecord> = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let n = i + 1;
        let line = line.map_err(|e| read_err(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let parsed: TrajectoryLine = serde_json::from_str(&line).map_err(|e| parse_error(n, e))?;
        let r = parsed.into_record(n)?;
        if r.sweep != out.len() + 1 {
            return Err(parse_error(
                n,
                format!("expected sweep {}, found {}", out.len() + 1, r.sweep),
            ));
        }
        if let Some(first) = out.first() {
            if first.graph.node_count() != r.graph.node_count() {
                return Err(parse_error(n, "node count changes within the file"));
            }
        }
        out.push(r);
    }
    Ok(out)
}

/// Space-separated `a-b` pairs, 1-based.
pub fn edge_string(g: &LabeledGraph) -> String {
    g.edges()
        .iter()
        .map(|(a, b)| format!("{}-{}", a + 1, b + 1))
        .collect::<Vec<_>>()
        .join(" ")
}

/// Upper-triangle pairs with their probabilities.
pub fn write_pair_table(path: &Path, m: &[Vec<f64>]) -> CliResult<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| write_err(path, e))?;
    let res: csv::Result<()> = (|| {
        w.write_record(["node_a", "node_b", "probability"])?;
        for (a, b) in LabeledGraph::all_pairs(m.len()) {
            w.write_record([
                (a + 1).to_string(),
                (b + 1).to_string(),
                m[a][b].to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    })();
    res.map_err(|e| write_err(path, e))
}

/// Graphs by rank with their probabilities.
pub fn write_graph_table(path: &Path, graphs: &[(LabeledGraph, f64)]) -> CliResult<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| write_err(path, e))?;
    let res: csv::Result<()> = (|| {
        w.write_record(["rank", "probability", "size", "edges"])?;
        for (i, (g, pr)) in graphs.iter().enumerate() {
            w.write_record([
                (i + 1).to_string(),
                pr.to_string(),
                g.edge_count().to_string(),
                edge_string(g),
            ])?;
        }
        w.flush()?;
        Ok(())
    })();
    res.map_err(|e| write_err(path, e))
}

#[derive(Serialize, Deserialize)]
pub struct MapGraph {
    pub p: usize,
    pub edges: Vec<[usize; 2]>,
    pub frequency: f64,
}

#[derive(Serialize, Deserialize)]
pub struct Summary {
    pub records: usize,
    pub burn_in: usize,
    pub map_frequency: f64,
    pub mean_size: f64,
    pub iact_size: f64,
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| write_err(path, e))?;
    fs::write(path, text + "\n").map_err(|e| write_err(path, e))
}

/// Writes the summary files computed from the kept records.
pub fn write_summaries(dir: &Path, kept: &[ChainRecord], burn_in: usize) -> CliResult<()> {
    let marginals = edge_marginals(kept)?;
    write_pair_table(&dir.join("edge_marginals.csv"), &marginals)?;

    let top = top_k(kept, TOP_GRAPHS)?;
    let (map, freq) = &top[0];
    write_json(
        &dir.join("map_graph.json"),
        &MapGraph {
            p: map.node_count(),
            edges: GraphJson::from(map).edges,
            frequency: *freq,
        },
    )?;
    write_graph_table(&dir.join("top_graphs.csv"), &top)?;

    let sizes: Vec<f64> = kept.iter().map(|r| r.size as f64).collect();
    let path = dir.join("size_autocorr.csv");
    let mut w = csv::Writer::from_path(&path).map_err(|e| write_err(&path, e))?;
    let res: csv::Result<()> = (|| {
        w.write_record(["lag", "autocorrelation"])?;
        for (lag, r) in autocorrelation(&sizes, MAX_LAG).iter().enumerate() {
            w.write_record([lag.to_string(), r.to_string()])?;
        }
        w.flush()?;
        Ok(())
    })();
    res.map_err(|e| write_err(&path, e))?;

    write_json(
        &dir.join("summary.json"),
        &Summary {
            records: kept.len(),
            burn_in,
            map_frequency: *freq,
            mean_size: sizes.iter().sum::<f64>() / sizes.len() as f64,
            iact_size: iact(&sizes),
        },
    )
}

pub fn ensure_dir(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(|e| write_err(dir, e))
}
