//! JSON forms of graphs and junction trees. Node labels are 1-based on disk.

use serde::{Deserialize, Serialize};

use super::{JunctionTree, LabeledGraph};
use crate::error::{Error, Result};
use crate::nodeset::NodeSet;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphJson {
    pub p: usize,
    pub edges: Vec<[usize; 2]>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeJson {
    pub cliques: Vec<Vec<usize>>,
    pub tree_edges: Vec<[usize; 2]>,
}

impl From<&LabeledGraph> for GraphJson {
    fn from(g: &LabeledGraph) -> Self {
        GraphJson {
            p: g.node_count(),
            edges: g.edges().into_iter().map(|(a, b)| [a + 1, b + 1]).collect(),
        }
    }
}

impl TryFrom<&GraphJson> for LabeledGraph {
    type Error = Error;

    fn try_from(j: &GraphJson) -> Result<Self> {
        let mut pairs = Vec::with_capacity(j.edges.len());
        for &[a, b] in &j.edges {
            if a == 0 || b == 0 {
                return Err(Error::InvalidConfig("graph labels are 1-based".into()));
            }
            pairs.push((a - 1, b - 1));
        }
        LabeledGraph::from_edges(j.p, &pairs)
    }
}

impl From<&JunctionTree> for TreeJson {
    fn from(t: &JunctionTree) -> Self {
        TreeJson {
            cliques: t
                .cliques()
                .iter()
                .map(|c| c.iter().map(|v| v + 1).collect())
                .collect(),
            tree_edges: t.edges().iter().map(|&(a, b)| [a, b]).collect(),
        }
    }
}

impl TryFrom<&TreeJson> for JunctionTree {
    type Error = Error;

    fn try_from(j: &TreeJson) -> Result<Self> {
        let mut cliques = Vec::with_capacity(j.cliques.len());
        let mut nodes = 0;
        for c in &j.cliques {
            let mut set = NodeSet::EMPTY;
            for &v in c {
                if v == 0 || v > crate::nodeset::MAX_NODES {
                    return Err(Error::InvalidConfig(format!("node label {v} out of range")));
                }
                set.insert(v - 1);
                nodes = nodes.max(v);
            }
            cliques.push(set);
        }
        let edges = j.tree_edges.iter().map(|&[a, b]| (a, b)).collect();
        JunctionTree::new(nodes, cliques, edges)
    }
}

pub fn graph_to_json(g: &LabeledGraph) -> String {
    serde_json::to_string(&GraphJson::from(g)).expect("graph serialises")
}

pub fn graph_from_json(s: &str) -> Result<LabeledGraph> {
    LabeledGraph::try_from(&serde_json::from_str::<GraphJson>(s)?)
}

pub fn tree_to_json(t: &JunctionTree) -> String {
    serde_json::to_string(&TreeJson::from(t)).expect("tree serialises")
}

pub fn tree_from_json(s: &str) -> Result<JunctionTree> {
    JunctionTree::try_from(&serde_json::from_str::<TreeJson>(s)?)
}
