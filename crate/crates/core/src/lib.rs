pub mod data;
pub mod error;
pub mod exec;
pub mod fixtures;
pub mod graph;
pub mod kernels;
pub mod nodeset;
pub mod oracle;
pub mod pgibbs;
pub mod rng;
pub mod scores;
pub mod smc;

pub use error::{Error, Result};
pub use graph::{JunctionTree, LabeledGraph};
pub use nodeset::NodeSet;
