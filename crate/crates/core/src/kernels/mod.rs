//! Node-order kernels, the junction-tree expander and its backward kernel.

mod expander;
mod order;

pub use expander::{
    backward_density, backward_sample, collapse_support, contractions, expand, expand_density,
    link, log_move_probability, log_sum_exp, replay, Contraction, ExpanderConfig, ExpansionMove,
    Link,
};
pub use order::{NodeOrder, OrderKernelConfig};
