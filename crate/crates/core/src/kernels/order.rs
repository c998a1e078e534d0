use rand::Rng;

use crate::error::{Error, Result};
use crate::nodeset::{NodeSet, MAX_NODES};

/// The external labels `(v_1, .., v_m)` assigned to internal nodes `0..m`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct NodeOrder {
    labels: Vec<usize>,
    used: NodeSet,
}

impl NodeOrder {
    pub fn new(labels: Vec<usize>, p: usize) -> Result<Self> {
        if labels.is_empty() || labels.len() > p {
            return Err(Error::InvalidConfig(format!(
                "a node order holds 1..={p} labels, got {}",
                labels.len()
            )));
        }
        let mut used = NodeSet::EMPTY;
        for &l in &labels {
            if l >= p || used.contains(l) {
                return Err(Error::InvalidConfig(format!(
                    "label {} is out of range or repeated",
                    l + 1
                )));
            }
            used.insert(l);
        }
        Ok(NodeOrder { labels, used })
    }

    pub fn single(label: usize) -> Self {
        assert!(label < MAX_NODES);
        NodeOrder {
            labels: vec![label],
            used: NodeSet::singleton(label),
        }
    }

    /// The identity order `(0, .., p-1)`.
    pub fn identity(p: usize) -> Self {
        NodeOrder {
            labels: (0..p).collect(),
            used: NodeSet::prefix(p),
        }
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    #[inline]
    pub fn as_slice(&self) -> &[usize] {
        &self.labels
    }

    #[inline]
    pub fn used(&self) -> NodeSet {
        self.used
    }

    #[inline]
    pub fn contains(&self, label: usize) -> bool {
        self.used.contains(label)
    }

    pub fn extended(&self, label: usize) -> Self {
        debug_assert!(!self.used.contains(label));
        let mut labels = Vec::with_capacity(self.labels.len() + 1);
        labels.extend_from_slice(&self.labels);
        labels.push(label);
        NodeOrder {
            labels,
            used: self.used.with(label),
        }
    }

    pub fn prefix(&self, m: usize) -> Self {
        let labels = self.labels[..m].to_vec();
        let used = labels.iter().collect();
        NodeOrder { labels, used }
    }
}

impl std::fmt::Debug for NodeOrder {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let shown: Vec<usize> = self.labels.iter().map(|l| l + 1).collect();
        write!(f, "NodeOrder{shown:?}")
    }
}

/// The node-order kernel: the next label is uniform over the unused labels
/// within `bandwidth` of some used one, or over all unused labels when no
/// such label exists. The first label is uniform over `0..p`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct OrderKernelConfig {
    pub p: usize,
    pub bandwidth: usize,
}

impl OrderKernelConfig {
    pub fn new(p: usize, bandwidth: usize) -> Result<Self> {
        if bandwidth == 0 {
            return Err(Error::InvalidConfig("bandwidth must be at least 1".into()));
        }
        if p == 0 || p > MAX_NODES {
            return Err(Error::TooLarge {
                what: "variable count",
                value: p,
                limit: MAX_NODES,
            });
        }
        Ok(OrderKernelConfig { p, bandwidth })
    }

    /// The labels the next step may choose from.
    pub fn candidates(&self, v: &NodeOrder) -> NodeSet {
        let free = NodeSet::prefix(self.p).difference(v.used());
        let near: NodeSet = free
            .iter()
            .filter(|&s| {
                let lo = s.saturating_sub(self.bandwidth);
                let hi = (s + self.bandwidth).min(self.p - 1);
                (lo..=hi).any(|x| v.contains(x))
            })
            .collect();
        if near.is_empty() {
            free
        } else {
            near
        }
    }

    pub fn step_density(&self, v: &NodeOrder, j: usize) -> f64 {
        let c = self.candidates(v);
        if c.contains(j) {
            1.0 / c.len() as f64
        } else {
            0.0
        }
    }

    pub fn sample_step<R: Rng + ?Sized>(&self, v: &NodeOrder, rng: &mut R) -> usize {
        let c = self.candidates(v);
        let k = rng.random_range(0..c.len());
        c.iter().nth(k).expect("candidate set is non-empty")
    }

    pub fn initial_density(&self, j: usize) -> f64 {
        if j < self.p {
            1.0 / self.p as f64
        } else {
            0.0
        }
    }

    pub fn sample_initial<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        rng.random_range(0..self.p)
    }

    /// A full order drawn step by step from the kernel.
    pub fn sample_order<R: Rng + ?Sized>(&self, rng: &mut R) -> NodeOrder {
        let mut v = NodeOrder::single(self.sample_initial(rng));
        while v.len() < self.p {
            v = v.extended(self.sample_step(&v, rng));
        }
        v
    }

    /// ln ρ_m(v): the probability of drawing the order `v` step by step.
    pub fn log_order_probability(&self, v: &NodeOrder) -> f64 {
        let mut out = (self.initial_density(v.as_slice()[0])).ln();
        for m in 1..v.len() {
            out += self.step_density(&v.prefix(m), v.as_slice()[m]).ln();
        }
        out
    }
}
