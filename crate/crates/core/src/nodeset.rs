//! Compact sets of node labels backed by a single `u64`.

use std::cmp::Ordering;
use std::fmt;

/// Largest number of variables a model may have.
pub const MAX_NODES: usize = 64;

/// A set of node labels in `0..64`.
///
/// Ordering is lexicographic on the ascending element sequence, so `{0,1}` <
/// `{0,2}` < `{1}` and the empty set sorts first.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct NodeSet(u64);

impl NodeSet {
    pub const EMPTY: NodeSet = NodeSet(0);

    #[inline]
    pub const fn from_bits(bits: u64) -> Self {
        NodeSet(bits)
    }

    #[inline]
    pub const fn bits(self) -> u64 {
        self.0
    }

    #[inline]
    pub fn singleton(node: usize) -> Self {
        debug_assert!(node < MAX_NODES);
        NodeSet(1u64 << node)
    }

    /// The set `{0, .., n-1}`.
    #[inline]
    pub fn prefix(n: usize) -> Self {
        debug_assert!(n <= MAX_NODES);
        if n == MAX_NODES {
            NodeSet(u64::MAX)
        } else {
            NodeSet((1u64 << n) - 1)
        }
    }

    #[inline]
    pub const fn is_empty(self) -> bool {
        self.0 == 0
    }

    #[inline]
    pub const fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    #[inline]
    pub const fn contains(self, node: usize) -> bool {
        node < MAX_NODES && self.0 & (1u64 << node) != 0
    }

    #[inline]
    pub fn insert(&mut self, node: usize) {
        debug_assert!(node < MAX_NODES);
        self.0 |= 1u64 << node;
    }

    #[inline]
    pub fn remove(&mut self, node: usize) {
        self.0 &= !(1u64 << node);
    }

    #[inline]
    pub fn with(self, node: usize) -> Self {
        NodeSet(self.0 | (1u64 << node))
    }

    #[inline]
    pub fn without(self, node: usize) -> Self {
        NodeSet(self.0 & !(1u64 << node))
    }

    #[inline]
    pub const fn union(self, other: NodeSet) -> Self {
        NodeSet(self.0 | other.0)
    }

    #[inline]
    pub const fn intersection(self, other: NodeSet) -> Self {
        NodeSet(self.0 & other.0)
    }

    #[inline]
    pub const fn difference(self, other: NodeSet) -> Self {
        NodeSet(self.0 & !other.0)
    }

    #[inline]
    pub const fn is_subset(self, other: NodeSet) -> bool {
        self.0 & !other.0 == 0
    }

    #[inline]
    pub const fn is_strict_subset(self, other: NodeSet) -> bool {
        self.is_subset(other) && self.0 != other.0
    }

    /// Smallest element, if any.
    #[inline]
    pub fn first(self) -> Option<usize> {
        (self.0 != 0).then(|| self.0.trailing_zeros() as usize)
    }

    /// Largest element, if any.
    #[inline]
    pub fn last(self) -> Option<usize> {
        (self.0 != 0).then(|| 63 - self.0.leading_zeros() as usize)
    }

    #[inline]
    pub fn iter(self) -> NodeIter {
        NodeIter(self.0)
    }

    /// All subsets of `self`, in increasing bit order, starting with the empty set.
    pub fn subsets(self) -> impl Iterator<Item = NodeSet> {
        let full = self.0;
        let mut next = Some(0u64);
        std::iter::from_fn(move || {
            let cur = next?;
            next = if cur == full {
                None
            } else {
                Some(cur.wrapping_sub(full) & full)
            };
            Some(NodeSet(cur))
        })
    }

    pub fn to_vec(self) -> Vec<usize> {
        self.iter().collect()
    }
}

impl FromIterator<usize> for NodeSet {
    fn from_iter<I: IntoIterator<Item = usize>>(iter: I) -> Self {
        let mut s = NodeSet::EMPTY;
        for node in iter {
            s.insert(node);
        }
        s
    }
}

impl<'a> FromIterator<&'a usize> for NodeSet {
    fn from_iter<I: IntoIterator<Item = &'a usize>>(iter: I) -> Self {
        iter.into_iter().copied().collect()
    }
}

impl IntoIterator for NodeSet {
    type Item = usize;
    type IntoIter = NodeIter;

    fn into_iter(self) -> NodeIter {
        self.iter()
    }
}

/// Ascending iterator over the elements of a [`NodeSet`].
#[derive(Clone)]
pub struct NodeIter(u64);

impl Iterator for NodeIter {
    type Item = usize;

    #[inline]
    fn next(&mut self) -> Option<usize> {
        if self.0 == 0 {
            return None;
        }
        let i = self.0.trailing_zeros() as usize;
        self.0 &= self.0 - 1;
        Some(i)
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let n = self.0.count_ones() as usize;
        (n, Some(n))
    }
}

impl ExactSizeIterator for NodeIter {}

impl Ord for NodeSet {
    fn cmp(&self, other: &Self) -> Ordering {
        let diff = self.0 ^ other.0;
        if diff == 0 {
            return Ordering::Equal;
        }
        // Both sequences agree below the lowest differing element `x`; the
        // set owning `x` is smaller unless the other one has nothing left.
        let x = diff.trailing_zeros();
        let above = if x == 63 { 0 } else { !((1u64 << (x + 1)) - 1) };
        let (owner_is_self, rest_of_other) = if self.0 & (1u64 << x) != 0 {
            (true, other.0 & above)
        } else {
            (false, self.0 & above)
        };
        let owner_smaller = rest_of_other != 0;
        match (owner_is_self, owner_smaller) {
            (true, true) | (false, false) => Ordering::Less,
            _ => Ordering::Greater,
        }
    }
}

impl PartialOrd for NodeSet {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for NodeSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

impl fmt::Display for NodeSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (k, node) in self.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{}", node + 1)?;
        }
        write!(f, "}}")
    }
}
