//! Balanced binary-tree topology shared by targets and tree-structured networks.
//!
//! Vertices are addressed by `(level, index)`: level 1 holds the `d/2`
//! parents of the leaves, level `log2 d` holds the root. Internally every
//! per-vertex collection is stored in "flat" bottom-up order: all of level 1
//! left to right, then level 2, and so on, with the root last.

use std::fmt;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId {
    pub level: usize,
    pub index: usize,
}

impl NodeId {
    pub fn new(level: usize, index: usize) -> Self {
        NodeId { level, index }
    }
}

impl fmt::Display for NodeId {
    // 1-based index, so the first vertex of level 2 prints as h2.1
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "h{}.{}", self.level, self.index + 1)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TreeTopology {
    leaves: usize,
    depth: usize,
    /// `leaf_order[i]` is the input coordinate fed to leaf `i`.
    leaf_order: Vec<usize>,
}

impl TreeTopology {
    pub fn new(leaves: usize) -> Result<Self> {
        if leaves < 2 || !leaves.is_power_of_two() {
            return Err(Error::invalid(format!(
                "leaf count must be a power of two >= 2, got {leaves}"
            )));
        }
        Ok(TreeTopology {
            leaves,
            depth: leaves.trailing_zeros() as usize,
            leaf_order: (0..leaves).collect(),
        })
    }

    pub fn with_leaf_order(leaves: usize, leaf_order: Vec<usize>) -> Result<Self> {
        let mut topo = Self::new(leaves)?;
        if leaf_order.len() != leaves {
            return Err(Error::DimensionMismatch {
                expected: leaves,
                got: leaf_order.len(),
            });
        }
        let mut seen = vec![false; leaves];
        for &c in &leaf_order {
            if c >= leaves || seen[c] {
                return Err(Error::invalid(format!(
                    "leaf order {leaf_order:?} is not a permutation of 0..{leaves}"
                )));
            }
            seen[c] = true;
        }
        topo.leaf_order = leaf_order;
        Ok(topo)
    }

    pub fn leaves(&self) -> usize {
        self.leaves
    }

    /// Number of levels of non-leaf vertices.
    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn node_count(&self) -> usize {
        self.leaves - 1
    }

    pub fn leaf_order(&self) -> &[usize] {
        &self.leaf_order
    }

    pub fn level_width(&self, level: usize) -> usize {
        self.leaves >> level
    }

    fn level_offset(&self, level: usize) -> usize {
        self.leaves - (self.leaves >> (level - 1))
    }

    pub fn contains(&self, node: NodeId) -> bool {
        node.level >= 1 && node.level <= self.depth && node.index < self.level_width(node.level)
    }

    pub fn flat_index(&self, node: NodeId) -> Option<usize> {
        self.contains(node)
            .then(|| self.level_offset(node.level) + node.index)
    }

    pub fn node_at(&self, flat: usize) -> NodeId {
        debug_assert!(flat < self.node_count());
        let mut level = 1;
        while flat >= self.level_offset(level + 1) {
            level += 1;
        }
        NodeId::new(level, flat - self.level_offset(level))
    }

    /// Vertices in flat (bottom-up) order.
    pub fn nodes(&self) -> impl Iterator<Item = NodeId> + '_ {
        (1..=self.depth)
            .flat_map(move |level| (0..self.level_width(level)).map(move |i| NodeId::new(level, i)))
    }

    pub fn root(&self) -> NodeId {
        NodeId::new(self.depth, 0)
    }

    pub fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.leaves {
            return Err(Error::DimensionMismatch {
                expected: self.leaves,
                got: x.len(),
            });
        }
        Ok(())
    }

    /// Evaluates the tree bottom-up. `node` receives the flat index of the
    /// vertex and its (left, right) child values; the returned vector holds
    /// every vertex output in flat order, root last.
    ///
    /// The caller is responsible for checking `x.len()`.
    pub fn evaluate<F>(&self, x: &[f64], mut node: F) -> Vec<f64>
    where
        F: FnMut(usize, f64, f64) -> f64,
    {
        let mut out = Vec::with_capacity(self.node_count());
        for i in 0..self.leaves / 2 {
            let left = x[self.leaf_order[2 * i]];
            let right = x[self.leaf_order[2 * i + 1]];
            out.push(node(i, left, right));
        }
        for level in 2..=self.depth {
            let child = self.level_offset(level - 1);
            let base = self.level_offset(level);
            for i in 0..self.level_width(level) {
                let v = node(base + i, out[child + 2 * i], out[child + 2 * i + 1]);
                out.push(v);
            }
        }
        out
    }

    /// Flat indices of the two inputs of a vertex: `Err(leaf)` for leaves,
    /// `Ok(flat)` for interior vertices.
    pub fn children(&self, flat: usize) -> [std::result::Result<usize, usize>; 2] {
        let node = self.node_at(flat);
        if node.level == 1 {
            [
                Err(self.leaf_order[2 * node.index]),
                Err(self.leaf_order[2 * node.index + 1]),
            ]
        } else {
            let child = self.level_offset(node.level - 1);
            [Ok(child + 2 * node.index), Ok(child + 2 * node.index + 1)]
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_non_power_of_two() {
        assert!(TreeTopology::new(6).is_err());
        assert!(TreeTopology::new(1).is_err());
        assert!(TreeTopology::new(0).is_err());
    }

    #[test]
    fn flat_order_round_trips() {
        let t = TreeTopology::new(16).unwrap();
        assert_eq!(t.node_count(), 15);
        for (flat, node) in t.nodes().enumerate() {
            assert_eq!(t.flat_index(node), Some(flat));
            assert_eq!(t.node_at(flat), node);
        }
        assert_eq!(t.flat_index(t.root()), Some(14));
        assert_eq!(t.flat_index(NodeId::new(5, 0)), None);
    }

    #[test]
    fn bad_leaf_order() {
        assert!(TreeTopology::with_leaf_order(4, vec![0, 1, 1, 3]).is_err());
        assert!(TreeTopology::with_leaf_order(4, vec![0, 1, 2]).is_err());
        assert!(TreeTopology::with_leaf_order(4, vec![3, 2, 1, 0]).is_ok());
    }

    #[test]
    fn children_of_root() {
        let t = TreeTopology::with_leaf_order(4, vec![2, 0, 1, 3]).unwrap();
        assert_eq!(t.children(0), [Err(2), Err(0)]);
        assert_eq!(t.children(2), [Ok(0), Ok(1)]);
    }
}
