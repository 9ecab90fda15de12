//! Lattice nodes, neighbourhoods and the per-column lattice reduction.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use rand::Rng;

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::hierarchy::GeneralizationHierarchy;

/// Per-quasi-identifier generalization levels, in schema order.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LatticeNode(Vec<u32>);

impl LatticeNode {
    pub fn new(levels: Vec<u32>) -> Self {
        LatticeNode(levels)
    }

    pub fn zeros(len: usize) -> Self {
        LatticeNode(vec![0; len])
    }

    pub fn levels(&self) -> &[u32] {
        &self.0
    }

    pub fn levels_mut(&mut self) -> &mut [u32] {
        &mut self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Component-wise `self <= other`.
    pub fn le(&self, other: &LatticeNode) -> bool {
        self.0.iter().zip(&other.0).all(|(a, b)| a <= b)
    }

    pub fn meet(&self, other: &LatticeNode) -> LatticeNode {
        LatticeNode(self.0.iter().zip(&other.0).map(|(a, b)| *a.min(b)).collect())
    }

    pub fn join(&self, other: &LatticeNode) -> LatticeNode {
        LatticeNode(self.0.iter().zip(&other.0).map(|(a, b)| *a.max(b)).collect())
    }
}

impl From<Vec<u32>> for LatticeNode {
    fn from(levels: Vec<u32>) -> Self {
        LatticeNode(levels)
    }
}

/// Dash-joined levels, e.g. `2-1-0`.
impl fmt::Display for LatticeNode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, level) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str("-")?;
            }
            write!(f, "{level}")?;
        }
        Ok(())
    }
}

impl FromStr for LatticeNode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.is_empty() {
            return Ok(LatticeNode(Vec::new()));
        }
        s.split('-')
            .map(|part| {
                part.parse::<u32>()
                    .map_err(|_| Error::Contract(format!("malformed lattice node {s:?}")))
            })
            .collect::<Result<Vec<_>>>()
            .map(LatticeNode)
    }
}

/// Sum of levels: the number of single steps from the all-zero node.
pub fn node_height(node: &LatticeNode) -> u32 {
    node.0.iter().sum()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LatticeBounds {
    min: LatticeNode,
    max: LatticeNode,
}

impl LatticeBounds {
    pub fn new(min: LatticeNode, max: LatticeNode) -> Result<Self> {
        if min.len() != max.len() || !min.le(&max) {
            return Err(Error::Contract(format!("invalid lattice bounds {min}..{max}")));
        }
        Ok(LatticeBounds { min, max })
    }

    /// The unreduced lattice from all zeros up to `heights`.
    pub fn full(heights: &[u32]) -> Self {
        LatticeBounds {
            min: LatticeNode::zeros(heights.len()),
            max: LatticeNode(heights.to_vec()),
        }
    }

    pub fn min_node(&self) -> &LatticeNode {
        &self.min
    }

    pub fn max_node(&self) -> &LatticeNode {
        &self.max
    }

    pub fn dims(&self) -> usize {
        self.min.len()
    }

    pub fn contains(&self, node: &LatticeNode) -> bool {
        node.len() == self.dims() && self.min.le(node) && node.le(&self.max)
    }

    /// Number of nodes, saturating at `u128::MAX`.
    pub fn size(&self) -> u128 {
        self.min
            .0
            .iter()
            .zip(&self.max.0)
            .fold(1u128, |acc, (lo, hi)| acc.saturating_mul(u128::from(hi - lo + 1)))
    }

    /// Height of the reduced lattice.
    pub fn height(&self) -> u32 {
        node_height(&self.max) - node_height(&self.min)
    }

    /// All nodes within the bounds, last component varying fastest.
    pub fn iter(&self) -> NodeIter<'_> {
        NodeIter {
            bounds: self,
            next: Some(self.min.clone()),
        }
    }

    /// Nodes one level above `node` in exactly one component.
    pub fn successors(&self, node: &LatticeNode) -> Vec<LatticeNode> {
        (0..node.len())
            .filter(|&i| node.0[i] < self.max.0[i])
            .map(|i| {
                let mut next = node.clone();
                next.0[i] += 1;
                next
            })
            .collect()
    }

    /// Nodes one level below `node` in exactly one component.
    pub fn predecessors(&self, node: &LatticeNode) -> Vec<LatticeNode> {
        (0..node.len())
            .filter(|&i| node.0[i] > self.min.0[i])
            .map(|i| {
                let mut next = node.clone();
                next.0[i] -= 1;
                next
            })
            .collect()
    }
}

pub struct NodeIter<'a> {
    bounds: &'a LatticeBounds,
    next: Option<LatticeNode>,
}

impl Iterator for NodeIter<'_> {
    type Item = LatticeNode;

    fn next(&mut self) -> Option<LatticeNode> {
        let current = self.next.take()?;
        let mut following = current.clone();
        let mut i = following.len();
        loop {
            if i == 0 {
                break;
            }
            i -= 1;
            if following.0[i] < self.bounds.max.0[i] {
                following.0[i] += 1;
                self.next = Some(following);
                break;
            }
            following.0[i] = self.bounds.min.0[i];
        }
        Some(current)
    }
}

/// Smallest level at which `column` alone is k-anonymous without suppression,
/// or the hierarchy height when no level is.
pub fn column_min_level(dataset: &Dataset, hierarchy: &GeneralizationHierarchy, k: usize) -> Result<u32> {
    for level in 0..=hierarchy.height() {
        let mut counts: HashMap<String, usize> = HashMap::new();
        for (row, cell) in dataset.column(hierarchy.column()).enumerate() {
            *counts.entry(hierarchy.generalize_at(cell, level, Some(row))?).or_default() += 1;
        }
        if counts.values().all(|&c| c >= k) {
            return Ok(level);
        }
    }
    Ok(hierarchy.height())
}

/// Lattice reduction: each quasi-identifier is checked on its own and the
/// lowest level at which it is k-anonymous becomes the new floor.
///
/// Sound only without suppression: a node below the floor can still be
/// feasible once rows may be dropped.
pub fn preprocess(dataset: &Dataset, hierarchies: &[GeneralizationHierarchy], k: usize) -> Result<LatticeBounds> {
    let min = hierarchies
        .iter()
        .map(|h| column_min_level(dataset, h, k))
        .collect::<Result<Vec<_>>>()?;
    let max = hierarchies.iter().map(GeneralizationHierarchy::height).collect();
    LatticeBounds::new(LatticeNode(min), LatticeNode(max))
}

/// Uniform node within `bounds`.
pub fn random_node<R: Rng + ?Sized>(bounds: &LatticeBounds, rng: &mut R) -> LatticeNode {
    LatticeNode(
        bounds
            .min
            .0
            .iter()
            .zip(&bounds.max.0)
            .map(|(&lo, &hi)| rng.gen_range(lo..=hi))
            .collect(),
    )
}
