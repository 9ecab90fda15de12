//! Optimal Lattice Anonymization.
//!
//! Each recursion step splits the sub-lattice `[bottom, top]` at its middle
//! height and probes every node there. A feasible probe bounds the search
//! from above (recurse into `[bottom, probe]`), an infeasible one from below
//! (recurse into `[probe, top]`). This amounts to a binary search along every
//! strategy path without materialising the paths. Verdicts propagate through
//! monotonicity: generalizing never enlarges the set of rows in undersized
//! classes, so a feasible node makes every node above it feasible and an
//! infeasible node makes every node below it infeasible.

use std::collections::BTreeSet;
use std::time::Instant;

use super::{Algorithm, Best, SearchContext, SearchResult};
use crate::error::Result;
use crate::lattice::{node_height, LatticeBounds, LatticeNode};

struct Ola<'c, 'a> {
    ctx: &'c SearchContext<'a>,
    /// Probed feasible nodes; anything above one of them is feasible.
    feasible: Vec<LatticeNode>,
    /// Probed infeasible nodes; anything below one of them is infeasible.
    infeasible: Vec<LatticeNode>,
    minimal: BTreeSet<LatticeNode>,
    probes: usize,
    timed_out: bool,
}

impl Ola<'_, '_> {
    fn tagged(&self, node: &LatticeNode) -> Option<bool> {
        if self.feasible.iter().any(|f| f.le(node)) {
            Some(true)
        } else if self.infeasible.iter().any(|i| node.le(i)) {
            Some(false)
        } else {
            None
        }
    }

    fn is_feasible(&mut self, node: &LatticeNode) -> bool {
        if let Some(known) = self.tagged(node) {
            return known;
        }
        self.probes += 1;
        let verdict = self.ctx.is_feasible(node);
        if verdict {
            self.feasible.retain(|f| !node.le(f));
            self.feasible.push(node.clone());
        } else {
            self.infeasible.retain(|i| !i.le(node));
            self.infeasible.push(node.clone());
        }
        verdict
    }

    fn k_min(&mut self, bottom: &LatticeNode, top: &LatticeNode) {
        if self.timed_out || self.ctx.expired() {
            self.timed_out = true;
            return;
        }
        let span = node_height(top) - node_height(bottom);
        if span > 1 {
            let middle = node_height(bottom) + span / 2;
            for node in nodes_at_height(bottom, top, middle) {
                if self.is_feasible(&node) {
                    self.k_min(bottom, &node);
                } else {
                    self.k_min(&node, top);
                }
                if self.timed_out {
                    return;
                }
            }
        } else {
            let candidate = if self.is_feasible(bottom) {
                bottom
            } else if self.is_feasible(top) {
                top
            } else {
                return;
            };
            self.minimal.insert(candidate.clone());
        }
    }
}

/// Nodes `n` with `bottom <= n <= top` and `node_height(n) == height`.
fn nodes_at_height(bottom: &LatticeNode, top: &LatticeNode, height: u32) -> Vec<LatticeNode> {
    fn fill(
        i: usize,
        remaining: u32,
        bottom: &[u32],
        top: &[u32],
        slack_after: &[u32],
        current: &mut Vec<u32>,
        out: &mut Vec<LatticeNode>,
    ) {
        if i == bottom.len() {
            if remaining == 0 {
                out.push(LatticeNode::new(current.clone()));
            }
            return;
        }
        let room = top[i] - bottom[i];
        let low = remaining.saturating_sub(slack_after[i]);
        let high = room.min(remaining);
        if low > high {
            return;
        }
        for step in low..=high {
            current.push(bottom[i] + step);
            fill(i + 1, remaining - step, bottom, top, slack_after, current, out);
            current.pop();
        }
    }

    let b = bottom.levels();
    let t = top.levels();
    // slack_after[i] = total room of components after i
    let mut slack_after = vec![0u32; b.len()];
    for i in (0..b.len().saturating_sub(1)).rev() {
        slack_after[i] = slack_after[i + 1] + (t[i + 1] - b[i + 1]);
    }
    let mut out = Vec::new();
    let target = height - node_height(bottom);
    fill(0, target, b, t, &slack_after, &mut Vec::with_capacity(b.len()), &mut out);
    out
}

/// Collects the k-minimal nodes of every strategy path and returns the one
/// with the lowest precision.
pub fn ola_search(ctx: &SearchContext<'_>, bounds: &LatticeBounds) -> Result<SearchResult> {
    let started = Instant::now();
    let mut ola = Ola {
        ctx,
        feasible: Vec::new(),
        infeasible: Vec::new(),
        minimal: BTreeSet::new(),
        probes: 0,
        timed_out: false,
    };
    ola.k_min(bounds.min_node(), bounds.max_node());
    let mut best = Best::default();
    for node in &ola.minimal {
        best.offer(ctx.precision(node), node);
    }
    let (probes, timed_out) = (ola.probes, ola.timed_out);
    SearchResult::finish(ctx, Algorithm::Ola, best.into_node(), probes, started, timed_out)
}
