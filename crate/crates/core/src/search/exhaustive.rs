use std::time::Instant;

use super::{Algorithm, Best, SearchContext, SearchResult};
use crate::error::Result;
use crate::lattice::LatticeBounds;

/// How often the deadline is polled, in nodes.
const DEADLINE_STRIDE: usize = 64;

/// Checks every node within `bounds` and keeps the cheapest feasible one.
pub fn exhaustive_search(ctx: &SearchContext<'_>, bounds: &LatticeBounds) -> Result<SearchResult> {
    let started = Instant::now();
    let mut best = Best::default();
    let mut evaluated = 0;
    let mut timed_out = false;
    for node in bounds.iter() {
        if evaluated % DEADLINE_STRIDE == 0 && ctx.expired() {
            timed_out = true;
            break;
        }
        evaluated += 1;
        if ctx.feasible_count(ctx.undersized_uncached(&node)) {
            best.offer(ctx.precision(&node), &node);
        }
    }
    SearchResult::finish(ctx, Algorithm::Exhaustive, best.into_node(), evaluated, started, timed_out)
}
