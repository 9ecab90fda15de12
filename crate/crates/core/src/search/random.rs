use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{Algorithm, Best, GaParams, SearchContext, SearchResult};
use crate::error::Result;
use crate::lattice::{random_node, LatticeBounds};

/// Samples `max_evaluations` nodes uniformly and keeps the cheapest feasible
/// one.
pub fn random_search(ctx: &SearchContext<'_>, bounds: &LatticeBounds, params: &GaParams) -> Result<SearchResult> {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(params.rng_seed);
    let mut best = Best::default();
    let mut evaluated = 0;
    let mut timed_out = false;
    while evaluated < params.max_evaluations {
        if ctx.expired() {
            timed_out = true;
            break;
        }
        let node = random_node(bounds, &mut rng);
        evaluated += 1;
        if ctx.is_feasible(&node) {
            best.offer(ctx.precision(&node), &node);
        }
    }
    SearchResult::finish(ctx, Algorithm::Random, best.into_node(), evaluated, started, timed_out)
}
