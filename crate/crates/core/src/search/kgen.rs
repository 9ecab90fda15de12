//! The KGen genetic algorithm and its operators.

use std::cmp::Ordering;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{compare_solutions, Algorithm, Best, GaParams, SearchContext, SearchResult, SelectionObjective};
use crate::error::Result;
use crate::lattice::{random_node, LatticeBounds, LatticeNode};

/// Penalty at which a chromosome can no longer be selected as a parent.
pub const MAX_PENALTY: u8 = 10;

#[derive(Debug, Clone, PartialEq)]
pub struct Chromosome {
    pub node: LatticeNode,
    /// Precision of `node`; lower is better.
    pub fitness: f64,
    pub feasible: bool,
    pub suppression_fraction: f64,
    /// Generations survived, capped at [`MAX_PENALTY`].
    pub penalty: u8,
    newcomer: bool,
}

impl Chromosome {
    pub fn evaluate(node: LatticeNode, ctx: &SearchContext<'_>) -> Self {
        let undersized = ctx.undersized(&node);
        Chromosome {
            fitness: ctx.precision(&node),
            feasible: ctx.feasible_count(undersized),
            suppression_fraction: undersized as f64 / ctx.n_rows() as f64,
            penalty: 0,
            newcomer: true,
            node,
        }
    }

    /// Chromosome with externally supplied fitness, treated as an existing
    /// population member.
    pub fn from_parts(node: LatticeNode, fitness: f64, feasible: bool, penalty: u8) -> Self {
        Chromosome {
            node,
            fitness,
            feasible,
            suppression_fraction: 0.0,
            penalty: penalty.min(MAX_PENALTY),
            newcomer: false,
        }
    }

    /// Selection weight factor `1 - penalty / 10`.
    pub fn penalty_weight(&self) -> f64 {
        1.0 - f64::from(self.penalty.min(MAX_PENALTY)) / f64::from(MAX_PENALTY)
    }

    fn selection_weight(&self, objective: SelectionObjective) -> f64 {
        let score = match objective {
            SelectionObjective::FitnessProportional => self.fitness,
            SelectionObjective::InverseFitness => 1.0 - self.fitness,
        };
        score * self.penalty_weight()
    }
}

/// Fitness-proportional parent selection weighted by survival penalty.
///
/// Falls back to a uniform draw when every weight is zero.
pub fn tournament_select<'p, R: Rng + ?Sized>(
    population: &'p [Chromosome],
    objective: SelectionObjective,
    rng: &mut R,
) -> &'p Chromosome {
    assert!(!population.is_empty(), "selection from an empty population");
    let total: f64 = population.iter().map(|c| c.selection_weight(objective)).sum();
    if total.is_nan() || total <= 0.0 {
        log::debug!("all selection weights are zero; choosing uniformly");
        return &population[rng.gen_range(0..population.len())];
    }
    let mut target = rng.gen::<f64>() * total;
    let mut last_positive = 0;
    for (i, c) in population.iter().enumerate() {
        let w = c.selection_weight(objective);
        if w <= 0.0 {
            continue;
        }
        last_positive = i;
        if target < w {
            return c;
        }
        target -= w;
    }
    &population[last_positive]
}

/// Uniform node in the component-wise box `[low, high]`.
fn random_in_box<R: Rng + ?Sized>(low: &LatticeNode, high: &LatticeNode, rng: &mut R) -> LatticeNode {
    LatticeNode::new(
        low.levels()
            .iter()
            .zip(high.levels())
            .map(|(&lo, &hi)| rng.gen_range(lo..=hi))
            .collect(),
    )
}

pub(crate) fn crossover_nodes<R: Rng + ?Sized>(
    a: &LatticeNode,
    b: &LatticeNode,
    ctx: &SearchContext<'_>,
    rng: &mut R,
) -> Vec<LatticeNode> {
    let max = a.join(b);
    let min = a.meet(b);
    match (ctx.is_k_anonymous(a), ctx.is_k_anonymous(b)) {
        (true, true) => {
            if ctx.is_k_anonymous(&min) {
                vec![min, max]
            } else {
                let first = random_in_box(&min, a, rng);
                let second = random_in_box(&min, b, rng);
                vec![first, second, max]
            }
        }
        (false, false) => vec![max],
        (true, false) => vec![random_in_box(&min, a, rng)],
        (false, true) => vec![random_in_box(&min, b, rng)],
    }
}

/// Min/max recombination. Parents are classified by k-anonymity without
/// suppression; offspring are evaluated under the run's threshold.
pub fn crossover<R: Rng + ?Sized>(
    parent_a: &Chromosome,
    parent_b: &Chromosome,
    ctx: &SearchContext<'_>,
    rng: &mut R,
) -> Vec<Chromosome> {
    crossover_nodes(&parent_a.node, &parent_b.node, ctx, rng)
        .into_iter()
        .map(|n| Chromosome::evaluate(n, ctx))
        .collect()
}

pub(crate) fn mutate_standard_node<R: Rng + ?Sized>(node: &LatticeNode, bounds: &LatticeBounds, rng: &mut R) -> LatticeNode {
    let mut out = node.clone();
    if node.is_empty() {
        return out;
    }
    let i = rng.gen_range(0..node.len());
    let lo = bounds.min_node().levels()[i];
    let hi = bounds.max_node().levels()[i];
    let current = node.levels()[i];
    if hi > lo {
        // Uniform over [lo, hi] without the current value.
        let mut pick = rng.gen_range(lo..hi);
        if pick >= current {
            pick += 1;
        }
        out.levels_mut()[i] = pick;
    }
    out
}

/// Replaces one gene with a different value from its range, moving the
/// solution along its strategy path.
pub fn mutate_standard<R: Rng + ?Sized>(
    chromosome: &Chromosome,
    ctx: &SearchContext<'_>,
    bounds: &LatticeBounds,
    rng: &mut R,
) -> Chromosome {
    Chromosome::evaluate(mutate_standard_node(&chromosome.node, bounds, rng), ctx)
}

pub(crate) fn mutate_horizontal_node<R: Rng + ?Sized>(
    node: &LatticeNode,
    bounds: &LatticeBounds,
    rng: &mut R,
    fraction: f64,
) -> LatticeNode {
    let n = node.len();
    let mut out = node.clone();
    if n == 0 {
        return out;
    }
    let count = ((fraction * n as f64 + 1e-9).floor() as usize).clamp(1, n);
    let mut indices: Vec<usize> = (0..n).collect();
    let (chosen, _) = indices.partial_shuffle(rng, count);
    for (turn, &i) in chosen.iter().enumerate() {
        let lo = bounds.min_node().levels()[i];
        let hi = bounds.max_node().levels()[i];
        let current = node.levels()[i];
        let rise_turn = turn % 2 == 0;
        out.levels_mut()[i] = match (rise_turn, current < hi, current > lo) {
            (true, true, _) | (false, true, false) => rng.gen_range(current + 1..=hi),
            (_, _, true) => rng.gen_range(lo..current),
            _ => current,
        };
    }
    out
}

/// Moves `floor(fraction * N)` (at least one) randomly chosen genes in alternating
/// directions (up, down, up, ...), switching to a different strategy path.
pub fn mutate_horizontal<R: Rng + ?Sized>(
    chromosome: &Chromosome,
    ctx: &SearchContext<'_>,
    bounds: &LatticeBounds,
    rng: &mut R,
    fraction: f64,
) -> Chromosome {
    Chromosome::evaluate(mutate_horizontal_node(&chromosome.node, bounds, rng, fraction), ctx)
}

fn survival_order(a: &Chromosome, b: &Chromosome) -> Ordering {
    b.feasible
        .cmp(&a.feasible)
        .then_with(|| compare_solutions((a.fitness, &a.node), (b.fitness, &b.node)))
}

/// Keeps the best `size` chromosomes (feasible first, then by precision) and
/// ages the survivors of the previous generation.
pub fn environmental_selection(mut merged: Vec<Chromosome>, size: usize) -> Vec<Chromosome> {
    merged.sort_by(survival_order);
    merged.truncate(size);
    for c in &mut merged {
        if !c.newcomer {
            c.penalty = (c.penalty + 1).min(MAX_PENALTY);
        }
        c.newcomer = false;
    }
    merged
}

pub fn kgen_search(ctx: &SearchContext<'_>, bounds: &LatticeBounds, params: &GaParams) -> Result<SearchResult> {
    params.validate()?;
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(params.rng_seed);

    let initial: Vec<Chromosome> = (0..params.population_size)
        .map(|_| Chromosome::evaluate(random_node(bounds, &mut rng), ctx))
        .collect();
    let mut population = environmental_selection(initial, params.population_size);
    let mut evaluations = params.population_size;
    let mut timed_out = false;

    while evaluations < params.max_evaluations {
        if ctx.expired() {
            timed_out = true;
            break;
        }
        let mut offspring_nodes = Vec::with_capacity(params.population_size * 3 / 2);
        for _ in (0..params.population_size).step_by(2) {
            let a = tournament_select(&population, params.selection_objective, &mut rng).node.clone();
            let b = tournament_select(&population, params.selection_objective, &mut rng).node.clone();
            let children = if rng.gen::<f64>() < params.crossover_rate {
                crossover_nodes(&a, &b, ctx, &mut rng)
            } else {
                vec![a, b]
            };
            for mut child in children {
                if rng.gen::<f64>() < params.mutation_rate {
                    child = mutate_standard_node(&child, bounds, &mut rng);
                }
                if rng.gen::<f64>() < params.horizontal_mutation_rate {
                    child = mutate_horizontal_node(&child, bounds, &mut rng, params.horizontal_fraction);
                }
                offspring_nodes.push(child);
            }
            evaluations += 2;
        }
        population.extend(offspring_nodes.into_iter().map(|n| Chromosome::evaluate(n, ctx)));
        population = environmental_selection(population, params.population_size);
    }

    let mut best = Best::default();
    for c in population.iter().filter(|c| c.feasible) {
        best.offer(c.fitness, &c.node);
    }
    let mut result = SearchResult::finish(ctx, Algorithm::Kgen, best.into_node(), evaluations, started, timed_out)?;
    result.final_population = population;
    Ok(result)
}
