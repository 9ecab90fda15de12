//! Lattice search strategies.
//!
//! All four algorithms share a [`SearchContext`]: the support maps, the
//! anonymity parameters and a per-run cache of k-anonymity verdicts. They
//! return the feasible node with the lowest precision they encountered.

mod exhaustive;
mod kgen;
mod ola;
mod random;

use std::cell::{Cell, RefCell};
use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::anonymity::{check_k_anonymity, suppression_budget, undersized_rows, AnonymityVerdict, SupportMap};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::hierarchy::GeneralizationHierarchy;
use crate::lattice::{node_height, preprocess, LatticeBounds, LatticeNode};
use crate::metrics::QualityReport;

pub use exhaustive::exhaustive_search;
pub use kgen::{
    crossover, environmental_selection, kgen_search, mutate_horizontal, mutate_standard, tournament_select,
    Chromosome, MAX_PENALTY,
};
pub use ola::ola_search;
pub use random::random_search;

/// Precision differences below this are ties.
const PRECISION_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Algorithm {
    Exhaustive,
    Ola,
    Kgen,
    Random,
}

impl Algorithm {
    pub const ALL: [Algorithm; 4] = [Algorithm::Exhaustive, Algorithm::Ola, Algorithm::Kgen, Algorithm::Random];

    /// Whether the algorithm always returns the optimum when it completes.
    pub fn is_exact(self) -> bool {
        matches!(self, Algorithm::Exhaustive | Algorithm::Ola)
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Algorithm::Exhaustive => "EXHAUSTIVE",
            Algorithm::Ola => "OLA",
            Algorithm::Kgen => "KGEN",
            Algorithm::Random => "RANDOM",
        })
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "EXHAUSTIVE" => Ok(Algorithm::Exhaustive),
            "OLA" => Ok(Algorithm::Ola),
            "KGEN" => Ok(Algorithm::Kgen),
            "RANDOM" => Ok(Algorithm::Random),
            _ => Err(Error::Usage(format!(
                "unknown algorithm {s:?} (expected EXHAUSTIVE, OLA, KGEN or RANDOM)"
            ))),
        }
    }
}

/// How parent-selection weights are derived from fitness.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectionObjective {
    /// Weight proportional to precision times the penalty factor.
    #[default]
    FitnessProportional,
    /// Weight proportional to `1 - precision` times the penalty factor.
    InverseFitness,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GaParams {
    pub max_evaluations: usize,
    pub population_size: usize,
    pub crossover_rate: f64,
    pub mutation_rate: f64,
    pub horizontal_mutation_rate: f64,
    /// Share of genes touched by a horizontal mutation.
    pub horizontal_fraction: f64,
    pub selection_objective: SelectionObjective,
    pub rng_seed: u64,
}

impl Default for GaParams {
    fn default() -> Self {
        GaParams {
            max_evaluations: 5000,
            population_size: 100,
            crossover_rate: 0.9,
            mutation_rate: 0.2,
            horizontal_mutation_rate: 0.4,
            horizontal_fraction: 0.5,
            selection_objective: SelectionObjective::FitnessProportional,
            rng_seed: 0,
        }
    }
}

impl GaParams {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.rng_seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        for (name, rate) in [
            ("crossover_rate", self.crossover_rate),
            ("mutation_rate", self.mutation_rate),
            ("horizontal_mutation_rate", self.horizontal_mutation_rate),
        ] {
            if !(0.0..=1.0).contains(&rate) {
                return Err(Error::Config(format!("{name} must lie in [0, 1], got {rate}")));
            }
        }
        if !(self.horizontal_fraction > 0.0 && self.horizontal_fraction <= 1.0) {
            return Err(Error::Config(format!(
                "horizontal_fraction must lie in (0, 1], got {}",
                self.horizontal_fraction
            )));
        }
        if self.population_size == 0 {
            return Err(Error::Config("population_size must be at least 1".into()));
        }
        Ok(())
    }
}

/// Shared state of one search run. Not thread-safe: one run, one context.
pub struct SearchContext<'a> {
    maps: &'a [SupportMap],
    heights: Vec<u32>,
    n_rows: usize,
    k: usize,
    threshold: f64,
    budget: usize,
    deadline: Option<Instant>,
    /// Node → number of rows in undersized classes.
    cache: RefCell<HashMap<LatticeNode, usize>>,
    checks: Cell<usize>,
}

impl<'a> SearchContext<'a> {
    pub fn new(maps: &'a [SupportMap], k: usize, suppression_threshold: f64) -> Result<Self> {
        if maps.is_empty() {
            return Err(Error::Contract("search needs at least one quasi-identifier".into()));
        }
        if k == 0 {
            return Err(Error::Contract("k must be positive".into()));
        }
        if !(0.0..=1.0).contains(&suppression_threshold) {
            return Err(Error::Contract(format!(
                "suppression threshold {suppression_threshold} outside [0, 1]"
            )));
        }
        let n_rows = maps[0].n_rows();
        Ok(SearchContext {
            maps,
            heights: maps.iter().map(SupportMap::height).collect(),
            n_rows,
            k,
            threshold: suppression_threshold,
            budget: suppression_budget(suppression_threshold, n_rows),
            deadline: None,
            cache: RefCell::new(HashMap::new()),
            checks: Cell::new(0),
        })
    }

    pub fn with_deadline(mut self, deadline: Option<Instant>) -> Self {
        self.deadline = deadline;
        self
    }

    pub fn maps(&self) -> &[SupportMap] {
        self.maps
    }

    pub fn heights(&self) -> &[u32] {
        &self.heights
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    /// Unreduced lattice over the context's hierarchies.
    pub fn full_bounds(&self) -> LatticeBounds {
        LatticeBounds::full(&self.heights)
    }

    /// Number of k-anonymity checks actually computed (cache misses).
    pub fn checks(&self) -> usize {
        self.checks.get()
    }

    pub fn expired(&self) -> bool {
        self.deadline.is_some_and(|d| Instant::now() >= d)
    }

    fn compute_undersized(&self, node: &LatticeNode) -> usize {
        self.checks.set(self.checks.get() + 1);
        undersized_rows(node, self.maps, self.n_rows, self.k).len()
    }

    /// Rows that would be suppressed at `node`, memoised.
    pub fn undersized(&self, node: &LatticeNode) -> usize {
        if let Some(&n) = self.cache.borrow().get(node) {
            return n;
        }
        let n = self.compute_undersized(node);
        self.cache.borrow_mut().insert(node.clone(), n);
        n
    }

    /// Like [`SearchContext::undersized`] but without touching the cache.
    pub fn undersized_uncached(&self, node: &LatticeNode) -> usize {
        if let Some(&n) = self.cache.borrow().get(node) {
            return n;
        }
        self.compute_undersized(node)
    }

    /// k-anonymous within the run's suppression budget.
    pub fn is_feasible(&self, node: &LatticeNode) -> bool {
        self.undersized(node) <= self.budget
    }

    /// k-anonymous with no suppression at all.
    pub fn is_k_anonymous(&self, node: &LatticeNode) -> bool {
        self.undersized(node) == 0
    }

    pub(crate) fn feasible_count(&self, undersized: usize) -> bool {
        undersized <= self.budget
    }

    pub fn precision(&self, node: &LatticeNode) -> f64 {
        node.levels()
            .iter()
            .zip(&self.heights)
            .map(|(&l, &h)| f64::from(l) / f64::from(h))
            .sum::<f64>()
            / self.heights.len() as f64
    }

    pub fn verdict(&self, node: &LatticeNode) -> AnonymityVerdict {
        check_k_anonymity(node, self.maps, self.k, self.threshold)
    }

    pub fn report(&self, node: &LatticeNode) -> Result<QualityReport> {
        let suppressed = self.undersized(node);
        QualityReport::new(node, &self.heights, suppressed as f64 / self.n_rows as f64)
    }
}

/// Total order on candidate solutions: precision, then node height, then
/// lexicographic levels.
pub fn compare_solutions(a: (f64, &LatticeNode), b: (f64, &LatticeNode)) -> Ordering {
    let by_precision = if (a.0 - b.0).abs() <= PRECISION_EPS {
        Ordering::Equal
    } else {
        a.0.total_cmp(&b.0)
    };
    by_precision
        .then_with(|| node_height(a.1).cmp(&node_height(b.1)))
        .then_with(|| a.1.cmp(b.1))
}

/// Running minimum over feasible nodes.
#[derive(Debug, Default)]
pub(crate) struct Best {
    node: Option<(f64, LatticeNode)>,
}

impl Best {
    pub(crate) fn offer(&mut self, precision: f64, node: &LatticeNode) {
        let replace = match &self.node {
            None => true,
            Some((p, n)) => compare_solutions((precision, node), (*p, n)) == Ordering::Less,
        };
        if replace {
            self.node = Some((precision, node.clone()));
        }
    }

    pub(crate) fn into_node(self) -> Option<LatticeNode> {
        self.node.map(|(_, n)| n)
    }
}

#[derive(Debug, Clone)]
pub struct SearchResult {
    pub algorithm: Algorithm,
    pub best: Option<LatticeNode>,
    pub best_report: Option<QualityReport>,
    pub evaluations_used: usize,
    pub wall_time: Duration,
    pub timed_out: bool,
    /// Final population, for the population-based algorithms.
    pub final_population: Vec<Chromosome>,
}

impl SearchResult {
    pub(crate) fn finish(
        ctx: &SearchContext<'_>,
        algorithm: Algorithm,
        best: Option<LatticeNode>,
        evaluations_used: usize,
        started: Instant,
        timed_out: bool,
    ) -> Result<Self> {
        let best_report = best.as_ref().map(|n| ctx.report(n)).transpose()?;
        Ok(SearchResult {
            algorithm,
            best,
            best_report,
            evaluations_used,
            wall_time: started.elapsed(),
            timed_out,
            final_population: Vec::new(),
        })
    }

    pub fn precision(&self) -> Option<f64> {
        self.best_report.as_ref().map(|r| r.precision)
    }
}

/// Search bounds for a run: the preprocessed lattice, unless suppression is
/// allowed and preprocessing is not trusted.
pub fn search_bounds(
    dataset: &Dataset,
    hierarchies: &[GeneralizationHierarchy],
    k: usize,
    suppression_threshold: f64,
    trust_preprocessing: bool,
) -> Result<LatticeBounds> {
    if suppression_threshold == 0.0 || trust_preprocessing {
        preprocess(dataset, hierarchies, k)
    } else {
        let heights: Vec<u32> = hierarchies.iter().map(GeneralizationHierarchy::height).collect();
        Ok(LatticeBounds::full(&heights))
    }
}

pub fn run_algorithm(
    algorithm: Algorithm,
    ctx: &SearchContext<'_>,
    bounds: &LatticeBounds,
    params: &GaParams,
) -> Result<SearchResult> {
    match algorithm {
        Algorithm::Exhaustive => exhaustive_search(ctx, bounds),
        Algorithm::Ola => ola_search(ctx, bounds),
        Algorithm::Kgen => kgen_search(ctx, bounds, params),
        Algorithm::Random => random_search(ctx, bounds, params),
    }
}
