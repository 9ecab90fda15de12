//! Information-loss and accuracy metrics.

use crate::anonymity::AnonymityVerdict;
use crate::error::{Error, Result};
use crate::lattice::{node_height, LatticeNode};

/// Precision of a node, its per-attribute terms and its suppression level.
#[derive(Debug, Clone, PartialEq)]
pub struct QualityReport {
    pub precision: f64,
    pub per_attribute_precision: Vec<f64>,
    pub suppression_fraction: f64,
    pub node: LatticeNode,
}

impl QualityReport {
    pub fn new(node: &LatticeNode, heights: &[u32], suppression_fraction: f64) -> Result<Self> {
        let terms = precision_terms(node, heights)?;
        Ok(QualityReport {
            precision: terms.iter().sum::<f64>() / terms.len() as f64,
            per_attribute_precision: terms,
            suppression_fraction,
            node: node.clone(),
        })
    }
}

fn precision_terms(node: &LatticeNode, heights: &[u32]) -> Result<Vec<f64>> {
    if heights.is_empty() {
        return Err(Error::Contract("precision needs at least one quasi-identifier".into()));
    }
    if node.len() != heights.len() {
        return Err(Error::Contract(format!(
            "node {node} does not match {} hierarchy heights",
            heights.len()
        )));
    }
    node.levels()
        .iter()
        .zip(heights)
        .map(|(&level, &height)| {
            if level > height || height == 0 {
                Err(Error::Contract(format!("level {level} outside height {height}")))
            } else {
                Ok(f64::from(level) / f64::from(height))
            }
        })
        .collect()
}

/// Mean over attributes of `level / height`.
pub fn precision(node: &LatticeNode, heights: &[u32]) -> Result<f64> {
    let terms = precision_terms(node, heights)?;
    Ok(terms.iter().sum::<f64>() / terms.len() as f64)
}

/// Fraction of rows removed by a verdict.
pub fn suppression_level(verdict: &AnonymityVerdict, n_rows: usize) -> f64 {
    if n_rows == 0 {
        return 0.0;
    }
    verdict.suppressed_rows.len() as f64 / n_rows as f64
}

#[derive(Debug, Clone, PartialEq)]
pub struct AccuracyReport {
    pub per_solution: Vec<f64>,
    pub overall: f64,
}

/// Height distance of each solution from the optimum, normalised by the
/// optimum-to-worst distance, and their weighted mean.
///
/// Terms are clamped at 0: a solution below the optimum's height can sit
/// further from it than the worst node does.
pub fn accuracy(
    solutions: &[LatticeNode],
    optimal: &LatticeNode,
    worst: &LatticeNode,
    weights: &[f64],
) -> Result<AccuracyReport> {
    if solutions.len() != weights.len() {
        return Err(Error::Contract(format!(
            "{} solutions but {} weights",
            solutions.len(),
            weights.len()
        )));
    }
    if solutions.is_empty() {
        return Err(Error::Contract("accuracy needs at least one solution".into()));
    }
    if weights.iter().any(|w| w.is_nan() || *w <= 0.0) {
        return Err(Error::Contract("accuracy weights must be positive".into()));
    }
    let opt = f64::from(node_height(optimal));
    let worst_h = node_height(worst);
    let span = f64::from(worst_h) - opt;
    let per_solution: Vec<f64> = if span > 0.0 {
        solutions
            .iter()
            .map(|s| (1.0 - (f64::from(node_height(s)) - opt).abs() / span).clamp(0.0, 1.0))
            .collect()
    } else if solutions.iter().all(|s| f64::from(node_height(s)) == opt) {
        vec![1.0; solutions.len()]
    } else {
        return Err(Error::DegenerateAccuracy(worst_h));
    };
    let total: f64 = weights.iter().sum();
    let overall = per_solution.iter().zip(weights).map(|(a, w)| a * w).sum::<f64>() / total;
    Ok(AccuracyReport { per_solution, overall })
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    fn node(levels: &[u32]) -> LatticeNode {
        LatticeNode::new(levels.to_vec())
    }

    #[test]
    fn worked_precision_values() {
        let heights = [3, 4, 1];
        assert!(close(precision(&node(&[1, 0, 0]), &heights).unwrap(), 1.0 / 9.0, 1e-12));
        assert!(close(precision(&node(&[0, 0, 1]), &heights).unwrap(), 1.0 / 3.0, 1e-12));
        assert_eq!(precision(&node(&[3, 4, 1]), &heights).unwrap(), 1.0);
    }

    #[test]
    fn precision_needs_quasi_identifiers() {
        assert!(matches!(precision(&node(&[]), &[]), Err(Error::Contract(_))));
    }

    #[test]
    fn report_mean_matches_terms() {
        let r = QualityReport::new(&node(&[2, 1, 0]), &[4, 5, 1], 0.0).unwrap();
        assert_eq!(r.per_attribute_precision, vec![0.5, 0.2, 0.0]);
        assert!(close(r.precision, 0.7 / 3.0, 1e-12));
    }

    #[test]
    fn accuracy_endpoints_and_midpoint() {
        let opt = node(&[1, 1, 1]);
        let worst = node(&[3, 4, 1]);
        let mid = node(&[2, 2, 1]);
        let r = accuracy(&[opt.clone(), worst.clone(), mid], &opt, &worst, &[1.0, 1.0, 1.0]).unwrap();
        assert_eq!(r.per_solution[0], 1.0);
        assert_eq!(r.per_solution[1], 0.0);
        assert!(close(r.per_solution[2], 0.6, 1e-12));
        assert!(close(r.overall, 1.6 / 3.0, 1e-12));
    }

    #[test]
    fn degenerate_accuracy() {
        let n = node(&[1, 1]);
        assert_eq!(accuracy(std::slice::from_ref(&n), &n, &n, &[1.0]).unwrap().overall, 1.0);
        assert!(matches!(
            accuracy(&[node(&[2, 1])], &n, &node(&[0, 2]), &[1.0]),
            Err(Error::DegenerateAccuracy(2))
        ));
    }

    #[test]
    fn suppression_fraction() {
        let v = AnonymityVerdict {
            feasible: true,
            classes: vec![1, 1, 1],
            suppressed_rows: vec![1, 2],
        };
        assert!(close(suppression_level(&v, 3), 2.0 / 3.0, 1e-12));
        let none = AnonymityVerdict {
            feasible: true,
            classes: vec![1599],
            suppressed_rows: vec![],
        };
        assert_eq!(suppression_level(&none, 1599), 0.0);
    }

    proptest! {
        #[test]
        fn precision_increases_along_successors(levels in proptest::collection::vec(0u32..4, 1..6), pick in 0usize..6) {
            let heights = vec![4u32; levels.len()];
            let i = pick % levels.len();
            let a = node(&levels);
            let mut up = levels.clone();
            up[i] += 1;
            prop_assert!(precision(&node(&up), &heights).unwrap() > precision(&a, &heights).unwrap());
        }

        #[test]
        fn accuracy_is_translation_invariant(opt in 0u32..5, extra in 1u32..6, sol in 0u32..10, shift in 1u32..5) {
            let worst = opt + extra;
            let sol = sol.min(worst);
            let base = accuracy(&[node(&[sol])], &node(&[opt]), &node(&[worst]), &[1.0]).unwrap();
            let moved = accuracy(&[node(&[sol + shift])], &node(&[opt + shift]), &node(&[worst + shift]), &[1.0]).unwrap();
            prop_assert!((base.overall - moved.overall).abs() < 1e-12);
        }

        #[test]
        fn equal_weights_give_arithmetic_mean(sols in proptest::collection::vec(0u32..9, 1..8)) {
            let nodes: Vec<_> = sols.iter().map(|&s| node(&[s])).collect();
            let r = accuracy(&nodes, &node(&[2]), &node(&[9]), &vec![1.0; nodes.len()]).unwrap();
            let mean = r.per_solution.iter().sum::<f64>() / nodes.len() as f64;
            prop_assert!((r.overall - mean).abs() < 1e-12);
            let lo = r.per_solution.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = r.per_solution.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            prop_assert!(lo - 1e-12 <= r.overall && r.overall <= hi + 1e-12);
        }
    }
}
