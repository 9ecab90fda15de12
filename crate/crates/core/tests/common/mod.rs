//! Fixtures, instance generators and brute-force oracles shared by the
//! integration tests. The oracles recompute everything from raw cells
//! without support maps so they can check the library independently.
#![allow(dead_code)]

use std::collections::HashMap;
use std::path::PathBuf;

use kgen::{
    build_hierarchies, AttributeConfig, Config, DataType, Dataset, GeneralizationHierarchy, LatticeBounds,
    LatticeNode, Role,
};
use rand::Rng;

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn dataset(header: &[&str], rows: &[&[&str]]) -> Dataset {
    Dataset::new(
        header.iter().map(|s| s.to_string()).collect(),
        rows.iter().map(|r| r.iter().map(|s| s.to_string()).collect()).collect(),
    )
    .unwrap()
}

/// The four-row running example: Name, Age, Gender, Postcode, Crime.
pub fn table1() -> (Dataset, Config) {
    let ds = dataset(
        &["Name", "Age", "Gender", "Postcode", "Crime"],
        &[
            &["Alice", "24", "F", "80015", "Assault"],
            &["Max", "28", "M", "80019", "Kidnapping"],
            &["Laurel", "42", "F", "85073", "Homicide"],
            &["Frank", "49", "M", "85071", "Rape"],
        ],
    );
    let config = Config::new(
        vec![
            AttributeConfig::new("Name", Role::Identifier, DataType::String),
            AttributeConfig::new("Age", Role::QuasiIdentifier, DataType::Number).with_widths(vec![5, 10, 50, 100]),
            AttributeConfig::new("Gender", Role::QuasiIdentifier, DataType::String),
            AttributeConfig::new("Postcode", Role::QuasiIdentifier, DataType::String),
            AttributeConfig::new("Crime", Role::Sensitive, DataType::String),
        ],
        2,
    );
    (ds, config)
}

fn age_postcode_gender(rows: &[&[&str]]) -> (Dataset, Config) {
    let ds = dataset(&["Age", "Postcode", "Gender"], rows);
    let config = Config::new(
        vec![
            AttributeConfig::new("Age", Role::QuasiIdentifier, DataType::Number),
            AttributeConfig::new("Postcode", Role::QuasiIdentifier, DataType::String),
            AttributeConfig::new("Gender", Role::QuasiIdentifier, DataType::String),
        ],
        2,
    );
    (ds, config)
}

/// The lattice-reduction example: QIs ordered Age, Postcode, Gender.
pub fn reduction_example() -> (Dataset, Config) {
    age_postcode_gender(&[
        &["24", "80015", "F"],
        &["28", "80019", "M"],
        &["42", "85073", "F"],
        &["49", "85071", "M"],
    ])
}

/// The three-row example used to show preprocessing unsound under suppression.
pub fn suppression_example() -> (Dataset, Config) {
    age_postcode_gender(&[&["24", "80015", "F"], &["28", "80019", "M"], &["42", "85073", "F"]])
}

/// Random small instance: `rows` rows, `qis` quasi-identifiers, heights in 1..=4.
pub fn random_instance<R: Rng>(rng: &mut R, rows: usize, qis: usize, k: usize) -> (Dataset, Config) {
    const WIDTHS: [&[u64]; 3] = [&[10], &[5, 10], &[2, 10, 20]];
    let mut attributes = Vec::new();
    let mut columns: Vec<Vec<String>> = Vec::new();
    for q in 0..qis {
        let name = format!("q{q}");
        if rng.gen_bool(0.5) {
            let widths = WIDTHS[rng.gen_range(0..WIDTHS.len())].to_vec();
            let span = rng.gen_range(2..=40u32);
            columns.push((0..rows).map(|_| rng.gen_range(0..span).to_string()).collect());
            attributes.push(AttributeConfig::new(name, Role::QuasiIdentifier, DataType::Number).with_widths(widths));
        } else {
            let len = rng.gen_range(1..=4);
            let alphabet = rng.gen_range(2..=3u8);
            columns.push(
                (0..rows)
                    .map(|_| (0..len).map(|_| char::from(b'a' + rng.gen_range(0..alphabet))).collect())
                    .collect(),
            );
            attributes.push(AttributeConfig::new(name, Role::QuasiIdentifier, DataType::String));
        }
    }
    let header = attributes.iter().map(|a| a.name.clone()).collect();
    let data = (0..rows).map(|r| columns.iter().map(|c| c[r].clone()).collect()).collect();
    (Dataset::new(header, data).unwrap(), Config::new(attributes, k))
}

pub fn hierarchies(ds: &Dataset, config: &Config) -> Vec<GeneralizationHierarchy> {
    build_hierarchies(ds, config).unwrap()
}

pub fn heights(hs: &[GeneralizationHierarchy]) -> Vec<u32> {
    hs.iter().map(GeneralizationHierarchy::height).collect()
}

/// Generalized QI tuple of every row.
pub fn project(ds: &Dataset, hs: &[GeneralizationHierarchy], node: &LatticeNode) -> Vec<Vec<String>> {
    (0..ds.n_rows())
        .map(|r| {
            hs.iter()
                .zip(node.levels())
                .map(|(h, &l)| h.generalize_value(ds.cell(r, h.column()), l).unwrap())
                .collect()
        })
        .collect()
}

/// Rows whose generalized tuple occurs fewer than `k` times, by duplicate counting.
pub fn oracle_undersized(ds: &Dataset, hs: &[GeneralizationHierarchy], node: &LatticeNode, k: usize) -> usize {
    let tuples = project(ds, hs, node);
    let mut counts: HashMap<&Vec<String>, usize> = HashMap::new();
    for t in &tuples {
        *counts.entry(t).or_default() += 1;
    }
    tuples.iter().filter(|t| counts[t] < k).count()
}

pub fn oracle_feasible(ds: &Dataset, hs: &[GeneralizationHierarchy], node: &LatticeNode, k: usize, threshold: f64) -> bool {
    oracle_undersized(ds, hs, node, k) as f64 <= threshold * ds.n_rows() as f64 + 1e-9
}

pub fn oracle_precision(node: &LatticeNode, heights: &[u32]) -> f64 {
    node.levels().iter().zip(heights).map(|(&l, &h)| f64::from(l) / f64::from(h)).sum::<f64>() / heights.len() as f64
}

/// Lowest precision over every feasible node of the full lattice.
pub fn oracle_optimum(ds: &Dataset, hs: &[GeneralizationHierarchy], k: usize, threshold: f64) -> Option<f64> {
    let hts = heights(hs);
    LatticeBounds::full(&hts)
        .iter()
        .filter(|n| oracle_feasible(ds, hs, n, k, threshold))
        .map(|n| oracle_precision(&n, &hts))
        .min_by(f64::total_cmp)
}
