//! Support maps, equivalence classes and k-anonymity checks with row
//! suppression.
//!
//! A [`SupportMap`] records, for one quasi-identifier, every value the column
//! takes at every generalization level together with the rows holding it.
//! The equivalence classes of a lattice node are the non-empty intersections
//! of one row set per attribute, picked at the node's level for that
//! attribute.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use crate::dataset::{mask, Config, Dataset, Role};
use crate::error::{Error, Result};
use crate::hierarchy::GeneralizationHierarchy;
use crate::lattice::LatticeNode;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SupportEntry {
    pub value: String,
    pub level: u32,
    /// Zero-based row indices, ascending.
    pub rows: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct SupportMap {
    attribute: String,
    height: u32,
    n_rows: usize,
    /// `levels[l]` lists the distinct level-`l` values in order of first
    /// appearance.
    levels: Vec<Vec<SupportEntry>>,
    /// `codes[l][row]` indexes into `levels[l]`.
    codes: Vec<Vec<u32>>,
}

impl SupportMap {
    pub fn attribute(&self) -> &str {
        &self.attribute
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn entries(&self) -> impl Iterator<Item = &SupportEntry> {
        self.levels.iter().flatten()
    }

    pub fn entries_at(&self, level: u32) -> &[SupportEntry] {
        &self.levels[level as usize]
    }

    pub fn entry(&self, level: u32, value: &str) -> Option<&SupportEntry> {
        self.levels.get(level as usize)?.iter().find(|e| e.value == value)
    }

    /// First entry holding `value` at any level, lowest level first.
    pub fn lookup(&self, value: &str) -> Option<&SupportEntry> {
        self.entries().find(|e| e.value == value)
    }

    pub(crate) fn codes(&self, level: u32) -> &[u32] {
        &self.codes[level as usize]
    }

    pub(crate) fn cardinality(&self, level: u32) -> usize {
        self.levels[level as usize].len()
    }
}

pub fn build_support_map(dataset: &Dataset, hierarchy: &GeneralizationHierarchy) -> Result<SupportMap> {
    let n = dataset.n_rows();
    let mut levels = Vec::with_capacity(hierarchy.height() as usize + 1);
    let mut codes = Vec::with_capacity(hierarchy.height() as usize + 1);
    for level in 0..=hierarchy.height() {
        let mut index: HashMap<String, u32> = HashMap::new();
        let mut entries: Vec<SupportEntry> = Vec::new();
        let mut row_codes = Vec::with_capacity(n);
        for (row, cell) in dataset.column(hierarchy.column()).enumerate() {
            let value = hierarchy.generalize_at(cell, level, Some(row))?;
            let code = *index.entry(value.clone()).or_insert_with(|| {
                entries.push(SupportEntry {
                    value,
                    level,
                    rows: Vec::new(),
                });
                entries.len() as u32 - 1
            });
            entries[code as usize].rows.push(row);
            row_codes.push(code);
        }
        levels.push(entries);
        codes.push(row_codes);
    }
    Ok(SupportMap {
        attribute: hierarchy.attribute().to_owned(),
        height: hierarchy.height(),
        n_rows: n,
        levels,
        codes,
    })
}

pub fn build_support_maps(dataset: &Dataset, hierarchies: &[GeneralizationHierarchy]) -> Result<Vec<SupportMap>> {
    hierarchies.iter().map(|h| build_support_map(dataset, h)).collect()
}

/// Row → class id for `node`, with the number of classes. Ids are assigned
/// in order of first appearance.
pub(crate) fn class_ids(node: &LatticeNode, maps: &[SupportMap], n_rows: usize) -> (Vec<u32>, usize) {
    if maps.is_empty() {
        return (vec![0; n_rows], usize::from(n_rows > 0));
    }
    let levels = node.levels();
    let mut order: Vec<usize> = (0..maps.len()).collect();
    order.sort_by_key(|&i| (maps[i].cardinality(levels[i]), i));

    let first = order[0];
    let mut ids: Vec<u32> = maps[first].codes(levels[first]).to_vec();
    let mut count = maps[first].cardinality(levels[first]);
    let mut table: HashMap<u64, u32> = HashMap::new();
    for &attr in &order[1..] {
        if count == n_rows {
            break;
        }
        let card = maps[attr].cardinality(levels[attr]);
        if card == 1 {
            continue;
        }
        let codes = maps[attr].codes(levels[attr]);
        table.clear();
        for (id, &code) in ids.iter_mut().zip(codes) {
            let key = u64::from(*id) * card as u64 + u64::from(code);
            let next = table.len() as u32;
            *id = *table.entry(key).or_insert(next);
        }
        count = table.len();
    }
    // Relabel so ids follow first appearance regardless of the attribute order.
    let mut relabel: HashMap<u32, u32> = HashMap::new();
    for id in &mut ids {
        let next = relabel.len() as u32;
        *id = *relabel.entry(*id).or_insert(next);
    }
    (ids, relabel.len())
}

/// Equivalence classes of `node` as ascending row lists, ordered by their
/// first row.
pub fn equivalence_classes(node: &LatticeNode, maps: &[SupportMap]) -> Vec<Vec<usize>> {
    let n_rows = maps.first().map_or(0, SupportMap::n_rows);
    let (ids, count) = class_ids(node, maps, n_rows);
    let mut classes = vec![Vec::new(); count];
    for (row, id) in ids.into_iter().enumerate() {
        classes[id as usize].push(row);
    }
    classes
}

/// Rows that must be suppressed at `node`: members of classes smaller than k.
pub(crate) fn undersized_rows(node: &LatticeNode, maps: &[SupportMap], n_rows: usize, k: usize) -> Vec<usize> {
    let (ids, count) = class_ids(node, maps, n_rows);
    let mut sizes = vec![0usize; count];
    for &id in &ids {
        sizes[id as usize] += 1;
    }
    ids.iter()
        .enumerate()
        .filter(|(_, &id)| sizes[id as usize] < k)
        .map(|(row, _)| row)
        .collect()
}

/// Number of rows that may be suppressed: `floor(threshold * n_rows)`.
pub fn suppression_budget(threshold: f64, n_rows: usize) -> usize {
    // The epsilon keeps products like 0.7 * 10 = 6.999... from losing a row.
    (threshold * n_rows as f64 + 1e-9).floor() as usize
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnonymityVerdict {
    pub feasible: bool,
    /// Sizes of all equivalence classes, in class order.
    pub classes: Vec<usize>,
    /// Rows in undersized classes. Reported even when infeasible.
    pub suppressed_rows: Vec<usize>,
}

pub fn check_k_anonymity(node: &LatticeNode, maps: &[SupportMap], k: usize, suppression_threshold: f64) -> AnonymityVerdict {
    let n_rows = maps.first().map_or(0, SupportMap::n_rows);
    let classes: Vec<usize> = equivalence_classes(node, maps).iter().map(Vec::len).collect();
    let suppressed_rows = undersized_rows(node, maps, n_rows, k);
    AnonymityVerdict {
        feasible: suppressed_rows.len() <= suppression_budget(suppression_threshold, n_rows),
        classes,
        suppressed_rows,
    }
}

/// Masks identifiers, generalizes quasi-identifiers to `node` and drops the
/// suppressed rows. Sensitive columns pass through.
pub fn apply_anonymization(
    dataset: &Dataset,
    config: &Config,
    hierarchies: &[GeneralizationHierarchy],
    node: &LatticeNode,
    verdict: &AnonymityVerdict,
) -> Result<Dataset> {
    if !verdict.feasible {
        return Err(Error::Contract("cannot anonymize with an infeasible verdict".into()));
    }
    if node.len() != hierarchies.len() {
        return Err(Error::Contract(format!(
            "node {node} has {} levels for {} quasi-identifiers",
            node.len(),
            hierarchies.len()
        )));
    }
    let identifiers: Vec<usize> = config
        .attributes
        .iter()
        .filter(|a| a.role == Role::Identifier)
        .filter_map(|a| dataset.column_index(&a.name))
        .collect();
    let mut dropped = vec![false; dataset.n_rows()];
    for &r in &verdict.suppressed_rows {
        dropped[r] = true;
    }
    let mut rows = Vec::with_capacity(dataset.n_rows() - verdict.suppressed_rows.len());
    for (r, row) in dataset.rows().iter().enumerate() {
        if dropped[r] {
            continue;
        }
        let mut out = row.clone();
        for &c in &identifiers {
            out[c] = mask(&out[c]);
        }
        for (h, &level) in hierarchies.iter().zip(node.levels()) {
            out[h.column()] = h.generalize_at(&row[h.column()], level, Some(r))?;
        }
        rows.push(out);
    }
    Dataset::new_allow_empty(dataset.attributes().to_vec(), rows)
}

/// Writes the per-attribute information-loss sidecar.
///
/// Columns: `attribute,level,height,precision,suppressed_rows,total_rows`,
/// one line per quasi-identifier.
pub fn write_metadata(
    path: impl AsRef<Path>,
    hierarchies: &[GeneralizationHierarchy],
    node: &LatticeNode,
    suppressed_rows: usize,
    total_rows: usize,
) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::from("attribute,level,height,precision,suppressed_rows,total_rows\n");
    for (h, &level) in hierarchies.iter().zip(node.levels()) {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            h.attribute(),
            level,
            h.height(),
            f64::from(level) / f64::from(h.height()),
            suppressed_rows,
            total_rows
        ));
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}
