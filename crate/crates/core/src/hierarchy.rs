//! Per-attribute generalization ladders.
//!
//! Level 0 is always the raw value and level `height` is total suppression.
//! The intermediate levels depend on the datatype:
//!
//! | datatype | level l (0 < l < height)                               |
//! |----------|--------------------------------------------------------|
//! | NUMBER   | bucket `a-b` of width `widths[l-1]`                    |
//! | STRING   | last `l` characters replaced with `*`                  |
//! | DATE     | `MM/yyyy`, then `yyyy`                                 |
//! | PLACE    | region, then country                                   |

use crate::dataset::{parse_date, Config, DataType, Dataset, PlaceTables, Role};
use crate::error::{Error, Result};

/// First widths of the default NUMBER ladder; later ones alternate ×2 / ×5.
const BASE_WIDTH: u64 = 5;
const MAX_LADDER: usize = 36;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Ladder {
    Number { widths: Vec<u64> },
    String,
    Date,
    Place(PlaceTables),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GeneralizationHierarchy {
    attribute: String,
    column: usize,
    height: u32,
    ladder: Ladder,
}

impl GeneralizationHierarchy {
    /// NUMBER ladder over explicit widths; height is `widths.len() + 1`.
    pub fn number(attribute: impl Into<String>, column: usize, widths: Vec<u64>) -> Result<Self> {
        let attribute = attribute.into();
        validate_widths(&attribute, &widths)?;
        Ok(GeneralizationHierarchy {
            attribute,
            column,
            height: widths.len() as u32 + 1,
            ladder: Ladder::Number { widths },
        })
    }

    /// STRING ladder masking up to `max_len` trailing characters.
    pub fn string(attribute: impl Into<String>, column: usize, max_len: usize) -> Self {
        GeneralizationHierarchy {
            attribute: attribute.into(),
            column,
            height: max_len.max(1) as u32,
            ladder: Ladder::String,
        }
    }

    pub fn date(attribute: impl Into<String>, column: usize) -> Self {
        GeneralizationHierarchy {
            attribute: attribute.into(),
            column,
            height: 3,
            ladder: Ladder::Date,
        }
    }

    pub fn place(attribute: impl Into<String>, column: usize, tables: PlaceTables) -> Self {
        GeneralizationHierarchy {
            attribute: attribute.into(),
            column,
            height: 3,
            ladder: Ladder::Place(tables),
        }
    }

    pub fn attribute(&self) -> &str {
        &self.attribute
    }

    /// Column index in the source dataset.
    pub fn column(&self) -> usize {
        self.column
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn ladder(&self) -> &Ladder {
        &self.ladder
    }

    pub fn datatype(&self) -> DataType {
        match self.ladder {
            Ladder::Number { .. } => DataType::Number,
            Ladder::String => DataType::String,
            Ladder::Date => DataType::Date,
            Ladder::Place(_) => DataType::Place,
        }
    }

    /// The fully suppressed symbol shared by every value at `height`.
    pub fn top_symbol(&self) -> String {
        match self.ladder {
            Ladder::String => "*".repeat(self.height as usize),
            _ => "*".to_owned(),
        }
    }

    pub fn generalize_value(&self, value: &str, level: u32) -> Result<String> {
        self.generalize_at(value, level, None)
    }

    pub(crate) fn generalize_at(&self, value: &str, level: u32, row: Option<usize>) -> Result<String> {
        if level > self.height {
            return Err(Error::Contract(format!(
                "level {level} exceeds height {} of {}",
                self.height, self.attribute
            )));
        }
        if level == 0 {
            return Ok(value.to_owned());
        }
        if level == self.height {
            // Still validate the input so that bad cells surface at any level.
            if !matches!(self.ladder, Ladder::String) {
                self.generalize_inner(value, 1, row)?;
            }
            return Ok(self.top_symbol());
        }
        self.generalize_inner(value, level, row)
    }

    fn generalize_inner(&self, value: &str, level: u32, row: Option<usize>) -> Result<String> {
        let fail = |reason: &str| Error::Value {
            attribute: self.attribute.clone(),
            row,
            value: value.to_owned(),
            reason: reason.to_owned(),
        };
        match &self.ladder {
            Ladder::Number { widths } => {
                let n = value
                    .trim()
                    .parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| fail("not a number"))?;
                let width = widths[level as usize - 1];
                let low = (n / width as f64).floor() as i64 * width as i64;
                Ok(format!("{}-{}", low, low + width as i64 - 1))
            }
            Ladder::String => {
                let chars: Vec<char> = value.chars().collect();
                let keep = chars.len().saturating_sub(level as usize);
                let mut out: String = chars[..keep].iter().collect();
                out.extend(std::iter::repeat_n('*', chars.len() - keep));
                Ok(out)
            }
            Ladder::Date => {
                let date = parse_date(value).ok_or_else(|| fail("not a dd/MM/yyyy date"))?;
                Ok(match level {
                    1 => date.format("%m/%Y").to_string(),
                    _ => date.format("%Y").to_string(),
                })
            }
            Ladder::Place(tables) => {
                let region = tables.city_to_region.get(value).ok_or_else(|| Error::PlaceLookup {
                    attribute: self.attribute.clone(),
                    value: value.to_owned(),
                    table: "city-to-region",
                })?;
                if level == 1 {
                    return Ok(region.clone());
                }
                tables
                    .region_to_country
                    .get(region)
                    .cloned()
                    .ok_or_else(|| Error::PlaceLookup {
                        attribute: self.attribute.clone(),
                        value: region.clone(),
                        table: "region-to-country",
                    })
            }
        }
    }
}

fn validate_widths(attribute: &str, widths: &[u64]) -> Result<()> {
    if widths.is_empty() {
        return Err(Error::Config(format!("{attribute}: NUMBER widths must not be empty")));
    }
    if widths[0] == 0 {
        return Err(Error::Config(format!("{attribute}: NUMBER widths must be positive")));
    }
    for pair in widths.windows(2) {
        if pair[1] <= pair[0] || pair[1] % pair[0] != 0 {
            return Err(Error::Config(format!(
                "{attribute}: NUMBER widths must strictly increase and each divide the next, got {widths:?}"
            )));
        }
    }
    Ok(())
}

/// Default NUMBER ladder: 5, 10, 50, 100, 500, ... until a single bucket
/// holds every value in `[min, max]`.
pub fn default_widths(min: f64, max: f64) -> Vec<u64> {
    let mut widths = vec![BASE_WIDTH];
    let mut factor_two = true;
    loop {
        let w = *widths.last().unwrap() as f64;
        if (min / w).floor() == (max / w).floor() || widths.len() >= MAX_LADDER {
            return widths;
        }
        let next = widths.last().unwrap() * if factor_two { 2 } else { 5 };
        factor_two = !factor_two;
        widths.push(next);
    }
}

/// One hierarchy per quasi-identifier, in config order. Every QI cell is
/// checked against its ladder so malformed values fail here.
pub fn build_hierarchies(dataset: &Dataset, config: &Config) -> Result<Vec<GeneralizationHierarchy>> {
    config
        .attributes
        .iter()
        .filter(|a| a.role == Role::QuasiIdentifier)
        .map(|attr| {
            let column = dataset
                .column_index(&attr.name)
                .ok_or_else(|| Error::Config(format!("attribute {} is not a dataset column", attr.name)))?;
            let hierarchy = match attr.datatype {
                DataType::Number => {
                    let widths = match &attr.widths {
                        Some(w) => w.clone(),
                        None => {
                            let mut min = f64::INFINITY;
                            let mut max = f64::NEG_INFINITY;
                            for (row, cell) in dataset.column(column).enumerate() {
                                let v = cell.trim().parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(
                                    || Error::Value {
                                        attribute: attr.name.clone(),
                                        row: Some(row),
                                        value: cell.to_owned(),
                                        reason: "not a number".into(),
                                    },
                                )?;
                                min = min.min(v);
                                max = max.max(v);
                            }
                            default_widths(min, max)
                        }
                    };
                    GeneralizationHierarchy::number(&attr.name, column, widths)?
                }
                DataType::String => {
                    let max_len = dataset.column(column).map(|c| c.chars().count()).max().unwrap_or(0);
                    GeneralizationHierarchy::string(&attr.name, column, max_len)
                }
                DataType::Date => GeneralizationHierarchy::date(&attr.name, column),
                DataType::Place => {
                    let tables = attr.places.clone().ok_or_else(|| {
                        Error::Config(format!("PLACE attribute {} has no mapping tables", attr.name))
                    })?;
                    GeneralizationHierarchy::place(&attr.name, column, tables)
                }
            };
            for (row, cell) in dataset.column(column).enumerate() {
                hierarchy.generalize_at(cell, hierarchy.height() - 1, Some(row))?;
            }
            Ok(hierarchy)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;
    use crate::dataset::{AttributeConfig, Config};

    fn age() -> GeneralizationHierarchy {
        GeneralizationHierarchy::number("Age", 0, vec![5, 10, 50, 100]).unwrap()
    }

    fn table_one() -> (Dataset, Config) {
        let ds = Dataset::new(
            ["Name", "Age", "Gender", "Postcode", "Crime"].map(String::from).to_vec(),
            vec![
                ["Alice", "24", "F", "80015", "Assault"].map(String::from).to_vec(),
                ["Max", "28", "M", "80019", "Kidnapping"].map(String::from).to_vec(),
                ["Laurel", "42", "F", "85073", "Homicide"].map(String::from).to_vec(),
                ["Frank", "49", "M", "85071", "Rape"].map(String::from).to_vec(),
            ],
        )
        .unwrap();
        let cfg = Config::new(
            vec![
                AttributeConfig::new("Name", Role::Identifier, DataType::String),
                AttributeConfig::new("Age", Role::QuasiIdentifier, DataType::Number),
                AttributeConfig::new("Gender", Role::QuasiIdentifier, DataType::String),
                AttributeConfig::new("Postcode", Role::QuasiIdentifier, DataType::String),
                AttributeConfig::new("Crime", Role::Sensitive, DataType::String),
            ],
            2,
        );
        (ds, cfg)
    }

    #[test]
    fn number_ranges_match_support_map_values() {
        let h = age();
        assert_eq!(h.generalize_value("24", 1).unwrap(), "20-24");
        assert_eq!(h.generalize_value("24", 2).unwrap(), "20-29");
        assert_eq!(h.generalize_value("24", 3).unwrap(), "0-49");
        assert_eq!(h.generalize_value("24", 4).unwrap(), "0-99");
        assert_eq!(h.generalize_value("24", 5).unwrap(), "*");
        assert_eq!(h.generalize_value("24", 0).unwrap(), "24");
        assert_eq!(h.generalize_value("-3", 1).unwrap(), "-5--1");
    }

    #[test]
    fn string_masks_trailing_characters() {
        let h = GeneralizationHierarchy::string("Postcode", 0, 5);
        assert_eq!(h.generalize_value("80015", 1).unwrap(), "8001*");
        assert_eq!(h.generalize_value("80015", 4).unwrap(), "8****");
        assert_eq!(h.generalize_value("80015", 5).unwrap(), "*****");
        assert_eq!(h.generalize_value("ab", 5).unwrap(), "*****");
        assert_eq!(h.generalize_value("ab", 3).unwrap(), "**");
    }

    #[test]
    fn date_ladder() {
        let h = GeneralizationHierarchy::date("Birth", 0);
        assert_eq!(h.generalize_value("01/01/1970", 1).unwrap(), "01/1970");
        assert_eq!(h.generalize_value("01/01/1970", 2).unwrap(), "1970");
        assert_eq!(h.generalize_value("01/01/1970", 3).unwrap(), "*");
        assert!(matches!(
            h.generalize_value("1970-01-01", 1),
            Err(Error::Value { .. })
        ));
    }

    #[test]
    fn place_ladder_and_missing_entry() {
        let mut tables = PlaceTables::default();
        tables.city_to_region.insert("Naples".into(), "Campania".into());
        tables.region_to_country.insert("Campania".into(), "Italy".into());
        let h = GeneralizationHierarchy::place("City", 0, tables);
        assert_eq!(h.generalize_value("Naples", 1).unwrap(), "Campania");
        assert_eq!(h.generalize_value("Naples", 2).unwrap(), "Italy");
        assert_eq!(h.generalize_value("Naples", 3).unwrap(), "*");
        assert!(matches!(
            h.generalize_value("Rome", 1),
            Err(Error::PlaceLookup { .. })
        ));
    }

    #[test]
    fn rejects_non_nested_widths() {
        assert!(GeneralizationHierarchy::number("a", 0, vec![5, 12]).is_err());
        assert!(GeneralizationHierarchy::number("a", 0, vec![10, 5]).is_err());
        assert!(GeneralizationHierarchy::number("a", 0, vec![]).is_err());
    }

    #[test]
    fn level_above_height_is_a_contract_error() {
        assert!(matches!(age().generalize_value("1", 6), Err(Error::Contract(_))));
    }

    #[test]
    fn default_ladder_alternates() {
        assert_eq!(default_widths(24.0, 49.0), vec![5, 10, 50]);
        assert_eq!(default_widths(0.0, 999.0), vec![5, 10, 50, 100, 500, 1000]);
        assert_eq!(default_widths(7.0, 7.0), vec![5]);
    }

    #[test]
    fn table_one_heights() {
        let (ds, cfg) = table_one();
        let hs = build_hierarchies(&ds, &cfg).unwrap();
        let heights: Vec<_> = hs.iter().map(|h| (h.attribute().to_owned(), h.height())).collect();
        assert_eq!(
            heights,
            [("Age".to_owned(), 4), ("Gender".to_owned(), 1), ("Postcode".to_owned(), 5)]
        );
    }

    #[test]
    fn table_one_age_with_explicit_widths() {
        let (ds, mut cfg) = table_one();
        cfg.attributes[1].widths = Some(vec![5, 10, 50, 100]);
        let hs = build_hierarchies(&ds, &cfg).unwrap();
        assert_eq!(hs[0].height(), 5);
        assert_eq!(hs[0].generalize_value("49", 4).unwrap(), "0-99");
    }

    #[test]
    fn bad_number_cell_names_row() {
        let (mut ds, cfg) = table_one();
        let mut rows = ds.rows().to_vec();
        rows[2][1] = "forty".into();
        ds = Dataset::new(ds.attributes().to_vec(), rows).unwrap();
        match build_hierarchies(&ds, &cfg) {
            Err(Error::Value { row, attribute, .. }) => {
                assert_eq!(row, Some(2));
                assert_eq!(attribute, "Age");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    fn ladders() -> impl Strategy<Value = GeneralizationHierarchy> {
        prop_oneof![
            Just(GeneralizationHierarchy::number("n", 0, vec![5, 10, 50, 100, 500]).unwrap()),
            Just(GeneralizationHierarchy::number("n", 0, vec![2, 4, 8]).unwrap()),
        ]
    }

    proptest! {
        #[test]
        fn number_coarsening_is_monotone(h in ladders(), u in -2000i64..2000, v in -2000i64..2000) {
            let (u, v) = (u.to_string(), v.to_string());
            for l in 0..=h.height() {
                if h.generalize_value(&u, l).unwrap() == h.generalize_value(&v, l).unwrap() {
                    for m in l..=h.height() {
                        prop_assert_eq!(h.generalize_value(&u, m).unwrap(), h.generalize_value(&v, m).unwrap());
                    }
                }
            }
        }

        #[test]
        fn number_buckets_nest(h in ladders(), n in -5000i64..5000) {
            let parse = |s: String| {
                let (a, b) = s.split_at(s[1..].find('-').unwrap() + 1);
                (a.parse::<i64>().unwrap(), b[1..].parse::<i64>().unwrap())
            };
            for l in 1..h.height() - 1 {
                let (lo, hi) = parse(h.generalize_value(&n.to_string(), l).unwrap());
                let (plo, phi) = parse(h.generalize_value(&n.to_string(), l + 1).unwrap());
                prop_assert!(lo <= n && n <= hi);
                prop_assert!(plo <= lo && hi <= phi);
            }
        }

        #[test]
        fn string_coarsening_is_monotone(u in "[ab]{0,4}", v in "[ab]{0,4}") {
            let h = GeneralizationHierarchy::string("s", 0, 4);
            for l in 0..=h.height() {
                if h.generalize_value(&u, l).unwrap() == h.generalize_value(&v, l).unwrap() {
                    for m in l..=h.height() {
                        prop_assert_eq!(h.generalize_value(&u, m).unwrap(), h.generalize_value(&v, m).unwrap());
                    }
                }
            }
            prop_assert_eq!(h.generalize_value(&u, 4).unwrap(), h.top_symbol());
        }
    }
}
