//! Tabular input, attribute configuration and identifier masking.

use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::search::GaParams;

/// Current version of the on-disk config format.
pub const CONFIG_FORMAT_VERSION: u32 = 1;

/// Date layout accepted for DATE attributes.
pub const DATE_FORMAT: &str = "%d/%m/%Y";

/// String-valued records under a named schema.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dataset {
    attributes: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Dataset {
    /// Builds a dataset, enforcing unique attribute names, rectangular rows
    /// and at least one row.
    pub fn new(attributes: Vec<String>, rows: Vec<Vec<String>>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::Dataset("dataset has no rows".into()));
        }
        Self::new_allow_empty(attributes, rows)
    }

    /// Like [`Dataset::new`] but accepts zero rows. Used for anonymized
    /// output, where every row may have been suppressed.
    pub(crate) fn new_allow_empty(attributes: Vec<String>, rows: Vec<Vec<String>>) -> Result<Self> {
        let mut seen = HashSet::new();
        for name in &attributes {
            if !seen.insert(name.as_str()) {
                return Err(Error::Dataset(format!("duplicate attribute name {name:?}")));
            }
        }
        for (i, row) in rows.iter().enumerate() {
            if row.len() != attributes.len() {
                return Err(Error::Dataset(format!(
                    "row {i} has {} cells, expected {}",
                    row.len(),
                    attributes.len()
                )));
            }
        }
        Ok(Dataset { attributes, rows })
    }

    pub fn attributes(&self) -> &[String] {
        &self.attributes
    }

    pub fn rows(&self) -> &[Vec<String>] {
        &self.rows
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.attributes.iter().position(|a| a == name)
    }

    pub fn cell(&self, row: usize, column: usize) -> &str {
        &self.rows[row][column]
    }

    pub fn column(&self, column: usize) -> impl Iterator<Item = &str> + '_ {
        self.rows.iter().map(move |r| r[column].as_str())
    }

    /// Writes the dataset as CSV with a header row.
    pub fn write_csv(&self, path: impl AsRef<Path>, delimiter: u8) -> Result<()> {
        let path = path.as_ref();
        let mut writer = csv::WriterBuilder::new()
            .delimiter(delimiter)
            .from_path(path)
            .map_err(|e| csv_error(path, e))?;
        writer
            .write_record(&self.attributes)
            .map_err(|e| csv_error(path, e))?;
        for row in &self.rows {
            writer.write_record(row).map_err(|e| csv_error(path, e))?;
        }
        writer.flush().map_err(|e| Error::io(path, e))
    }
}

fn csv_error(path: &Path, err: csv::Error) -> Error {
    let line = err.position().map(|p| p.line()).unwrap_or(0);
    match err.into_kind() {
        csv::ErrorKind::Io(e) => Error::io(path, e),
        other => Error::Parse {
            path: path.to_path_buf(),
            line,
            message: format!("{other:?}"),
        },
    }
}

/// Reads a delimited file whose first line is a header of unique names.
/// Cells are kept verbatim.
pub fn load_dataset(path: impl AsRef<Path>, delimiter: u8) -> Result<Dataset> {
    let path = path.as_ref();
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(delimiter)
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::None)
        .from_path(path)
        .map_err(|e| csv_error(path, e))?;

    let header: Vec<String> = reader
        .headers()
        .map_err(|e| csv_error(path, e))?
        .iter()
        .map(str::to_owned)
        .collect();
    if header.is_empty() || (header.len() == 1 && header[0].is_empty()) {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            line: 1,
            message: "missing header".into(),
        });
    }
    let mut seen = HashSet::new();
    for name in &header {
        if !seen.insert(name.as_str()) {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line: 1,
                message: format!("duplicate header name {name:?}"),
            });
        }
    }

    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| csv_error(path, e))?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        if record.len() != header.len() {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line,
                message: format!("expected {} cells, found {}", header.len(), record.len()),
            });
        }
        rows.push(record.iter().map(str::to_owned).collect());
    }
    if rows.is_empty() {
        return Err(Error::Dataset(format!("{} has a header but no rows", path.display())));
    }
    Dataset::new(header, rows)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Identifier,
    QuasiIdentifier,
    Sensitive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DataType {
    Number,
    String,
    Date,
    Place,
}

/// City → region and region → country lookup tables for PLACE attributes.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PlaceTables {
    pub city_to_region: BTreeMap<String, String>,
    pub region_to_country: BTreeMap<String, String>,
}

impl PlaceTables {
    /// Loads two `child,parent` files.
    pub fn load(regions: &Path, countries: &Path) -> Result<Self> {
        Ok(PlaceTables {
            city_to_region: load_mapping(regions)?,
            region_to_country: load_mapping(countries)?,
        })
    }
}

fn load_mapping(path: &Path) -> Result<BTreeMap<String, String>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .from_path(path)
        .map_err(|e| csv_error(path, e))?;
    let mut map = BTreeMap::new();
    for record in reader.records() {
        let record = record.map_err(|e| csv_error(path, e))?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        if record.len() != 2 {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line,
                message: "expected two columns (child,parent)".into(),
            });
        }
        map.insert(record[0].to_owned(), record[1].to_owned());
    }
    Ok(map)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttributeConfig {
    pub name: String,
    pub role: Role,
    pub datatype: DataType,
    /// NUMBER bucket widths, one per range level. Derived from the data when
    /// absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub widths: Option<Vec<u64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub regions_file: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub countries_file: Option<PathBuf>,
    #[serde(skip)]
    pub places: Option<PlaceTables>,
}

impl AttributeConfig {
    pub fn new(name: impl Into<String>, role: Role, datatype: DataType) -> Self {
        AttributeConfig {
            name: name.into(),
            role,
            datatype,
            widths: None,
            regions_file: None,
            countries_file: None,
            places: None,
        }
    }

    pub fn with_widths(mut self, widths: Vec<u64>) -> Self {
        self.widths = Some(widths);
        self
    }

    pub fn with_places(mut self, places: PlaceTables) -> Self {
        self.places = Some(places);
        self
    }
}

fn default_format_version() -> u32 {
    CONFIG_FORMAT_VERSION
}

fn default_k() -> usize {
    2
}

fn default_true() -> bool {
    true
}

/// Attribute roles and types plus the run parameters, stored as TOML.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Config {
    #[serde(default = "default_format_version")]
    pub format_version: u32,
    #[serde(default = "default_k")]
    pub k: usize,
    /// Restrict the search to the preprocessed lattice even when suppression
    /// is allowed.
    #[serde(default = "default_true")]
    pub trust_preprocessing: bool,
    #[serde(default)]
    pub ga: GaParams,
    pub attributes: Vec<AttributeConfig>,
}

impl Config {
    pub fn new(attributes: Vec<AttributeConfig>, k: usize) -> Self {
        Config {
            format_version: CONFIG_FORMAT_VERSION,
            k,
            trust_preprocessing: true,
            ga: GaParams::default(),
            attributes,
        }
    }

    /// Reads a TOML config. PLACE mapping files are resolved relative to the
    /// config's directory and loaded eagerly.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut config = Self::from_toml(&text).map_err(|e| match e {
            Error::Config(message) => Error::Config(format!("{}: {message}", path.display())),
            other => other,
        })?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        for attr in &mut config.attributes {
            if attr.datatype != DataType::Place {
                continue;
            }
            match (&attr.regions_file, &attr.countries_file) {
                (Some(regions), Some(countries)) => {
                    attr.places = Some(PlaceTables::load(&base.join(regions), &base.join(countries))?);
                }
                _ => {
                    return Err(Error::Config(format!(
                        "PLACE attribute {} needs regions_file and countries_file",
                        attr.name
                    )))
                }
            }
        }
        Ok(config)
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let config: Config = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        if config.format_version != CONFIG_FORMAT_VERSION {
            return Err(Error::Config(format!(
                "unsupported format_version {} (expected {CONFIG_FORMAT_VERSION})",
                config.format_version
            )));
        }
        Ok(config)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_toml()).map_err(|e| Error::io(path, e))
    }

    pub fn attribute(&self, name: &str) -> Option<&AttributeConfig> {
        self.attributes.iter().find(|a| a.name == name)
    }

    /// Quasi-identifiers in config order.
    pub fn quasi_identifiers(&self) -> impl Iterator<Item = &AttributeConfig> {
        self.attributes.iter().filter(|a| a.role == Role::QuasiIdentifier)
    }

    /// Checks that the config covers every dataset column exactly once.
    pub fn validate(&self, dataset: &Dataset) -> Result<()> {
        if self.k < 2 {
            return Err(Error::Config(format!("k must be at least 2, got {}", self.k)));
        }
        let mut seen = HashSet::new();
        for attr in &self.attributes {
            if !seen.insert(attr.name.as_str()) {
                return Err(Error::Config(format!("attribute {} configured twice", attr.name)));
            }
            if dataset.column_index(&attr.name).is_none() {
                return Err(Error::Config(format!(
                    "attribute {} is not a dataset column",
                    attr.name
                )));
            }
        }
        for column in dataset.attributes() {
            if !seen.contains(column.as_str()) {
                return Err(Error::Config(format!("column {column} has no configuration")));
            }
        }
        self.ga.validate()
    }

    /// Copy where only the first `count` quasi-identifiers keep their role;
    /// later ones are passed through as sensitive.
    pub fn with_qi_prefix(&self, count: usize) -> Config {
        let mut out = self.clone();
        let mut seen = 0;
        for attr in &mut out.attributes {
            if attr.role == Role::QuasiIdentifier {
                if seen >= count {
                    attr.role = Role::Sensitive;
                }
                seen += 1;
            }
        }
        out
    }
}

pub(crate) fn parse_number(cell: &str) -> Option<f64> {
    let trimmed = cell.trim();
    if trimmed.is_empty() {
        return None;
    }
    trimmed.parse::<f64>().ok().filter(|v| v.is_finite())
}

pub(crate) fn parse_date(cell: &str) -> Option<NaiveDate> {
    let trimmed = cell.trim();
    if trimmed.len() != 10 {
        return None;
    }
    NaiveDate::parse_from_str(trimmed, DATE_FORMAT).ok()
}

fn infer_datatype<'a>(cells: impl Iterator<Item = &'a str>) -> DataType {
    let mut non_empty = cells.filter(|c| !c.trim().is_empty()).peekable();
    if non_empty.peek().is_none() {
        return DataType::String;
    }
    let values: Vec<&str> = non_empty.collect();
    if values.iter().all(|c| parse_number(c).is_some()) {
        DataType::Number
    } else if values.iter().all(|c| parse_date(c).is_some()) {
        DataType::Date
    } else {
        DataType::String
    }
}

/// Skeleton config: every column a quasi-identifier with an inferred type.
/// PLACE is never inferred.
pub fn generate_config(dataset: &Dataset) -> Config {
    let attributes = dataset
        .attributes()
        .iter()
        .enumerate()
        .map(|(i, name)| {
            AttributeConfig::new(name.clone(), Role::QuasiIdentifier, infer_datatype(dataset.column(i)))
        })
        .collect();
    Config::new(attributes, default_k())
}

/// Replaces every identifier cell with a same-length run of `*`.
pub fn suppress_identifiers(dataset: &Dataset, config: &Config) -> Dataset {
    let masked: Vec<usize> = config
        .attributes
        .iter()
        .filter(|a| a.role == Role::Identifier)
        .filter_map(|a| dataset.column_index(&a.name))
        .collect();
    let mut out = dataset.clone();
    for row in &mut out.rows {
        for &c in &masked {
            row[c] = mask(&row[c]);
        }
    }
    out
}

pub(crate) fn mask(cell: &str) -> String {
    "*".repeat(cell.chars().count())
}
