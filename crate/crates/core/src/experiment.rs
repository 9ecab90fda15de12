//! Comparative experiment harness, result statistics and synthetic data.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::anonymity::build_support_maps;
use crate::dataset::{load_dataset, AttributeConfig, Config, DataType, Dataset, Role};
use crate::error::{Error, Result};
use crate::hierarchy::build_hierarchies;
use crate::lattice::LatticeNode;
use crate::metrics::accuracy;
use crate::search::{run_algorithm, search_bounds, Algorithm, GaParams, SearchContext};

/// Header of the results CSV.
pub const RESULTS_HEADER: [&str; 11] = [
    "algorithm",
    "qi_count",
    "run",
    "seed",
    "wall_ms",
    "node",
    "precision",
    "suppression",
    "accuracy",
    "evaluations",
    "timed_out",
];

/// Metrics summarised by [`compute_stats`].
pub const STAT_METRICS: [&str; 4] = ["wall_ms", "precision", "suppression", "accuracy"];

pub const DEFAULT_TIME_BUDGET: Duration = Duration::from_secs(600);

#[derive(Debug, Clone)]
pub enum DatasetSource {
    Files {
        dataset: PathBuf,
        config: PathBuf,
        delimiter: u8,
    },
    Synthetic {
        spec: SyntheticSpec,
        seed: u64,
    },
    Loaded {
        dataset: Dataset,
        config: Config,
    },
}

impl DatasetSource {
    fn load(&self) -> Result<(Dataset, Config)> {
        match self {
            DatasetSource::Files {
                dataset,
                config,
                delimiter,
            } => {
                let ds = load_dataset(dataset, *delimiter)?;
                let cfg = Config::load(config)?;
                Ok((ds, cfg))
            }
            DatasetSource::Synthetic { spec, seed } => Ok(generate_synthetic(spec, *seed)),
            DatasetSource::Loaded { dataset, config } => Ok((dataset.clone(), config.clone())),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentPlan {
    pub source: DatasetSource,
    pub algorithms: Vec<Algorithm>,
    /// Numbers of leading quasi-identifiers to anonymize, non-decreasing.
    pub qi_counts: Vec<usize>,
    pub runs: usize,
    pub suppression_threshold: f64,
    /// Overrides the config's k when set.
    pub k: Option<usize>,
    /// Wall-clock budget per (algorithm, QI count) cell.
    pub time_budget: Duration,
    pub seed_base: u64,
    pub kgen: GaParams,
    pub random: GaParams,
}

impl ExperimentPlan {
    pub fn new(source: DatasetSource, algorithms: Vec<Algorithm>, qi_counts: Vec<usize>, runs: usize) -> Self {
        ExperimentPlan {
            source,
            algorithms,
            qi_counts,
            runs,
            suppression_threshold: 0.0,
            k: None,
            time_budget: DEFAULT_TIME_BUDGET,
            seed_base: 0,
            kgen: GaParams::default(),
            random: GaParams {
                population_size: 5000,
                ..GaParams::default()
            },
        }
    }

    fn validate(&self) -> Result<()> {
        if self.runs == 0 {
            return Err(Error::Config("an experiment needs at least one run".into()));
        }
        if self.qi_counts.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::Config("QI counts must be non-decreasing".into()));
        }
        if self.qi_counts.contains(&0) {
            return Err(Error::Config("QI counts must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.suppression_threshold) {
            return Err(Error::Config("suppression threshold must lie in [0, 1]".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub algorithm: Algorithm,
    pub qi_count: usize,
    pub run: usize,
    pub seed: u64,
    pub wall_ms: f64,
    pub node: Option<LatticeNode>,
    pub precision: Option<f64>,
    pub suppression: Option<f64>,
    pub accuracy: Option<f64>,
    pub evaluations: usize,
    pub timed_out: bool,
}

impl RunRecord {
    fn to_fields(&self) -> Vec<String> {
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        vec![
            self.algorithm.to_string(),
            self.qi_count.to_string(),
            self.run.to_string(),
            self.seed.to_string(),
            format!("{:.3}", self.wall_ms),
            self.node.as_ref().map(ToString::to_string).unwrap_or_default(),
            opt(self.precision),
            opt(self.suppression),
            opt(self.accuracy),
            self.evaluations.to_string(),
            self.timed_out.to_string(),
        ]
    }

    /// The record serialized without its wall time, for reproducibility checks.
    pub fn fingerprint(&self) -> String {
        let mut fields = self.to_fields();
        fields[4].clear();
        fields.join(",")
    }
}

/// Runs every (QI count, algorithm) cell of the plan. Exact algorithms run
/// first in each cell so that their optimum can score the others.
pub fn run_experiment(plan: &ExperimentPlan) -> Result<Vec<RunRecord>> {
    plan.validate()?;
    let (dataset, mut config) = plan.source.load()?;
    if let Some(k) = plan.k {
        config.k = k;
    }
    config.validate(&dataset)?;
    let total_qis = config.quasi_identifiers().count();

    let mut algorithms = plan.algorithms.clone();
    algorithms.sort_by_key(|a| match a {
        Algorithm::Exhaustive => 0,
        Algorithm::Ola => 1,
        Algorithm::Kgen => 2,
        Algorithm::Random => 3,
    });
    algorithms.dedup();

    let mut records = Vec::new();
    for &qi_count in &plan.qi_counts {
        if qi_count > total_qis {
            return Err(Error::Config(format!(
                "plan asks for {qi_count} quasi-identifiers but the config has {total_qis}"
            )));
        }
        let cell_config = config.with_qi_prefix(qi_count);
        let hierarchies = build_hierarchies(&dataset, &cell_config)?;
        let maps = build_support_maps(&dataset, &hierarchies)?;
        let bounds = search_bounds(
            &dataset,
            &hierarchies,
            cell_config.k,
            plan.suppression_threshold,
            cell_config.trust_preprocessing,
        )?;

        let first = records.len();
        let mut exhaustive_opt: Option<LatticeNode> = None;
        let mut ola_opt: Option<LatticeNode> = None;
        for &algorithm in &algorithms {
            let params = match algorithm {
                Algorithm::Random => &plan.random,
                _ => &plan.kgen,
            };
            let cell_start = Instant::now();
            let deadline = cell_start + plan.time_budget;
            let mut abandoned = false;
            for run in 0..plan.runs {
                let seed = plan.seed_base + run as u64;
                if abandoned || Instant::now() >= deadline {
                    abandoned = true;
                    records.push(RunRecord {
                        algorithm,
                        qi_count,
                        run,
                        seed,
                        wall_ms: 0.0,
                        node: None,
                        precision: None,
                        suppression: None,
                        accuracy: None,
                        evaluations: 0,
                        timed_out: true,
                    });
                    continue;
                }
                let ctx = SearchContext::new(&maps, cell_config.k, plan.suppression_threshold)?
                    .with_deadline(Some(deadline));
                let result = run_algorithm(algorithm, &ctx, &bounds, &params.clone().with_seed(seed))?;
                abandoned = result.timed_out;
                if !result.timed_out {
                    match algorithm {
                        Algorithm::Exhaustive if exhaustive_opt.is_none() => exhaustive_opt = result.best.clone(),
                        Algorithm::Ola if ola_opt.is_none() => ola_opt = result.best.clone(),
                        _ => {}
                    }
                }
                records.push(RunRecord {
                    algorithm,
                    qi_count,
                    run,
                    seed,
                    wall_ms: result.wall_time.as_secs_f64() * 1000.0,
                    precision: result.best_report.as_ref().map(|r| r.precision),
                    suppression: result.best_report.as_ref().map(|r| r.suppression_fraction),
                    node: result.best,
                    accuracy: None,
                    evaluations: result.evaluations_used,
                    timed_out: result.timed_out,
                });
            }
        }

        if let Some(optimal) = exhaustive_opt.or(ola_opt) {
            let worst = bounds.max_node();
            for record in &mut records[first..] {
                if let Some(node) = &record.node {
                    record.accuracy = accuracy(std::slice::from_ref(node), &optimal, worst, &[1.0])
                        .ok()
                        .map(|r| r.overall);
                }
            }
        }
    }
    Ok(records)
}

pub fn write_results(path: impl AsRef<Path>, records: &[RunRecord]) -> Result<()> {
    let path = path.as_ref();
    let mut writer = csv::Writer::from_path(path).map_err(|e| csv_write_error(path, e))?;
    writer.write_record(RESULTS_HEADER).map_err(|e| csv_write_error(path, e))?;
    for record in records {
        writer
            .write_record(record.to_fields())
            .map_err(|e| csv_write_error(path, e))?;
    }
    writer.flush().map_err(|e| Error::io(path, e))
}

fn csv_write_error(path: &Path, err: csv::Error) -> Error {
    match err.into_kind() {
        csv::ErrorKind::Io(e) => Error::io(path, e),
        other => Error::Parse {
            path: path.to_path_buf(),
            line: 0,
            message: format!("{other:?}"),
        },
    }
}

/// Parses a results CSV written by [`write_results`]. An empty file yields no
/// records.
pub fn read_results(path: impl AsRef<Path>) -> Result<Vec<RunRecord>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    if text.trim().is_empty() {
        return Ok(Vec::new());
    }
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(text.as_bytes());
    let schema = |line: u64, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let header = reader
        .headers()
        .map_err(|e| schema(1, e.to_string()))?
        .clone();
    if header.iter().ne(RESULTS_HEADER) {
        return Err(schema(1, format!("expected header {}", RESULTS_HEADER.join(","))));
    }

    let mut records = Vec::new();
    for row in reader.records() {
        let row = row.map_err(|e| schema(e.position().map_or(0, |p| p.line()), e.to_string()))?;
        let line = row.position().map_or(0, |p| p.line());
        if row.len() != RESULTS_HEADER.len() {
            return Err(schema(
                line,
                format!("expected {} fields, found {}", RESULTS_HEADER.len(), row.len()),
            ));
        }
        let field = |i: usize| row[i].trim();
        let bad = |name: &str| schema(line, format!("malformed {name} {:?}", row[RESULTS_HEADER.iter().position(|h| *h == name).unwrap()].to_owned()));
        let opt_f64 = |i: usize, name: &str| -> Result<Option<f64>> {
            if field(i).is_empty() {
                Ok(None)
            } else {
                field(i).parse().map(Some).map_err(|_| bad(name))
            }
        };
        records.push(RunRecord {
            algorithm: field(0).parse().map_err(|_| bad("algorithm"))?,
            qi_count: field(1).parse().map_err(|_| bad("qi_count"))?,
            run: field(2).parse().map_err(|_| bad("run"))?,
            seed: field(3).parse().map_err(|_| bad("seed"))?,
            wall_ms: field(4).parse().map_err(|_| bad("wall_ms"))?,
            node: if field(5).is_empty() {
                None
            } else {
                Some(field(5).parse().map_err(|_| bad("node"))?)
            },
            precision: opt_f64(6, "precision")?,
            suppression: opt_f64(7, "suppression")?,
            accuracy: opt_f64(8, "accuracy")?,
            evaluations: field(9).parse().map_err(|_| bad("evaluations"))?,
            timed_out: field(10).parse().map_err(|_| bad("timed_out"))?,
        });
    }
    Ok(records)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub count: usize,
    pub mean: f64,
    pub min: f64,
    pub max: f64,
    /// Population standard deviation.
    pub stddev: f64,
}

impl Summary {
    pub fn of(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        Some(Summary {
            count: values.len(),
            mean,
            min: values.iter().cloned().fold(f64::INFINITY, f64::min),
            max: values.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
            stddev: var.sqrt(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct CellKey {
    pub qi_count: usize,
    pub algorithm: String,
}

/// Per-cell, per-metric summaries.
pub type Stats = BTreeMap<CellKey, BTreeMap<&'static str, Summary>>;

pub fn summarize(records: &[RunRecord]) -> Stats {
    let mut grouped: BTreeMap<CellKey, Vec<&RunRecord>> = BTreeMap::new();
    for r in records {
        grouped
            .entry(CellKey {
                qi_count: r.qi_count,
                algorithm: r.algorithm.to_string(),
            })
            .or_default()
            .push(r);
    }
    grouped
        .into_iter()
        .map(|(key, rows)| {
            let mut metrics = BTreeMap::new();
            for metric in STAT_METRICS {
                let values: Vec<f64> = rows
                    .iter()
                    .filter(|r| !r.timed_out || metric != "wall_ms")
                    .filter_map(|r| match metric {
                        "wall_ms" => Some(r.wall_ms),
                        "precision" => r.precision,
                        "suppression" => r.suppression,
                        _ => r.accuracy,
                    })
                    .collect();
                if let Some(s) = Summary::of(&values) {
                    metrics.insert(metric, s);
                }
            }
            (key, metrics)
        })
        .collect()
}

/// Reads a results CSV and writes `stats.csv` plus one `series_<metric>.csv`
/// per metric (QI count against per-algorithm means) into `out_dir`.
/// Returns the paths written.
pub fn compute_stats(results_path: impl AsRef<Path>, out_dir: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
    let records = read_results(results_path)?;
    let stats = summarize(&records);
    let out_dir = out_dir.as_ref();
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;

    let mut written = Vec::new();
    let stats_path = out_dir.join("stats.csv");
    let mut text = String::from("algorithm,qi_count,metric,count,mean,min,max,stddev\n");
    for (key, metrics) in &stats {
        for (metric, s) in metrics {
            text.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                key.algorithm, key.qi_count, metric, s.count, s.mean, s.min, s.max, s.stddev
            ));
        }
    }
    fs::write(&stats_path, text).map_err(|e| Error::io(&stats_path, e))?;
    written.push(stats_path);

    let mut algorithms: Vec<String> = stats.keys().map(|k| k.algorithm.clone()).collect();
    algorithms.sort();
    algorithms.dedup();
    let mut qi_counts: Vec<usize> = stats.keys().map(|k| k.qi_count).collect();
    qi_counts.dedup();
    for metric in STAT_METRICS {
        let path = out_dir.join(format!("series_{metric}.csv"));
        let mut text = String::from("qi_count");
        for a in &algorithms {
            text.push(',');
            text.push_str(a);
        }
        text.push('\n');
        for &q in &qi_counts {
            text.push_str(&q.to_string());
            for a in &algorithms {
                text.push(',');
                let key = CellKey {
                    qi_count: q,
                    algorithm: a.clone(),
                };
                if let Some(s) = stats.get(&key).and_then(|m| m.get(metric)) {
                    text.push_str(&s.mean.to_string());
                }
            }
            text.push('\n');
        }
        fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
        written.push(path);
    }
    Ok(written)
}

/// Shape of a generated benchmark table.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSpec {
    pub n_rows: usize,
    pub qi_count: usize,
    /// Distinct values per quasi-identifier column.
    pub cardinality: usize,
    /// Cycled across the quasi-identifier columns.
    pub datatypes: Vec<DataType>,
    pub k: usize,
    /// When set, rows are noisy copies of this many random prototype rows.
    /// Correlated columns make k-anonymity reachable at lower levels.
    pub profiles: Option<usize>,
    /// Chance that a cell is copied from another random prototype instead of
    /// the row's own. Unused without profiles.
    pub noise: f64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            n_rows: 1599,
            qi_count: 15,
            cardinality: 50,
            datatypes: vec![DataType::Number, DataType::String, DataType::Date],
            k: 2,
            profiles: None,
            noise: 0.0,
        }
    }
}

fn synthetic_cell(datatype: DataType, value: usize, cardinality: usize) -> String {
    let card = cardinality.max(1);
    match datatype {
        DataType::Number => ((value * 1000) / card).to_string(),
        DataType::String | DataType::Place => format!("{:05}", value * (100_000 / card)),
        DataType::Date => {
            let start = chrono::NaiveDate::from_ymd_opt(1950, 1, 1).expect("valid date");
            let step = (25_000 / card).max(1) as u64;
            (start + chrono::Days::new(value as u64 * step)).format("%d/%m/%Y").to_string()
        }
    }
}

/// Deterministic table with an identifier, `qi_count` quasi-identifiers and
/// one sensitive column. Each quasi-identifier takes `cardinality` distinct
/// values drawn uniformly per row.
pub fn generate_synthetic(spec: &SyntheticSpec, seed: u64) -> (Dataset, Config) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let datatypes: Vec<DataType> = (0..spec.qi_count)
        .map(|i| {
            let dt = spec.datatypes[i % spec.datatypes.len().max(1)];
            if dt == DataType::Place {
                DataType::String
            } else {
                dt
            }
        })
        .collect();
    let mut attributes = vec!["id".to_owned()];
    attributes.extend((0..spec.qi_count).map(|i| format!("qi_{i}")));
    attributes.push("outcome".to_owned());

    let card = spec.cardinality.max(1);
    let prototypes: Vec<Vec<usize>> = (0..spec.profiles.unwrap_or(0))
        .map(|_| (0..spec.qi_count).map(|_| rng.gen_range(0..card)).collect())
        .collect();
    let rows = (0..spec.n_rows.max(1))
        .map(|r| {
            let mut row = Vec::with_capacity(spec.qi_count + 2);
            row.push(format!("P{r:06}"));
            let prototype = (!prototypes.is_empty()).then(|| &prototypes[rng.gen_range(0..prototypes.len())]);
            for (i, dt) in datatypes.iter().enumerate() {
                let v = match prototype {
                    Some(_) if rng.gen_bool(spec.noise.clamp(0.0, 1.0)) => {
                        prototypes[rng.gen_range(0..prototypes.len())][i]
                    }
                    Some(p) => p[i],
                    None => rng.gen_range(0..card),
                };
                row.push(synthetic_cell(*dt, v, spec.cardinality));
            }
            row.push(["low", "medium", "high"][rng.gen_range(0..3)].to_owned());
            row
        })
        .collect();
    let dataset = Dataset::new(attributes, rows).expect("generated rows are rectangular");

    let mut configs = vec![AttributeConfig::new("id", Role::Identifier, DataType::String)];
    configs.extend(
        datatypes
            .iter()
            .enumerate()
            .map(|(i, dt)| AttributeConfig::new(format!("qi_{i}"), Role::QuasiIdentifier, *dt)),
    );
    configs.push(AttributeConfig::new("outcome", Role::Sensitive, DataType::String));
    (dataset, Config::new(configs, spec.k.max(2)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(algorithm: Algorithm, precision: f64) -> RunRecord {
        RunRecord {
            algorithm,
            qi_count: 3,
            run: 0,
            seed: 0,
            wall_ms: 1.5,
            node: Some(LatticeNode::new(vec![1, 0, 2])),
            precision: Some(precision),
            suppression: Some(0.0),
            accuracy: None,
            evaluations: 10,
            timed_out: false,
        }
    }

    #[test]
    fn summary_basics() {
        let s = Summary::of(&[0.2, 0.4]).unwrap();
        assert!((s.mean - 0.3).abs() < 1e-12);
        let same = Summary::of(&[1.0; 5]).unwrap();
        assert_eq!(same.stddev, 0.0);
        assert!(Summary::of(&[]).is_none());
    }

    #[test]
    fn results_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.csv");
        let records = vec![record(Algorithm::Kgen, 0.25), {
            let mut r = record(Algorithm::Exhaustive, 0.125);
            r.node = None;
            r.precision = None;
            r.timed_out = true;
            r
        }];
        write_results(&path, &records).unwrap();
        assert_eq!(read_results(&path).unwrap(), records);
    }

    #[test]
    fn malformed_results_report_line() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.csv");
        fs::write(
            &path,
            format!("{}\nKGEN,3,0,0,1.0,1-0,0.1,0,,5,false\nKGEN,x,0,0,1.0,1-0,0.1,0,,5,false\n", RESULTS_HEADER.join(",")),
        )
        .unwrap();
        match read_results(&path) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
        fs::write(&path, "a,b\n1,2\n").unwrap();
        assert!(matches!(read_results(&path), Err(Error::Parse { line: 1, .. })));
    }

    #[test]
    fn empty_results_give_header_only_stats() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.csv");
        fs::write(&path, "").unwrap();
        compute_stats(&path, dir.path()).unwrap();
        let stats = fs::read_to_string(dir.path().join("stats.csv")).unwrap();
        assert_eq!(stats, "algorithm,qi_count,metric,count,mean,min,max,stddev\n");
    }

    #[test]
    fn stats_and_series() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.csv");
        write_results(&path, &[record(Algorithm::Kgen, 0.2), record(Algorithm::Kgen, 0.4)]).unwrap();
        compute_stats(&path, dir.path()).unwrap();
        let stats = fs::read_to_string(dir.path().join("stats.csv")).unwrap();
        assert!(stats.contains("KGEN,3,precision,2,0.30000000000000004,0.2,0.4,"), "{stats}");
        let series = fs::read_to_string(dir.path().join("series_precision.csv")).unwrap();
        assert_eq!(series, "qi_count,KGEN\n3,0.30000000000000004\n");
    }

    #[test]
    fn synthetic_is_deterministic() {
        let spec = SyntheticSpec {
            n_rows: 100,
            qi_count: 3,
            ..SyntheticSpec::default()
        };
        let (a, ca) = generate_synthetic(&spec, 7);
        let (b, cb) = generate_synthetic(&spec, 7);
        assert_eq!(a, b);
        assert_eq!(ca, cb);
        assert_eq!(a.n_rows(), 100);
        ca.validate(&a).unwrap();
        let (c, _) = generate_synthetic(&spec, 8);
        assert_ne!(a, c);
    }

    #[test]
    fn synthetic_types_cycle() {
        let (ds, cfg) = generate_synthetic(
            &SyntheticSpec {
                n_rows: 10,
                qi_count: 4,
                ..SyntheticSpec::default()
            },
            1,
        );
        let types: Vec<_> = cfg.quasi_identifiers().map(|a| a.datatype).collect();
        assert_eq!(types, [DataType::Number, DataType::String, DataType::Date, DataType::Number]);
        let inferred = crate::dataset::generate_config(&ds);
        assert_eq!(inferred.attribute("qi_2").unwrap().datatype, DataType::Date);
    }

    #[test]
    fn noiseless_profiles_repeat_prototypes() {
        let spec = SyntheticSpec {
            n_rows: 200,
            qi_count: 6,
            profiles: Some(5),
            noise: 0.0,
            ..SyntheticSpec::default()
        };
        let (ds, _) = generate_synthetic(&spec, 3);
        let distinct: std::collections::BTreeSet<&[String]> = ds.rows().iter().map(|r| &r[1..7]).collect();
        assert!(distinct.len() <= 5);
    }
}
