//! Command-line surface.
//!
//! ```text
//! kgen -a <algorithmName> <threshold> <datasetPath> <configPath> [-o <outputPath>]
//! kgen -e <numberOfRuns> <threshold> <datasetPath> <configPath> [-o <outputPath>]
//! kgen -s <resultPath> [-o <outputPath>]
//! kgen -c <datasetPath> [-o <outputPath>]
//! kgen -h
//! ```
//!
//! `outputPath` is a directory (created if missing); it defaults to the
//! working directory. `--seed`, `--k`, `--max-evals`, `--delimiter`,
//! `--algorithms`, `--qi-counts` and `--time-budget` are extensions that
//! override the corresponding config values.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

use clap::{Arg, ArgAction, ArgGroup, Command as ClapCommand};

use crate::anonymity::{apply_anonymization, build_support_maps, write_metadata};
use crate::dataset::{generate_config, load_dataset, Config};
use crate::error::{Error, Result};
use crate::experiment::{compute_stats, run_experiment, write_results, DatasetSource, ExperimentPlan};
use crate::hierarchy::build_hierarchies;
use crate::search::{run_algorithm, search_bounds, Algorithm, SearchContext};

#[derive(Debug, Clone, PartialEq)]
pub enum Command {
    Algorithm {
        algorithm: Algorithm,
        threshold: f64,
        dataset: PathBuf,
        config: PathBuf,
    },
    Experiment {
        runs: usize,
        threshold: f64,
        dataset: PathBuf,
        config: PathBuf,
    },
    Stat {
        results: PathBuf,
    },
    Config {
        dataset: PathBuf,
    },
    Help,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CliInvocation {
    pub command: Command,
    pub output: Option<PathBuf>,
    pub seed: Option<u64>,
    pub k: Option<usize>,
    pub max_evaluations: Option<usize>,
    pub delimiter: Option<char>,
    pub algorithms: Option<Vec<Algorithm>>,
    pub qi_counts: Option<Vec<usize>>,
    pub time_budget_secs: Option<u64>,
}

impl CliInvocation {
    pub fn new(command: Command) -> Self {
        CliInvocation {
            command,
            output: None,
            seed: None,
            k: None,
            max_evaluations: None,
            delimiter: None,
            algorithms: None,
            qi_counts: None,
            time_budget_secs: None,
        }
    }

    /// Argument vector (without the program name) that parses back to `self`.
    pub fn render(&self) -> Vec<String> {
        let s = |p: &Path| p.display().to_string();
        let mut out: Vec<String> = match &self.command {
            Command::Algorithm {
                algorithm,
                threshold,
                dataset,
                config,
            } => vec!["-a".into(), algorithm.to_string(), threshold.to_string(), s(dataset), s(config)],
            Command::Experiment {
                runs,
                threshold,
                dataset,
                config,
            } => vec!["-e".into(), runs.to_string(), threshold.to_string(), s(dataset), s(config)],
            Command::Stat { results } => vec!["-s".into(), s(results)],
            Command::Config { dataset } => vec!["-c".into(), s(dataset)],
            Command::Help => vec!["-h".into()],
        };
        if let Some(seed) = self.seed {
            out.extend(["--seed".into(), seed.to_string()]);
        }
        if let Some(k) = self.k {
            out.extend(["--k".into(), k.to_string()]);
        }
        if let Some(m) = self.max_evaluations {
            out.extend(["--max-evals".into(), m.to_string()]);
        }
        if let Some(d) = self.delimiter {
            out.extend(["--delimiter".into(), d.to_string()]);
        }
        if let Some(algs) = &self.algorithms {
            let joined: Vec<String> = algs.iter().map(ToString::to_string).collect();
            out.extend(["--algorithms".into(), joined.join(",")]);
        }
        if let Some(qis) = &self.qi_counts {
            let joined: Vec<String> = qis.iter().map(ToString::to_string).collect();
            out.extend(["--qi-counts".into(), joined.join(",")]);
        }
        if let Some(t) = self.time_budget_secs {
            out.extend(["--time-budget".into(), t.to_string()]);
        }
        if let Some(o) = &self.output {
            out.extend(["-o".into(), s(o)]);
        }
        out
    }
}

fn command() -> ClapCommand {
    ClapCommand::new("kgen")
        .about("k-anonymization by generalization-lattice search")
        .disable_version_flag(true)
        .arg(
            Arg::new("algorithm")
                .short('a')
                .long("algorithm")
                .num_args(4)
                .value_names(["algorithmName", "threshold", "datasetPath", "configPath"])
                .help("Anonymize a dataset with EXHAUSTIVE, OLA, KGEN or RANDOM"),
        )
        .arg(
            Arg::new("experimentation")
                .short('e')
                .long("experimentation")
                .num_args(4)
                .value_names(["numberOfRuns", "threshold", "datasetPath", "configPath"])
                .help("Run the comparative experiment and write results.csv"),
        )
        .arg(
            Arg::new("stat")
                .short('s')
                .long("stat")
                .num_args(1)
                .value_name("resultPath")
                .help("Summarize an experiment results file"),
        )
        .arg(
            Arg::new("config")
                .short('c')
                .long("config")
                .num_args(1)
                .value_name("datasetPath")
                .help("Generate a config file for a dataset"),
        )
        .group(
            ArgGroup::new("command")
                .args(["algorithm", "experimentation", "stat", "config"])
                .required(true)
                .multiple(false),
        )
        .arg(
            Arg::new("output")
                .short('o')
                .long("output")
                .num_args(1)
                .value_name("outputPath")
                .help("Output directory (default: working directory)"),
        )
        .arg(Arg::new("seed").long("seed").num_args(1).value_parser(clap::value_parser!(u64)).help("RNG seed"))
        .arg(Arg::new("k").long("k").num_args(1).value_parser(clap::value_parser!(usize)).help("Override k"))
        .arg(
            Arg::new("max-evals")
                .long("max-evals")
                .num_args(1)
                .value_parser(clap::value_parser!(usize))
                .help("Override max evaluations"),
        )
        .arg(Arg::new("delimiter").long("delimiter").num_args(1).value_parser(clap::value_parser!(char)).help("CSV delimiter (default ',')"))
        .arg(Arg::new("algorithms").long("algorithms").num_args(1).help("Comma-separated algorithms for -e"))
        .arg(Arg::new("qi-counts").long("qi-counts").num_args(1).help("Comma-separated QI counts for -e"))
        .arg(
            Arg::new("time-budget")
                .long("time-budget")
                .num_args(1)
                .value_parser(clap::value_parser!(u64))
                .help("Seconds per experiment cell (default 600)"),
        )
        .arg(Arg::new("help").short('h').long("help").action(ArgAction::Help).help("Print usage"))
        .disable_help_flag(true)
}

pub fn usage() -> String {
    command().render_help().to_string()
}

fn parse_threshold(text: &str) -> Result<f64> {
    let t: f64 = text
        .parse()
        .map_err(|_| Error::Usage(format!("threshold {text:?} is not a number")))?;
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::Usage(format!("threshold {t} must lie in [0, 1]")));
    }
    Ok(t)
}

fn parse_list<T: std::str::FromStr>(text: &str, what: &str) -> Result<Vec<T>> {
    text.split(',')
        .map(|s| s.trim().parse::<T>().map_err(|_| Error::Usage(format!("bad {what} {s:?}"))))
        .collect()
}

/// Parses `argv` (without the program name).
pub fn parse_args<I, S>(argv: I) -> Result<CliInvocation>
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let args = std::iter::once(std::ffi::OsString::from("kgen")).chain(argv.into_iter().map(Into::into));
    let matches = match command().try_get_matches_from(args) {
        Ok(m) => m,
        Err(e) if e.kind() == clap::error::ErrorKind::DisplayHelp => return Ok(CliInvocation::new(Command::Help)),
        Err(e) => return Err(Error::Usage(e.to_string())),
    };
    let values = |id: &str| -> Option<Vec<String>> { matches.get_many::<String>(id).map(|v| v.cloned().collect()) };

    let command = if let Some(v) = values("algorithm") {
        Command::Algorithm {
            algorithm: v[0].parse()?,
            threshold: parse_threshold(&v[1])?,
            dataset: v[2].clone().into(),
            config: v[3].clone().into(),
        }
    } else if let Some(v) = values("experimentation") {
        let runs: usize = v[0]
            .parse()
            .map_err(|_| Error::Usage(format!("number of runs {:?} is not a positive integer", v[0])))?;
        if runs == 0 {
            return Err(Error::Usage("number of runs must be at least 1".into()));
        }
        Command::Experiment {
            runs,
            threshold: parse_threshold(&v[1])?,
            dataset: v[2].clone().into(),
            config: v[3].clone().into(),
        }
    } else if let Some(v) = values("stat") {
        Command::Stat { results: v[0].clone().into() }
    } else if let Some(v) = values("config") {
        Command::Config { dataset: v[0].clone().into() }
    } else {
        return Err(Error::Usage("no command given".into()));
    };

    Ok(CliInvocation {
        command,
        output: matches.get_one::<String>("output").map(PathBuf::from),
        seed: matches.get_one::<u64>("seed").copied(),
        k: matches.get_one::<usize>("k").copied(),
        max_evaluations: matches.get_one::<usize>("max-evals").copied(),
        delimiter: matches.get_one::<char>("delimiter").copied(),
        algorithms: matches
            .get_one::<String>("algorithms")
            .map(|s| parse_list(s, "algorithm"))
            .transpose()?,
        qi_counts: matches
            .get_one::<String>("qi-counts")
            .map(|s| parse_list(s, "QI count"))
            .transpose()?,
        time_budget_secs: matches.get_one::<u64>("time-budget").copied(),
    })
}

fn output_dir(invocation: &CliInvocation) -> Result<PathBuf> {
    let dir = invocation.output.clone().unwrap_or_else(|| PathBuf::from("."));
    fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    Ok(dir)
}

fn stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "dataset".into())
}

fn delimiter(invocation: &CliInvocation) -> Result<u8> {
    let c = invocation.delimiter.unwrap_or(',');
    u8::try_from(c).map_err(|_| Error::Usage(format!("delimiter {c:?} must be a single-byte character")))
}

fn load_config(invocation: &CliInvocation, path: &Path) -> Result<Config> {
    let mut config = Config::load(path)?;
    if let Some(k) = invocation.k {
        config.k = k;
    }
    if let Some(seed) = invocation.seed {
        config.ga.rng_seed = seed;
    }
    if let Some(m) = invocation.max_evaluations {
        config.ga.max_evaluations = m;
    }
    Ok(config)
}

/// Executes an invocation and returns the files it wrote.
pub fn execute(invocation: &CliInvocation) -> Result<Vec<PathBuf>> {
    match &invocation.command {
        Command::Help => Ok(Vec::new()),
        Command::Config { dataset } => {
            let ds = load_dataset(dataset, delimiter(invocation)?)?;
            let mut config = generate_config(&ds);
            if let Some(k) = invocation.k {
                config.k = k;
            }
            let path = output_dir(invocation)?.join(format!("{}.config.toml", stem(dataset)));
            config.save(&path)?;
            Ok(vec![path])
        }
        Command::Algorithm {
            algorithm,
            threshold,
            dataset,
            config,
        } => {
            let ds = load_dataset(dataset, delimiter(invocation)?)?;
            let config = load_config(invocation, config)?;
            config.validate(&ds)?;
            let hierarchies = build_hierarchies(&ds, &config)?;
            let maps = build_support_maps(&ds, &hierarchies)?;
            let bounds = search_bounds(&ds, &hierarchies, config.k, *threshold, config.trust_preprocessing)?;
            let ctx = SearchContext::new(&maps, config.k, *threshold)?;
            let result = run_algorithm(*algorithm, &ctx, &bounds, &config.ga)?;
            let best = result.best.ok_or(Error::NoSolution)?;
            let verdict = ctx.verdict(&best);
            let anonymized = apply_anonymization(&ds, &config, &hierarchies, &best, &verdict)?;

            let dir = output_dir(invocation)?;
            let data_path = dir.join(format!("{}.anonymized.csv", stem(dataset)));
            let meta_path = dir.join(format!("{}.meta.csv", stem(dataset)));
            let written = anonymized
                .write_csv(&data_path, delimiter(invocation)?)
                .and_then(|_| write_metadata(&meta_path, &hierarchies, &best, verdict.suppressed_rows.len(), ds.n_rows()));
            if let Err(e) = written {
                let _ = fs::remove_file(&data_path);
                let _ = fs::remove_file(&meta_path);
                return Err(e);
            }
            log::info!(
                "{algorithm}: node {best}, precision {:.4}, {} rows suppressed",
                ctx.precision(&best),
                verdict.suppressed_rows.len()
            );
            Ok(vec![data_path, meta_path])
        }
        Command::Experiment {
            runs,
            threshold,
            dataset,
            config,
        } => {
            let ds = load_dataset(dataset, delimiter(invocation)?)?;
            let config = load_config(invocation, config)?;
            let total = config.quasi_identifiers().count();
            let mut plan = ExperimentPlan::new(
                DatasetSource::Loaded {
                    dataset: ds,
                    config: config.clone(),
                },
                invocation.algorithms.clone().unwrap_or_else(|| Algorithm::ALL.to_vec()),
                invocation.qi_counts.clone().unwrap_or_else(|| (1..=total).collect()),
                *runs,
            );
            plan.suppression_threshold = *threshold;
            plan.seed_base = config.ga.rng_seed;
            plan.kgen = config.ga.clone();
            plan.random.max_evaluations = config.ga.max_evaluations;
            if let Some(t) = invocation.time_budget_secs {
                plan.time_budget = Duration::from_secs(t);
            }
            let records = run_experiment(&plan)?;
            let path = output_dir(invocation)?.join("results.csv");
            if let Err(e) = write_results(&path, &records) {
                let _ = fs::remove_file(&path);
                return Err(e);
            }
            Ok(vec![path])
        }
        Command::Stat { results } => {
            let dir = output_dir(invocation)?;
            compute_stats(results, dir)
        }
    }
}

/// Parses and runs `argv`, printing diagnostics. Returns the process exit
/// code: 0 on success, 2 on usage errors, 1 on any other failure.
pub fn run<I, S>(argv: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let invocation = match parse_args(argv) {
        Ok(i) => i,
        Err(e) => {
            eprintln!("error: {e}\n\n{}", usage());
            return 2;
        }
    };
    if invocation.command == Command::Help {
        println!("{}", usage());
        return 0;
    }
    match execute(&invocation) {
        Ok(paths) => {
            for p in paths {
                println!("{}", p.display());
            }
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;

    #[test]
    fn parses_algorithm_command() {
        let inv = parse_args(["-a", "KGen", "0.005", "data.csv", "cfg"]).unwrap();
        assert_eq!(
            inv.command,
            Command::Algorithm {
                algorithm: Algorithm::Kgen,
                threshold: 0.005,
                dataset: "data.csv".into(),
                config: "cfg".into(),
            }
        );
        assert_eq!(inv.output, None);
    }

    #[test]
    fn help_and_errors() {
        assert_eq!(parse_args(["-h"]).unwrap().command, Command::Help);
        assert!(matches!(parse_args(["-a", "KGEN", "1.5", "d", "c"]), Err(Error::Usage(_))));
        assert!(matches!(parse_args(["-a", "BOGUS", "0.1", "d", "c"]), Err(Error::Usage(_))));
        assert!(matches!(parse_args(["-a", "KGEN", "0.1", "d"]), Err(Error::Usage(_))));
        assert!(matches!(parse_args(["-x"]), Err(Error::Usage(_))));
        assert!(matches!(parse_args(Vec::<String>::new()), Err(Error::Usage(_))));
        assert!(matches!(parse_args(["-s", "r.csv", "-c", "d.csv"]), Err(Error::Usage(_))));
        assert!(matches!(parse_args(["-e", "0", "0", "d", "c"]), Err(Error::Usage(_))));
    }

    #[test]
    fn trailing_output_option() {
        let inv = parse_args(["-c", "d.csv", "-o", "out"]).unwrap();
        assert_eq!(inv.command, Command::Config { dataset: "d.csv".into() });
        assert_eq!(inv.output, Some(PathBuf::from("out")));
        let inv = parse_args(["-s", "r.csv"]).unwrap();
        assert_eq!(inv.command, Command::Stat { results: "r.csv".into() });
    }

    #[test]
    fn run_reports_exit_codes() {
        assert_eq!(run(["-h"]), 0);
        assert_eq!(run(["-a", "KGEN", "2", "d", "c"]), 2);
        assert_eq!(run(["-c", "/nonexistent/file.csv"]), 1);
    }

    fn algorithms() -> impl Strategy<Value = Algorithm> {
        prop::sample::select(Algorithm::ALL.to_vec())
    }

    fn commands() -> impl Strategy<Value = Command> {
        let path = "[a-z][a-z0-9_./]{0,12}";
        prop_oneof![
            (algorithms(), 0u32..=1000, path, path).prop_map(|(a, t, d, c)| Command::Algorithm {
                algorithm: a,
                threshold: f64::from(t) / 1000.0,
                dataset: d.into(),
                config: c.into(),
            }),
            (1usize..50, 0u32..=1000, path, path).prop_map(|(r, t, d, c)| Command::Experiment {
                runs: r,
                threshold: f64::from(t) / 1000.0,
                dataset: d.into(),
                config: c.into(),
            }),
            path.prop_map(|p| Command::Stat { results: p.into() }),
            path.prop_map(|p| Command::Config { dataset: p.into() }),
            Just(Command::Help),
        ]
    }

    proptest! {
        #[test]
        fn render_then_parse_round_trips(
            command in commands(),
            output in proptest::option::of("[a-z]{1,8}"),
            seed in proptest::option::of(any::<u64>()),
            k in proptest::option::of(2usize..10),
            max_evals in proptest::option::of(1usize..10_000),
            algs in proptest::option::of(proptest::collection::vec(algorithms(), 1..4)),
            qis in proptest::option::of(proptest::collection::vec(1usize..20, 1..4)),
        ) {
            let mut inv = CliInvocation::new(command);
            if inv.command != Command::Help {
                inv.output = output.map(PathBuf::from);
                inv.seed = seed;
                inv.k = k;
                inv.max_evaluations = max_evals;
                inv.algorithms = algs;
                inv.qi_counts = qis;
            }
            prop_assert_eq!(parse_args(inv.render()).unwrap(), inv);
        }
    }
}
