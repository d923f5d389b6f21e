//! `soar`: run bandit experiments and concentration checks from the shell.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};
use soar_core::error::Error;
use soar_core::harness::config::{BenchConfig, ExperimentConfig, InstanceSpec};
use soar_core::harness::export::export_results;
use soar_core::harness::movielens::ReplayMode;
use soar_core::harness::presets;
use soar_core::harness::runner::run_experiment;
use soar_core::harness::validate::{validate_concentration, ConcentrationSetup, Lemma};

/// Environment variable that overrides the output directory of a config.
const OUT_DIR_ENV: &str = "SOAR_OUT_DIR";
const DEFAULT_OUT_DIR: &str = "results";

#[derive(Parser, Debug)]
#[command(
    name = "soar",
    version,
    about = "Joint arm and source selection bandit experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct RunFlags {
    /// Master seed; overrides the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Repetitions per algorithm; overrides the config.
    #[arg(long)]
    reps: Option<usize>,
    /// Output directory; takes precedence over SOAR_OUT_DIR and the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write one raw trace CSV per run.
    #[arg(long)]
    save_traces: bool,
    /// Let SOAR run with exploration phases cut short by the horizon.
    #[arg(long)]
    allow_truncated_exploration: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run one experiment described by a TOML config.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        flags: RunFlags,
    },
    /// Run a built-in matrix (varying-k, varying-m, wc1, wc2, all) or a TOML list of experiments.
    Bench {
        /// Name of a built-in matrix.
        #[arg(required_unless_present = "config", conflicts_with = "config")]
        name: Option<String>,
        /// TOML file with an `[[experiments]]` array.
        #[arg(long)]
        config: Option<PathBuf>,
        #[command(flatten)]
        flags: RunFlags,
    },
    /// Build a reviewer panel from a MovieLens ratings file and run SOAR against both baselines.
    Movielens {
        /// `userId,movieId,rating,timestamp` CSV.
        #[arg(long, required_unless_present = "config")]
        ratings: Option<PathBuf>,
        /// TOML config with a movielens instance; replaces the built-in one.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 15)]
        reviewers: usize,
        #[arg(long, default_value_t = 500)]
        movies: usize,
        /// Reward model: Gaussian fit per reviewer or resampled residuals.
        #[arg(long, value_parser = ["gaussian", "residual"], default_value = "gaussian")]
        replay: String,
        #[command(flatten)]
        flags: RunFlags,
    },
    /// Monte-Carlo coverage of the concentration bounds.
    Validate {
        /// Check id, or `all`.
        #[arg(long, default_value = "all")]
        lemma: String,
        #[arg(long, default_value_t = 2000)]
        trials: u64,
        /// TOML file with a concentration setup.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        /// Also write the reports to `<out>/validate.json`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn output_root(flag: Option<&Path>, config: Option<&Path>) -> PathBuf {
    if let Some(p) = flag {
        return p.to_path_buf();
    }
    if let Some(p) = std::env::var_os(OUT_DIR_ENV).filter(|v| !v.is_empty()) {
        return PathBuf::from(p);
    }
    config.map_or_else(|| PathBuf::from(DEFAULT_OUT_DIR), Path::to_path_buf)
}

fn apply_flags(cfg: &mut ExperimentConfig, flags: &RunFlags) {
    if let Some(seed) = flags.seed {
        cfg.master_seed = seed;
    }
    if let Some(reps) = flags.reps {
        cfg.repetitions = reps;
    }
    if flags.save_traces {
        cfg.save_traces = true;
    }
    if flags.allow_truncated_exploration {
        cfg.soar.allow_truncated_exploration = true;
    }
}

/// Runs one experiment and writes its files to `dir`.
fn run_one(cfg: &ExperimentConfig, dir: &Path) -> Result<Value, Error> {
    let output = run_experiment(cfg)?;
    let paths = export_results(&output, dir)?;
    let finals: serde_json::Map<String, Value> = output
        .result
        .algorithms
        .iter()
        .map(|a| {
            (
                a.algorithm.name().to_string(),
                json!({
                    "mean": a.final_regret.mean,
                    "ci_low": a.final_regret.ci_low,
                    "ci_high": a.final_regret.ci_high,
                }),
            )
        })
        .collect();
    Ok(json!({
        "experiment": cfg.name,
        "horizon": cfg.horizon,
        "repetitions": cfg.repetitions,
        "master_seed": cfg.master_seed,
        "curves": paths.curves,
        "summary": paths.summary,
        "traces": paths.traces.len(),
        "final_regret": finals,
    }))
}

/// Each experiment goes to `<root>/<name>`, or straight to `<root>` when it is alone and unnamed.
fn run_many(configs: Vec<ExperimentConfig>, flags: &RunFlags) -> Result<Vec<Value>, Error> {
    let single = configs.len() == 1;
    configs
        .into_iter()
        .map(|mut cfg| {
            apply_flags(&mut cfg, flags);
            let root = output_root(flags.out.as_deref(), cfg.output_dir.as_deref());
            let dir = if single && cfg.name.is_empty() {
                root
            } else {
                root.join(&cfg.name)
            };
            run_one(&cfg, &dir)
        })
        .collect()
}

fn execute(cli: Cli) -> Result<Value, Error> {
    match cli.command {
        Command::Simulate { config, flags } => {
            let cfg = ExperimentConfig::from_path(&config)?;
            Ok(Value::Array(run_many(vec![cfg], &flags)?))
        }
        Command::Bench {
            name,
            config,
            flags,
        } => {
            let reps = flags.reps.unwrap_or(20);
            let seed = flags.seed.unwrap_or(0);
            let configs = match (name, config) {
                (_, Some(path)) => BenchConfig::from_path(&path)?.experiments,
                (Some(name), None) => presets::bench(&name, reps, seed)?,
                (None, None) => unreachable!("clap requires a name or a config"),
            };
            Ok(Value::Array(run_many(configs, &flags)?))
        }
        Command::Movielens {
            ratings,
            config,
            reviewers,
            movies,
            replay,
            flags,
        } => {
            let mut cfg = match &config {
                Some(path) => ExperimentConfig::from_path(path)?,
                None => presets::movielens(
                    PathBuf::new(),
                    flags.reps.unwrap_or(10),
                    flags.seed.unwrap_or(0),
                ),
            };
            match &mut cfg.instance {
                InstanceSpec::Movielens {
                    ratings_path,
                    num_reviewers,
                    num_movies,
                    replay: mode,
                    ..
                } => {
                    if let Some(r) = ratings {
                        *ratings_path = r;
                    }
                    if config.is_none() {
                        *num_reviewers = reviewers;
                        *num_movies = movies;
                        *mode = if replay == "residual" {
                            ReplayMode::Residual
                        } else {
                            ReplayMode::Gaussian
                        };
                    }
                }
                _ => {
                    return Err(Error::Config(
                        "movielens needs a config with a movielens instance".into(),
                    ))
                }
            }
            Ok(Value::Array(run_many(vec![cfg], &flags)?))
        }
        Command::Validate {
            lemma,
            trials,
            config,
            seed,
            out,
        } => {
            let mut setup = match config {
                Some(path) => {
                    let text = std::fs::read_to_string(&path)?;
                    toml::from_str::<ConcentrationSetup>(&text)
                        .map_err(|e| Error::Config(e.to_string()))?
                }
                None => ConcentrationSetup::default(),
            };
            if let Some(seed) = seed {
                setup.seed = seed;
            }
            let lemmas = if lemma == "all" {
                Lemma::ALL.to_vec()
            } else {
                vec![Lemma::parse(&lemma)?]
            };
            let reports = lemmas
                .into_iter()
                .map(|l| validate_concentration(l, trials, &setup))
                .collect::<Result<Vec<_>, _>>()?;
            let value = serde_json::to_value(&reports)?;
            if let Some(dir) = out {
                std::fs::create_dir_all(&dir)?;
                let mut text = serde_json::to_string_pretty(&value)?;
                text.push('\n');
                std::fs::write(dir.join("validate.json"), text)?;
            }
            Ok(value)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let body = json!({ "error": { "kind": "usage", "message": e.to_string().trim_end() } });
            eprintln!("{body}");
            return ExitCode::from(2);
        }
    };
    match execute(cli) {
        Ok(value) => {
            let text = serde_json::to_string_pretty(&value).expect("serializable output");
            // A closed pipe on stdout is not a failure of the run.
            let _ = writeln!(std::io::stdout(), "{text}");
            ExitCode::SUCCESS
        }
        Err(err) => {
            let body = json!({ "error": { "kind": err.kind(), "message": err.to_string() } });
            eprintln!("{body}");
            ExitCode::FAILURE
        }
    }
}
