//! Ready-made experiment matrices.

use std::path::PathBuf;

use crate::environment::{MeanRange, NoiseSettings};
use crate::error::{Error, Result};
use crate::harness::config::{AlgorithmKind, ExperimentConfig, InstanceSpec, Values};
use crate::harness::movielens::ReplayMode;
use crate::model::{AlgoParams, NoiseFamily};
use crate::soar::{Regime, SoarConfig};

pub const BENCH_NAMES: [&str; 4] = ["varying-k", "varying-m", "wc1", "wc2"];

fn gaussian() -> NoiseSettings {
    NoiseSettings {
        family: NoiseFamily::Gaussian,
        kappa_known: true,
        eta_bar: None,
    }
}

/// Preprocessing budget used by the scaling sweeps. At `T = 10^4` the
/// prescribed budget exceeds the horizon for every configuration.
pub const SWEEP_TAU_P: u64 = 100;

fn sweep(name: String, instance: InstanceSpec, reps: usize, seed: u64) -> ExperimentConfig {
    ExperimentConfig {
        name,
        horizon: 10_000,
        repetitions: reps,
        master_seed: seed,
        output_dir: None,
        save_traces: false,
        algorithms: vec![AlgorithmKind::Soar],
        instance,
        params: AlgoParams {
            delta: 0.1,
            c_star: 2.0,
            nu: 30.0,
            ..AlgoParams::default()
        },
        soar: SoarConfig {
            tau_p: Some(SWEEP_TAU_P),
            ..SoarConfig::default()
        },
    }
}

/// `M = 3` sources with variances 5, 1, 10 and `K` means drawn from
/// `[1, 10]` to one decimal. All three share one instance stream, so the
/// smaller arm sets are prefixes of the larger ones.
pub fn varying_k(reps: usize, seed: u64) -> Vec<ExperimentConfig> {
    [5, 15, 30]
        .into_iter()
        .map(|k| {
            let instance = InstanceSpec::Random {
                arm_means: Values::Uniform {
                    count: k,
                    low: 1.0,
                    high: 10.0,
                    round_decimals: Some(1),
                },
                variances: Values::List(vec![5.0, 1.0, 10.0]),
                mu_bar: None,
                noise: gaussian(),
            };
            sweep(format!("varying-k-{k}"), instance, reps, seed)
        })
        .collect()
}

/// Means fixed to `[1, 5, 8, 6, 4]`, `M` variances drawn from `[1, 3]` to
/// one decimal.
pub fn varying_m(reps: usize, seed: u64) -> Vec<ExperimentConfig> {
    [5, 15, 30]
        .into_iter()
        .map(|m| {
            let instance = InstanceSpec::Random {
                arm_means: Values::List(vec![1.0, 5.0, 8.0, 6.0, 4.0]),
                variances: Values::Uniform {
                    count: m,
                    low: 1.0,
                    high: 3.0,
                    round_decimals: Some(1),
                },
                mu_bar: None,
                noise: gaussian(),
            };
            sweep(format!("varying-m-{m}"), instance, reps, seed)
        })
        .collect()
}

/// `K = 5`, `M = 3`: one source with variance 1, two with variance 10,
/// means in `[0, 1]`, `T = 20000`. Runs SOAR, Uniform-UCB and the best-source
/// oracle.
pub fn wc1(reps: usize, seed: u64) -> ExperimentConfig {
    ExperimentConfig {
        name: "wc1".into(),
        horizon: 20_000,
        repetitions: reps,
        master_seed: seed,
        output_dir: None,
        save_traces: false,
        algorithms: vec![
            AlgorithmKind::Soar,
            AlgorithmKind::Uucb,
            AlgorithmKind::Oracle,
        ],
        instance: InstanceSpec::Wc1 {
            num_arms: 5,
            num_sources: 3,
            sigma_max_sq: 10.0,
            sigma_star_sq: 1.0,
            means: MeanRange::new(0.0, 1.0),
            noise: gaussian(),
        },
        params: AlgoParams {
            delta: 0.1,
            c_star: 4.0,
            nu: 100.0,
            ..AlgoParams::default()
        },
        soar: SoarConfig {
            regime: Regime::Standard,
            ..SoarConfig::default()
        },
    }
}

/// `K = 10`, `M = 8`: variances rising linearly from 1 to 1.7, means in
/// `[0, 1]`, `T = 20000`. Runs SOAR and explore-then-commit with
/// `epsilon = 0.1`.
pub fn wc2(reps: usize, seed: u64) -> ExperimentConfig {
    ExperimentConfig {
        name: "wc2".into(),
        horizon: 20_000,
        repetitions: reps,
        master_seed: seed,
        output_dir: None,
        save_traces: false,
        algorithms: vec![AlgorithmKind::Soar, AlgorithmKind::Etc],
        instance: InstanceSpec::Wc2 {
            num_arms: 10,
            num_sources: 8,
            base_variance: 1.0,
            spread: 0.7,
            means: MeanRange::new(0.0, 1.0),
            noise: gaussian(),
        },
        params: AlgoParams {
            delta: 0.1,
            c_star: 2.0,
            nu: 30.0,
            epsilon: 0.1,
            ..AlgoParams::default()
        },
        soar: SoarConfig::default(),
    }
}

/// Panel of 15 reviewers sharing 500 movies, `T = 20000`, `c* = 1`,
/// `nu = 30`. Runs SOAR and both baselines.
pub fn movielens(ratings_path: PathBuf, reps: usize, seed: u64) -> ExperimentConfig {
    ExperimentConfig {
        name: "movielens".into(),
        horizon: 20_000,
        repetitions: reps,
        master_seed: seed,
        output_dir: None,
        save_traces: false,
        algorithms: vec![AlgorithmKind::Soar, AlgorithmKind::Uucb, AlgorithmKind::Etc],
        instance: InstanceSpec::Movielens {
            ratings_path,
            num_reviewers: 15,
            num_movies: 500,
            replay: ReplayMode::Gaussian,
            kappa_known: false,
        },
        params: AlgoParams {
            delta: 0.1,
            c_star: 1.0,
            nu: 30.0,
            ..AlgoParams::default()
        },
        soar: SoarConfig::default(),
    }
}

/// Experiments of a named matrix.
pub fn bench(name: &str, reps: usize, seed: u64) -> Result<Vec<ExperimentConfig>> {
    match name {
        "varying-k" => Ok(varying_k(reps, seed)),
        "varying-m" => Ok(varying_m(reps, seed)),
        "wc1" => Ok(vec![wc1(reps, seed)]),
        "wc2" => Ok(vec![wc2(reps, seed)]),
        "all" => Ok([
            varying_k(reps, seed),
            varying_m(reps, seed),
            vec![wc1(reps, seed), wc2(reps, seed)],
        ]
        .concat()),
        other => Err(Error::Config(format!(
            "unknown bench `{other}`; expected one of {} or all",
            BENCH_NAMES.join(", ")
        ))),
    }
}
