//! Seeded repetitions of every configured algorithm.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baselines::{
    run_etc_ucb, run_oracle_ucb, run_uniform_ucb, EtcPhaseReport, UniformReport,
};
use crate::environment::{Environment, RngStream};
use crate::error::Result;
use crate::harness::aggregate::{aggregate, AggregateResult};
use crate::harness::config::{AlgorithmKind, BuiltInstance, ExperimentConfig};
use crate::model::{Phase, PhaseSpan, RunTrace, TraceLevel};
use crate::soar::{run_soar, SoarConfig, SoarSummary};

/// Stream feeding the instance factory.
pub const INSTANCE_STREAM: u64 = 0;

/// Stream of repetition `rep`; every algorithm sees the same one.
pub fn repetition_stream(master_seed: u64, rep: usize) -> RngStream {
    RngStream::new(master_seed, 1 + rep as u64)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "algorithm", rename_all = "kebab-case")]
pub enum RunDetail {
    Soar(SoarSummary),
    Uucb(UniformReport),
    Etc(EtcPhaseReport),
    Oracle { source: usize },
}

/// Outcome of one (algorithm, repetition) pair.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub algorithm: AlgorithmKind,
    pub repetition: usize,
    pub final_regret: f64,
    pub exploration_regret: f64,
    pub phases: Vec<PhaseSpan>,
    pub arm_pulls: Vec<u64>,
    pub source_pulls: Vec<u64>,
    pub detail: RunDetail,
    /// Cumulative regret after every round.
    #[serde(skip)]
    pub curve: Vec<f64>,
    /// Full per-round log, kept only when traces are saved.
    #[serde(skip)]
    pub trace: Option<RunTrace>,
}

impl RunRecord {
    /// Pulls of `source` outside the exploration phases, over all such pulls.
    pub fn adaptive_share(&self, source: usize) -> Option<f64> {
        let (mut hit, mut all) = (0u64, 0u64);
        for p in self.phases.iter().filter(|p| !p.phase.is_exploration()) {
            hit += p.source_pulls[source];
            all += p.rounds;
        }
        (all > 0).then(|| hit as f64 / all as f64)
    }

    pub fn adaptive_regret(&self) -> f64 {
        self.final_regret - self.exploration_regret
    }

    pub fn phase_regret(&self, phase: Phase) -> f64 {
        self.phases
            .iter()
            .filter(|p| p.phase == phase)
            .map(|p| p.regret)
            .sum()
    }
}

/// Runs one algorithm once.
pub fn run_algorithm(
    kind: AlgorithmKind,
    env: &Environment,
    soar: &SoarConfig,
    rng: &mut RngStream,
    level: TraceLevel,
) -> Result<(RunTrace, RunDetail)> {
    let params = &soar.params;
    Ok(match kind {
        AlgorithmKind::Soar => {
            let run = run_soar(env, soar, rng, level)?;
            (run.trace, RunDetail::Soar(run.summary))
        }
        AlgorithmKind::Uucb => {
            let (trace, rep) = run_uniform_ucb(env, params, rng, level)?;
            (trace, RunDetail::Uucb(rep))
        }
        AlgorithmKind::Etc => {
            let (trace, rep) = run_etc_ucb(env, params, rng, level)?;
            (trace, RunDetail::Etc(rep))
        }
        AlgorithmKind::Oracle => {
            let source = env.instance().best_source();
            let trace = run_oracle_ucb(env, params, Some(source), rng, level)?;
            (trace, RunDetail::Oracle { source: source + 1 })
        }
    })
}

fn record(
    kind: AlgorithmKind,
    rep: usize,
    mut trace: RunTrace,
    detail: RunDetail,
    keep_trace: bool,
) -> RunRecord {
    let curve = trace.take_curve();
    RunRecord {
        algorithm: kind,
        repetition: rep,
        final_regret: trace.cumulative_regret(),
        exploration_regret: trace.exploration_regret(),
        phases: trace.phases().to_vec(),
        arm_pulls: trace.arm_pulls().to_vec(),
        source_pulls: trace.source_pulls().to_vec(),
        detail,
        curve,
        trace: keep_trace.then_some(trace),
    }
}

/// Everything produced by one experiment.
#[derive(Clone, Debug)]
pub struct ExperimentOutput {
    pub config: ExperimentConfig,
    pub built: BuiltInstance,
    pub result: AggregateResult,
    /// Ordered by algorithm (config order), then repetition.
    pub runs: Vec<RunRecord>,
}

/// Builds the instance, runs every algorithm for every repetition and
/// aggregates. `level` applies to every run; traces are kept whenever the
/// config asks to save them.
pub fn run_experiment_at(config: &ExperimentConfig, level: TraceLevel) -> Result<ExperimentOutput> {
    config.validate()?;
    let built = config
        .instance
        .build(&mut RngStream::new(config.master_seed, INSTANCE_STREAM))?;
    let level = if config.save_traces {
        TraceLevel::Full
    } else {
        level
    };
    let soar = config.soar_config();
    let jobs: Vec<(AlgorithmKind, usize)> = config
        .algorithms
        .iter()
        .flat_map(|&a| (0..config.repetitions).map(move |r| (a, r)))
        .collect();
    let runs = jobs
        .par_iter()
        .map(|&(kind, rep)| {
            let mut rng = repetition_stream(config.master_seed, rep);
            let (trace, detail) = run_algorithm(kind, &built.env, &soar, &mut rng, level)?;
            Ok(record(kind, rep, trace, detail, config.save_traces))
        })
        .collect::<Result<Vec<_>>>()?;
    let result = aggregate(config, built.instance(), built.panel.clone(), &runs);
    Ok(ExperimentOutput {
        config: config.clone(),
        built,
        result,
        runs,
    })
}

/// [`run_experiment_at`] keeping per-round regret curves.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentOutput> {
    run_experiment_at(config, TraceLevel::Curve)
}
