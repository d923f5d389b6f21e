//! Per-algorithm summaries across repetitions.

use serde::{Deserialize, Serialize};

use crate::harness::config::{AlgorithmKind, ExperimentConfig};
use crate::harness::movielens::PanelInfo;
use crate::harness::runner::RunRecord;
use crate::model::{Phase, ProblemInstance};

/// Normal-approximation 95% interval multiplier.
pub const Z_95: f64 = 1.96;

/// Sample mean with `mean +- 1.96 sd / sqrt(R)` bounds.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub mean: f64,
    /// Sample standard deviation (zero for a single value).
    pub sd: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

impl Interval {
    pub fn from_samples(xs: &[f64]) -> Self {
        let n = xs.len();
        if n == 0 {
            return Self {
                mean: 0.0,
                sd: 0.0,
                ci_low: 0.0,
                ci_high: 0.0,
            };
        }
        let mean = xs.iter().sum::<f64>() / n as f64;
        let sd = if n > 1 {
            (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        } else {
            0.0
        };
        let half = Z_95 * sd / (n as f64).sqrt();
        Self {
            mean,
            sd,
            ci_low: mean - half,
            ci_high: mean + half,
        }
    }

    pub fn overlaps(&self, other: &Interval) -> bool {
        self.ci_low <= other.ci_high && other.ci_low <= self.ci_high
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub round: u64,
    pub mean: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseTotal {
    pub phase: Phase,
    pub mean_rounds: f64,
    pub regret: Interval,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlgorithmAggregate {
    pub algorithm: AlgorithmKind,
    pub repetitions: usize,
    pub final_regret: Interval,
    pub exploration_regret: Interval,
    pub adaptive_regret: Interval,
    pub phase_totals: Vec<PhaseTotal>,
    /// Mean pulls per arm.
    pub arm_pulls: Vec<f64>,
    /// Mean pulls per source.
    pub source_pulls: Vec<f64>,
    /// Mean pulls per source outside the exploration phases.
    pub adaptive_source_pulls: Vec<f64>,
    /// Mean share of post-exploration pulls that used the best source.
    pub best_source_share: Option<f64>,
    /// Mean cumulative regret per round; exported as CSV, not JSON.
    #[serde(skip)]
    pub curve: Vec<CurvePoint>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AggregateResult {
    pub name: String,
    pub horizon: u64,
    pub repetitions: usize,
    pub master_seed: u64,
    pub instance: ProblemInstance,
    /// 1-based.
    pub best_arm: usize,
    /// 1-based.
    pub best_source: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub panel: Option<PanelInfo>,
    pub algorithms: Vec<AlgorithmAggregate>,
}

impl AggregateResult {
    pub fn algorithm(&self, kind: AlgorithmKind) -> Option<&AlgorithmAggregate> {
        self.algorithms.iter().find(|a| a.algorithm == kind)
    }
}

fn mean_columns(rows: &[&[u64]]) -> Vec<f64> {
    let width = rows.first().map_or(0, |r| r.len());
    (0..width)
        .map(|c| rows.iter().map(|r| r[c] as f64).sum::<f64>() / rows.len() as f64)
        .collect()
}

/// Pointwise mean curve with its interval band.
pub fn curve_band(curves: &[&[f64]]) -> Vec<CurvePoint> {
    let len = curves.iter().map(|c| c.len()).min().unwrap_or(0);
    let mut column = vec![0.0; curves.len()];
    (0..len)
        .map(|t| {
            for (slot, c) in column.iter_mut().zip(curves) {
                *slot = c[t];
            }
            let iv = Interval::from_samples(&column);
            CurvePoint {
                round: t as u64 + 1,
                mean: iv.mean,
                ci_low: iv.ci_low,
                ci_high: iv.ci_high,
            }
        })
        .collect()
}

fn aggregate_algorithm(
    kind: AlgorithmKind,
    runs: &[&RunRecord],
    best_source: usize,
) -> AlgorithmAggregate {
    let finals: Vec<f64> = runs.iter().map(|r| r.final_regret).collect();
    let explore: Vec<f64> = runs.iter().map(|r| r.exploration_regret).collect();
    let adaptive: Vec<f64> = runs.iter().map(|r| r.adaptive_regret()).collect();

    let mut phases: Vec<Phase> = Vec::new();
    for r in runs {
        for p in &r.phases {
            if !phases.contains(&p.phase) {
                phases.push(p.phase);
            }
        }
    }
    let phase_totals = phases
        .into_iter()
        .map(|phase| {
            let regrets: Vec<f64> = runs.iter().map(|r| r.phase_regret(phase)).collect();
            let rounds: f64 = runs
                .iter()
                .flat_map(|r| r.phases.iter().filter(move |p| p.phase == phase))
                .map(|p| p.rounds as f64)
                .sum();
            PhaseTotal {
                phase,
                mean_rounds: rounds / runs.len() as f64,
                regret: Interval::from_samples(&regrets),
            }
        })
        .collect();

    let num_sources = runs.first().map_or(0, |r| r.source_pulls.len());
    let adaptive_pulls: Vec<Vec<u64>> = runs
        .iter()
        .map(|r| {
            let mut v = vec![0u64; num_sources];
            for p in r.phases.iter().filter(|p| !p.phase.is_exploration()) {
                for (slot, c) in v.iter_mut().zip(&p.source_pulls) {
                    *slot += c;
                }
            }
            v
        })
        .collect();
    let shares: Vec<f64> = runs
        .iter()
        .filter_map(|r| r.adaptive_share(best_source))
        .collect();

    AlgorithmAggregate {
        algorithm: kind,
        repetitions: runs.len(),
        final_regret: Interval::from_samples(&finals),
        exploration_regret: Interval::from_samples(&explore),
        adaptive_regret: Interval::from_samples(&adaptive),
        phase_totals,
        arm_pulls: mean_columns(
            &runs
                .iter()
                .map(|r| r.arm_pulls.as_slice())
                .collect::<Vec<_>>(),
        ),
        source_pulls: mean_columns(
            &runs
                .iter()
                .map(|r| r.source_pulls.as_slice())
                .collect::<Vec<_>>(),
        ),
        adaptive_source_pulls: mean_columns(
            &adaptive_pulls
                .iter()
                .map(|v| v.as_slice())
                .collect::<Vec<_>>(),
        ),
        best_source_share: (!shares.is_empty())
            .then(|| shares.iter().sum::<f64>() / shares.len() as f64),
        curve: curve_band(&runs.iter().map(|r| r.curve.as_slice()).collect::<Vec<_>>()),
    }
}

/// Reduces the runs in config order; the result does not depend on the
/// order the runs finished in.
pub fn aggregate(
    config: &ExperimentConfig,
    instance: &ProblemInstance,
    panel: Option<PanelInfo>,
    runs: &[RunRecord],
) -> AggregateResult {
    let best_source = instance.best_source();
    let algorithms = config
        .algorithms
        .iter()
        .map(|&kind| {
            let mut mine: Vec<&RunRecord> = runs.iter().filter(|r| r.algorithm == kind).collect();
            mine.sort_by_key(|r| r.repetition);
            aggregate_algorithm(kind, &mine, best_source)
        })
        .collect();
    AggregateResult {
        name: config.name.clone(),
        horizon: config.horizon,
        repetitions: config.repetitions,
        master_seed: config.master_seed,
        instance: instance.clone(),
        best_arm: instance.best_arm() + 1,
        best_source: best_source + 1,
        panel,
        algorithms,
    }
}
