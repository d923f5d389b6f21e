//! Comparison algorithms: uniform source selection, explore-then-commit, and
//! a UCB learner handed the best source in advance.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::environment::Environment;
use crate::error::Result;
use crate::estimators::{arm_log_term, EstimatorState, PreprocessAccumulator};
use crate::model::{argmax_lowest, AlgoParams, Phase, RunTrace, TraceLevel};
use crate::preprocess::FIXED_ARM;

/// Variance-aware arm UCB over the pooled per-source variances, with
/// `fallback[j]` standing in until source `j` has a pooled estimate.
/// Every arm must have been pulled at least once.
pub fn select_arm(
    state: &EstimatorState,
    fallback: &[f64],
    log_term: f64,
    scratch: &mut Vec<f64>,
) -> Result<usize> {
    let variances = state.plugin_variances(fallback);
    scratch.clear();
    for i in 0..state.num_arms() {
        scratch.push(state.arm_mean_ucb(i, &variances, log_term)?);
    }
    Ok(argmax_lowest(scratch))
}

/// Runs UCB with a fixed source-choice rule: every arm once, then the
/// variance-aware bound every round.
fn run_ucb<R, F>(
    env: &Environment,
    params: &AlgoParams,
    rng: &mut R,
    trace: &mut RunTrace,
    fallback: &[f64],
    mut choose_source: F,
) -> Result<EstimatorState>
where
    R: Rng + ?Sized,
    F: FnMut(&mut R) -> usize,
{
    let inst = env.instance();
    let k = inst.num_arms();
    let log_term = arm_log_term(k, params.horizon, params.delta);
    let mut state = EstimatorState::new(k, inst.num_sources());
    let mut scratch = Vec::with_capacity(k);
    let mut arm_seen = 0;
    while trace.len() < params.horizon {
        let arm = if arm_seen < k {
            arm_seen += 1;
            arm_seen - 1
        } else {
            select_arm(&state, fallback, log_term, &mut scratch)?
        };
        let source = choose_source(rng);
        let x = env.sample_reward(arm, source, rng)?;
        state.record(arm, source, x)?;
        trace.record(arm, source, x);
    }
    Ok(state)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UniformReport {
    /// `sum_j m_j var_j / t`, the noise level the arm bounds actually saw.
    pub effective_variance: f64,
    /// `(1/M) sum_j sigma_j^2` for comparison.
    pub mean_true_variance: f64,
}

/// Uniform-UCB: source drawn uniformly at random each round.
pub fn run_uniform_ucb<R: Rng + ?Sized>(
    env: &Environment,
    params: &AlgoParams,
    rng: &mut R,
    level: TraceLevel,
) -> Result<(RunTrace, UniformReport)> {
    params.validate()?;
    let inst = env.instance();
    let m = inst.num_sources();
    let fallback = vec![inst.eta_bar * inst.eta_bar; m];
    let mut trace = RunTrace::new(inst, level);
    trace.begin_phase(Phase::Adaptive);
    let state = run_ucb(env, params, rng, &mut trace, &fallback, |r| {
        r.random_range(0..m)
    })?;
    let variances = state.plugin_variances(&fallback);
    let counts = state.counts();
    let weighted: f64 = (0..m).map(|j| counts.source(j) as f64 * variances[j]).sum();
    let report = UniformReport {
        effective_variance: weighted / counts.rounds().max(1) as f64,
        mean_true_variance: inst.variances().iter().sum::<f64>() / m as f64,
    };
    Ok((trace, report))
}

/// UCB restricted to one source chosen in advance (the true lowest-variance
/// source by default).
pub fn run_oracle_ucb<R: Rng + ?Sized>(
    env: &Environment,
    params: &AlgoParams,
    source: Option<usize>,
    rng: &mut R,
    level: TraceLevel,
) -> Result<RunTrace> {
    params.validate()?;
    let inst = env.instance();
    let j = source.unwrap_or_else(|| inst.best_source());
    crate::error::check_index("source", j, inst.num_sources())?;
    let fallback = vec![inst.eta_bar * inst.eta_bar; inst.num_sources()];
    let mut trace = RunTrace::new(inst, level);
    trace.begin_phase(Phase::Adaptive);
    run_ucb(env, params, rng, &mut trace, &fallback, |_| j)?;
    Ok(trace)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EtcSourceEstimate {
    /// 1-based source id.
    pub source: usize,
    pub pulls: u64,
    /// `None` with fewer than two samples.
    pub variance: Option<f64>,
    pub width: Option<f64>,
    pub eliminated: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EtcPhaseReport {
    /// Committed source (0-based).
    pub identified_source: usize,
    /// Rounds spent identifying the source.
    pub phase1_rounds: u64,
    /// Identification finished before the horizon.
    pub completed: bool,
    pub estimates: Vec<EtcSourceEstimate>,
}

/// Confidence width of the identification phase:
/// `8 eta^2 sqrt(ln(12 M T / delta) / n)`.
pub fn etc_width(eta_bar: f64, num_sources: usize, horizon: u64, delta: f64, pulls: u64) -> f64 {
    let l = (12.0 * num_sources as f64 * horizon as f64 / delta).ln();
    8.0 * eta_bar * eta_bar * (l / pulls as f64).sqrt()
}

/// Smallest per-source sample count for a variance estimate.
pub const ETC_MIN_PULLS: u64 = 2;

/// Explore-then-commit UCB.
///
/// Phase 1 samples the active sources round-robin on [`FIXED_ARM`]. After
/// each sweep it drops every source with `LCB_j > min_k UCB_k + epsilon`
/// and stops once one source is left or every width is below `epsilon / 2`;
/// it then commits to the active source with the smallest variance estimate.
/// Phase 2 runs variance-aware UCB through the committed source alone.
pub fn run_etc_ucb<R: Rng + ?Sized>(
    env: &Environment,
    params: &AlgoParams,
    rng: &mut R,
    level: TraceLevel,
) -> Result<(RunTrace, EtcPhaseReport)> {
    params.validate()?;
    let inst = env.instance();
    let m = inst.num_sources();
    let horizon = params.horizon;
    let mut trace = RunTrace::new(inst, level);
    let mut acc = PreprocessAccumulator::new(m, FIXED_ARM);
    let mut active: Vec<usize> = (0..m).collect();
    let mut eliminated = vec![false; m];
    let mut pulls = 0u64;
    let mut completed = false;

    trace.begin_phase(Phase::SourceIdentification);
    'sweeps: loop {
        for &j in &active {
            if trace.len() >= horizon {
                break 'sweeps;
            }
            let x = env.sample_reward(FIXED_ARM, j, rng)?;
            acc.record(j, x)?;
            trace.record(FIXED_ARM, j, x);
        }
        pulls += 1;
        if pulls < ETC_MIN_PULLS {
            continue;
        }
        let width = etc_width(inst.eta_bar, m, horizon, params.delta, pulls);
        let vars: Vec<f64> = active
            .iter()
            .map(|&j| acc.source_variance(j))
            .collect::<Result<_>>()?;
        let min_ucb = vars.iter().map(|v| v + width).fold(f64::INFINITY, f64::min);
        let mut kept = Vec::with_capacity(active.len());
        for (pos, &j) in active.iter().enumerate() {
            if (vars[pos] - width).max(0.0) > min_ucb + params.epsilon {
                eliminated[j] = true;
            } else {
                kept.push(j);
            }
        }
        active = kept;
        if active.len() == 1 || width < params.epsilon / 2.0 {
            completed = true;
            break;
        }
    }
    let phase1_rounds = trace.len();

    let variance_of = |j: usize| acc.source_variance(j).unwrap_or(f64::NAN);
    let mut chosen = active[0];
    for &j in &active {
        if variance_of(j) < variance_of(chosen) {
            chosen = j;
        }
    }
    let estimates = (0..m)
        .map(|j| {
            let n = acc.count(j);
            EtcSourceEstimate {
                source: j + 1,
                pulls: n,
                variance: acc.source_variance(j).ok(),
                width: (n > 0).then(|| etc_width(inst.eta_bar, m, horizon, params.delta, n)),
                eliminated: eliminated[j],
            }
        })
        .collect();
    let report = EtcPhaseReport {
        identified_source: chosen,
        phase1_rounds,
        completed,
        estimates,
    };

    if trace.len() < horizon {
        trace.begin_phase(Phase::Commit);
        let v = variance_of(chosen);
        let fallback = vec![
            if v.is_finite() {
                v
            } else {
                inst.eta_bar * inst.eta_bar
            };
            m
        ];
        run_ucb(env, params, rng, &mut trace, &fallback, |_| chosen)?;
    }
    Ok((trace, report))
}
