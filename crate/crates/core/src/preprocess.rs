//! Source pruning: sample every source on one fixed arm, then drop each
//! source whose variance lower bound exceeds the smallest upper bound.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::environment::Environment;
use crate::error::{Error, Result};
use crate::estimators::{
    preproc_log_term, preproc_var_lcb, preproc_var_ucb, PreprocessAccumulator,
};
use crate::model::{AlgoParams, Phase, RunTrace};

/// Arm used for every preprocessing pull.
pub const FIXED_ARM: usize = 0;

/// Per-source budget `ceil(1024 eta^4 ln(12M/delta) / c*^4)` after which every
/// source with variance above `sigma*^2 + c*^2` is eliminated w.h.p.
pub fn required_preproc_budget(
    num_sources: usize,
    delta: f64,
    c_star: f64,
    eta_bar: f64,
) -> Result<u64> {
    if num_sources == 0 {
        return Err(Error::InvalidParameter("need at least one source".into()));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "delta must lie in (0, 1), got {delta}"
        )));
    }
    if !(c_star > 0.0 && eta_bar > 0.0) {
        return Err(Error::InvalidParameter(
            "c_star and eta_bar must be positive".into(),
        ));
    }
    let raw = 1024.0 * eta_bar.powi(4) * preproc_log_term(num_sources, delta) / c_star.powi(4);
    Ok((raw.ceil() as u64).max(2))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SourceEstimate {
    /// 1-based source id.
    pub source: usize,
    pub variance: f64,
    pub ucb: f64,
    pub lcb: f64,
    pub eliminated: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PreprocessReport {
    /// Surviving sources, 0-based, ascending.
    pub surviving: Vec<usize>,
    pub estimates: Vec<SourceEstimate>,
    pub tau_p: u64,
    pub fixed_arm: usize,
    /// `M * tau_p`.
    pub pulls: u64,
    /// Smallest upper bound across sources; the elimination threshold.
    pub min_ucb: f64,
}

impl PreprocessReport {
    pub fn num_surviving(&self) -> usize {
        self.surviving.len()
    }

    pub fn survives(&self, source: usize) -> bool {
        self.surviving.binary_search(&source).is_ok()
    }

    pub fn variance(&self, source: usize) -> f64 {
        self.estimates[source].variance
    }

    pub fn lcb(&self, source: usize) -> f64 {
        self.estimates[source].lcb
    }
}

/// Pulls each source `tau_p` times on [`FIXED_ARM`] (source by source, in
/// index order), then eliminates every source with `LCB_j > min_k UCB_k`.
/// All pulls are charged to `trace` under [`Phase::Preprocess`].
pub fn run_preprocess<R: Rng + ?Sized>(
    env: &Environment,
    params: &AlgoParams,
    tau_p: u64,
    rng: &mut R,
    trace: &mut RunTrace,
) -> Result<(PreprocessReport, PreprocessAccumulator)> {
    let out = run_preprocess_within(env, params, tau_p, rng, trace, u64::MAX)?;
    Ok(out.expect("uncapped preprocessing always completes"))
}

/// Like [`run_preprocess`], but stops once `trace` holds `max_rounds` rounds.
/// Returns `None` when the cap cut the sampling short.
pub fn run_preprocess_within<R: Rng + ?Sized>(
    env: &Environment,
    params: &AlgoParams,
    tau_p: u64,
    rng: &mut R,
    trace: &mut RunTrace,
    max_rounds: u64,
) -> Result<Option<(PreprocessReport, PreprocessAccumulator)>> {
    if tau_p < 2 {
        return Err(Error::InvalidParameter(format!(
            "preprocessing budget must be at least 2 pulls per source, got {tau_p}"
        )));
    }
    let inst = env.instance();
    let num_sources = inst.num_sources();
    let mut acc = PreprocessAccumulator::new(num_sources, FIXED_ARM);
    trace.begin_phase(Phase::Preprocess);
    for j in 0..num_sources {
        for _ in 0..tau_p {
            if trace.len() >= max_rounds {
                return Ok(None);
            }
            let x = env.sample_reward(FIXED_ARM, j, rng)?;
            acc.record(j, x)?;
            trace.record(FIXED_ARM, j, x);
        }
    }
    let report = eliminate(&acc, inst.eta_bar, params.delta, tau_p)?;
    Ok(Some((report, acc)))
}

/// Applies the elimination rule to already collected samples.
pub fn eliminate(
    acc: &PreprocessAccumulator,
    eta_bar: f64,
    delta: f64,
    tau_p: u64,
) -> Result<PreprocessReport> {
    let num_sources = acc.moments_len();
    let mut estimates = Vec::with_capacity(num_sources);
    for j in 0..num_sources {
        let variance = acc.source_variance(j)?;
        estimates.push(SourceEstimate {
            source: j + 1,
            variance,
            ucb: preproc_var_ucb(variance, eta_bar, num_sources, delta, tau_p)?,
            lcb: preproc_var_lcb(variance, eta_bar, num_sources, delta, tau_p)?,
            eliminated: false,
        });
    }
    let min_ucb = estimates
        .iter()
        .map(|e| e.ucb)
        .fold(f64::INFINITY, f64::min);
    let mut surviving = Vec::new();
    for (j, e) in estimates.iter_mut().enumerate() {
        e.eliminated = e.lcb > min_ucb;
        if !e.eliminated {
            surviving.push(j);
        }
    }
    Ok(PreprocessReport {
        surviving,
        estimates,
        tau_p,
        fixed_arm: acc.fixed_arm(),
        pulls: tau_p * num_sources as u64,
        min_ucb,
    })
}
