//! Mean and variance estimators with their confidence bounds.
//!
//! Two estimator families are kept apart. [`PreprocessAccumulator`] holds
//! the fixed-arm samples gathered while pruning sources; [`EstimatorState`]
//! holds everything pulled afterwards and backs the adaptive bounds.
//! Both accumulate per-cell running moments (Welford), so every estimate is
//! available in O(1) without storing samples.

use serde::{Deserialize, Serialize};

use crate::error::{check_index, Error, Result};
use crate::model::CountTable;

/// Count, mean and sum of squared deviations of a sample stream.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RunningMoments {
    n: u64,
    mean: f64,
    m2: f64,
}

impl RunningMoments {
    /// Builds the moments of `n` samples from their mean and sum of squared
    /// deviations.
    pub fn from_parts(n: u64, mean: f64, sum_sq_dev: f64) -> Self {
        if n == 0 {
            return Self::default();
        }
        Self {
            n,
            mean,
            m2: sum_sq_dev.max(0.0),
        }
    }

    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let delta = x - self.mean;
        self.mean += delta / self.n as f64;
        self.m2 += delta * (x - self.mean);
    }

    /// Chan et al. parallel merge.
    pub fn merge(&mut self, other: &RunningMoments) {
        if other.n == 0 {
            return;
        }
        if self.n == 0 {
            *self = *other;
            return;
        }
        let n = self.n + other.n;
        let delta = other.mean - self.mean;
        let w = other.n as f64 / n as f64;
        self.mean += delta * w;
        self.m2 += other.m2 + delta * delta * self.n as f64 * w;
        self.n = n;
    }

    pub fn count(&self) -> u64 {
        self.n
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Sum of squared deviations from the running mean.
    pub fn sum_sq_dev(&self) -> f64 {
        self.m2.max(0.0)
    }
}

/// `ln(12 M / delta)`, the preprocessing union-bound term.
pub fn preproc_log_term(num_sources: usize, delta: f64) -> f64 {
    (12.0 * num_sources as f64 / delta).ln()
}

/// `ln(3 M T / delta)`, the adaptive source-variance term.
pub fn source_log_term(num_sources: usize, horizon: u64, delta: f64) -> f64 {
    (3.0 * num_sources as f64 * horizon as f64 / delta).ln()
}

/// `ln(3 K T / delta)`, the arm-mean term.
pub fn arm_log_term(num_arms: usize, horizon: u64, delta: f64) -> f64 {
    (3.0 * num_arms as f64 * horizon as f64 / delta).ln()
}

/// Half-width `8 eta^2 sqrt(ln(12M/delta) / tau_p)` of the preprocessing
/// variance interval.
pub fn preproc_width(eta_bar: f64, num_sources: usize, delta: f64, tau_p: u64) -> Result<f64> {
    if tau_p == 0 {
        return Err(Error::InvalidParameter(
            "preprocessing budget must be positive".into(),
        ));
    }
    Ok(8.0 * eta_bar * eta_bar * (preproc_log_term(num_sources, delta) / tau_p as f64).sqrt())
}

pub fn preproc_var_ucb(
    var_pre: f64,
    eta_bar: f64,
    num_sources: usize,
    delta: f64,
    tau_p: u64,
) -> Result<f64> {
    Ok(var_pre + preproc_width(eta_bar, num_sources, delta, tau_p)?)
}

/// Clamped at zero.
pub fn preproc_var_lcb(
    var_pre: f64,
    eta_bar: f64,
    num_sources: usize,
    delta: f64,
    tau_p: u64,
) -> Result<f64> {
    Ok((var_pre - preproc_width(eta_bar, num_sources, delta, tau_p)?).max(0.0))
}

/// Fourth-moment proxy: `max(kappa, nu)` when kappa is known, otherwise
/// `max(eta^2 * pooled_var, nu)`.
pub fn q_value(kappa: Option<f64>, pooled_var: f64, eta_bar: f64, nu: f64) -> f64 {
    match kappa {
        Some(k) => k.max(nu),
        None => (eta_bar * eta_bar * pooled_var).max(nu),
    }
}

/// `pooled_var - 2 sqrt(q * log_term / (m_j - K))`, or `-inf` while
/// `m_j <= K` so that under-sampled sources win the argmin.
pub fn source_var_lcb(
    pooled_var: f64,
    q: f64,
    source_pulls: u64,
    num_arms: usize,
    log_term: f64,
) -> f64 {
    if source_pulls <= num_arms as u64 {
        return f64::NEG_INFINITY;
    }
    let dof = (source_pulls - num_arms as u64) as f64;
    pooled_var - 2.0 * (q * log_term / dof).sqrt()
}

/// `mean + 2 sqrt(2 log_term * sum_j n_ij var_j) / n_i`.
pub fn arm_mean_ucb(mean: f64, arm_pulls: u64, weighted_var_sum: f64, log_term: f64) -> f64 {
    mean + 2.0 * (2.0 * log_term * weighted_var_sum.max(0.0)).sqrt() / arm_pulls as f64
}

/// Fixed-width bound used when every surviving source is quieter than `c*^2`:
/// `mean + 2 c* sqrt(log_term / n_i)`.
pub fn low_noise_ucb(mean: f64, arm_pulls: u64, c_star: f64, log_term: f64) -> f64 {
    mean + 2.0 * c_star * (log_term / arm_pulls as f64).sqrt()
}

/// Running statistics of every pull made after preprocessing.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimatorState {
    num_sources: usize,
    pairs: Vec<RunningMoments>,
    arms: Vec<RunningMoments>,
    counts: CountTable,
}

impl EstimatorState {
    pub fn new(num_arms: usize, num_sources: usize) -> Self {
        Self {
            num_sources,
            pairs: vec![RunningMoments::default(); num_arms * num_sources],
            arms: vec![RunningMoments::default(); num_arms],
            counts: CountTable::new(num_arms, num_sources),
        }
    }

    pub fn num_arms(&self) -> usize {
        self.arms.len()
    }

    pub fn num_sources(&self) -> usize {
        self.num_sources
    }

    pub fn counts(&self) -> &CountTable {
        &self.counts
    }

    pub fn record(&mut self, arm: usize, source: usize, reward: f64) -> Result<()> {
        self.counts.record_pull(arm, source)?;
        self.pairs[arm * self.num_sources + source].push(reward);
        self.arms[arm].push(reward);
        Ok(())
    }

    /// Folds pre-aggregated samples of one `(arm, source)` cell into the state.
    pub fn absorb(&mut self, arm: usize, source: usize, moments: &RunningMoments) -> Result<()> {
        check_index("arm", arm, self.arms.len())?;
        check_index("source", source, self.num_sources)?;
        self.counts.record_pulls(arm, source, moments.count())?;
        self.pairs[arm * self.num_sources + source].merge(moments);
        self.arms[arm].merge(moments);
        Ok(())
    }

    pub fn pair(&self, arm: usize, source: usize) -> &RunningMoments {
        &self.pairs[arm * self.num_sources + source]
    }

    /// Empirical mean of an arm over all of its pulls.
    pub fn arm_mean(&self, arm: usize) -> Result<f64> {
        check_index("arm", arm, self.arms.len())?;
        let a = &self.arms[arm];
        if a.count() == 0 {
            return Err(Error::InsufficientSamples(format!(
                "arm {} has never been pulled",
                arm + 1
            )));
        }
        Ok(a.mean())
    }

    /// Degrees of freedom behind the pooled variance of a source:
    /// `sum_{i: n_ij >= 1} (n_ij - 1)`.
    pub fn pooled_dof(&self, source: usize) -> u64 {
        (0..self.arms.len())
            .map(|i| self.pair(i, source).count().saturating_sub(1))
            .sum()
    }

    /// Pooled unbiased variance of a source across arms, clamped at zero.
    pub fn pooled_source_variance(&self, source: usize) -> Result<f64> {
        check_index("source", source, self.num_sources)?;
        let dof = self.pooled_dof(source);
        if dof == 0 {
            return Err(Error::InsufficientSamples(format!(
                "source {} has no degrees of freedom for a pooled variance",
                source + 1
            )));
        }
        let ss: f64 = (0..self.arms.len())
            .map(|i| self.pair(i, source).sum_sq_dev())
            .sum();
        Ok((ss / dof as f64).max(0.0))
    }

    /// Per-source variance to plug into the arm bound: the pooled estimate
    /// where defined, `fallback[j]` otherwise.
    pub fn plugin_variances(&self, fallback: &[f64]) -> Vec<f64> {
        (0..self.num_sources)
            .map(|j| self.pooled_source_variance(j).unwrap_or(fallback[j]))
            .collect()
    }

    /// `sum_j n_ij * variances[j]` for one arm.
    pub fn weighted_variance_sum(&self, arm: usize, variances: &[f64]) -> f64 {
        (0..self.num_sources)
            .map(|j| self.counts.pair(arm, j) as f64 * variances[j])
            .sum()
    }

    /// Adaptive-phase arm bound with the given per-source variances.
    pub fn arm_mean_ucb(&self, arm: usize, variances: &[f64], log_term: f64) -> Result<f64> {
        let mean = self.arm_mean(arm)?;
        Ok(arm_mean_ucb(
            mean,
            self.counts.arm(arm),
            self.weighted_variance_sum(arm, variances),
            log_term,
        ))
    }

    /// Adaptive-phase source bound; `-inf` while the pooled variance is undefined.
    pub fn source_var_lcb(
        &self,
        source: usize,
        kappa: Option<f64>,
        eta_bar: f64,
        nu: f64,
        log_term: f64,
    ) -> f64 {
        match self.pooled_source_variance(source) {
            Ok(var) => {
                let q = q_value(kappa, var, eta_bar, nu);
                source_var_lcb(
                    var,
                    q,
                    self.counts.source(source),
                    self.arms.len(),
                    log_term,
                )
            }
            Err(_) => f64::NEG_INFINITY,
        }
    }
}

/// Fixed-arm samples collected while pruning sources.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PreprocessAccumulator {
    fixed_arm: usize,
    sources: Vec<RunningMoments>,
}

impl PreprocessAccumulator {
    pub fn new(num_sources: usize, fixed_arm: usize) -> Self {
        Self {
            fixed_arm,
            sources: vec![RunningMoments::default(); num_sources],
        }
    }

    /// Accumulator over already summarised per-source samples.
    pub fn from_moments(fixed_arm: usize, sources: Vec<RunningMoments>) -> Self {
        Self { fixed_arm, sources }
    }

    pub fn fixed_arm(&self) -> usize {
        self.fixed_arm
    }

    pub fn record(&mut self, source: usize, reward: f64) -> Result<()> {
        check_index("source", source, self.sources.len())?;
        self.sources[source].push(reward);
        Ok(())
    }

    pub fn count(&self, source: usize) -> u64 {
        self.sources[source].count()
    }

    pub fn moments_len(&self) -> usize {
        self.sources.len()
    }

    pub fn moments(&self, source: usize) -> &RunningMoments {
        &self.sources[source]
    }

    /// Mean of the fixed arm over every preprocessing sample.
    pub fn arm_mean(&self) -> Result<f64> {
        let mut all = RunningMoments::default();
        for s in &self.sources {
            all.merge(s);
        }
        if all.count() == 0 {
            return Err(Error::InsufficientSamples(
                "no preprocessing samples".into(),
            ));
        }
        Ok(all.mean())
    }

    /// `(1/m_j) sum (X - mu_hat)^2` with `mu_hat` the fixed arm's
    /// preprocessing mean.
    pub fn source_variance(&self, source: usize) -> Result<f64> {
        check_index("source", source, self.sources.len())?;
        let s = &self.sources[source];
        if s.count() < 2 {
            return Err(Error::InsufficientSamples(format!(
                "source {} has {} preprocessing samples, need 2",
                source + 1,
                s.count()
            )));
        }
        let mu = self.arm_mean()?;
        let shift = s.mean() - mu;
        let n = s.count() as f64;
        Ok(((s.sum_sq_dev() + n * shift * shift) / n).max(0.0))
    }
}
