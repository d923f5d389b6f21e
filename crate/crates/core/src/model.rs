//! Domain types shared by every algorithm: problem instances, pull counts,
//! run traces and algorithm parameters.
//!
//! Indices are 0-based here; anything written for people (CSV, JSON, CLI
//! output) shifts them to 1-based.

use serde::{Deserialize, Serialize};

use crate::error::{check_index, Error, Result};

/// Noise distribution family of a feedback source.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NoiseFamily {
    /// Gaussian truncated to `[-eta_bar, eta_bar]`, rescaled so the truncated
    /// variance equals the declared one.
    #[default]
    TruncatedGaussian,
    /// Unbounded Gaussian.
    Gaussian,
    /// Uniform on a symmetric interval.
    Uniform,
    /// Resamples recorded residuals; used for the ratings panel.
    Replay,
}

/// One feedback source: its noise variance, optional fourth central moment
/// and distribution family.
///
/// `fourth_moment` is what the learner is told. `None` means the learner
/// treats it as unknown and falls back on the empirical proxy.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SourceSpec {
    pub variance: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fourth_moment: Option<f64>,
    #[serde(default)]
    pub family: NoiseFamily,
}

impl SourceSpec {
    pub fn new(variance: f64, family: NoiseFamily) -> Self {
        Self {
            variance,
            fourth_moment: None,
            family,
        }
    }

    pub fn with_fourth_moment(mut self, kappa: f64) -> Self {
        self.fourth_moment = Some(kappa);
        self
    }
}

/// A heterogeneous multi-source bandit problem.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProblemInstance {
    pub arm_means: Vec<f64>,
    pub sources: Vec<SourceSpec>,
    /// Noise support / scale bound.
    pub eta_bar: f64,
    /// Mean reward bound.
    pub mu_bar: f64,
}

impl ProblemInstance {
    pub fn new(
        arm_means: Vec<f64>,
        sources: Vec<SourceSpec>,
        eta_bar: f64,
        mu_bar: f64,
    ) -> Result<Self> {
        let instance = Self {
            arm_means,
            sources,
            eta_bar,
            mu_bar,
        };
        instance.validate()?;
        Ok(instance)
    }

    pub fn num_arms(&self) -> usize {
        self.arm_means.len()
    }

    pub fn num_sources(&self) -> usize {
        self.sources.len()
    }

    /// Best arm, lowest index on ties.
    pub fn best_arm(&self) -> usize {
        argmax_lowest(&self.arm_means)
    }

    /// Minimum-variance source, lowest index on ties.
    pub fn best_source(&self) -> usize {
        let mut best = 0;
        for (j, s) in self.sources.iter().enumerate() {
            if s.variance < self.sources[best].variance {
                best = j;
            }
        }
        best
    }

    pub fn best_mean(&self) -> f64 {
        self.arm_means[self.best_arm()]
    }

    pub fn best_variance(&self) -> f64 {
        self.sources[self.best_source()].variance
    }

    /// Suboptimality gap `mu* - mu_i`.
    pub fn gap(&self, arm: usize) -> f64 {
        self.best_mean() - self.arm_means[arm]
    }

    pub fn variances(&self) -> Vec<f64> {
        self.sources.iter().map(|s| s.variance).collect()
    }

    /// Checks every structural invariant, naming the first violation.
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidInstance(msg));
        if self.arm_means.is_empty() {
            return bad("need at least one arm".into());
        }
        if self.sources.is_empty() {
            return bad("need at least one source".into());
        }
        if !(self.eta_bar.is_finite() && self.eta_bar > 0.0) {
            return bad(format!("eta_bar must be positive, got {}", self.eta_bar));
        }
        if !(self.mu_bar.is_finite() && self.mu_bar > 0.0) {
            return bad(format!("mu_bar must be positive, got {}", self.mu_bar));
        }
        for (i, &mu) in self.arm_means.iter().enumerate() {
            if !mu.is_finite() || mu < 0.0 {
                return bad(format!(
                    "mean of arm {} is negative or not finite ({mu})",
                    i + 1
                ));
            }
            if mu > self.mu_bar {
                return bad(format!(
                    "mean exceeds mu_bar: arm {} has mean {mu} > {}",
                    i + 1,
                    self.mu_bar
                ));
            }
        }
        // Relative slack so that `eta_bar = sqrt(v)` admits variance `v`.
        let eta_sq = self.eta_bar * self.eta_bar * (1.0 + 1e-12);
        for (j, s) in self.sources.iter().enumerate() {
            if !s.variance.is_finite() || s.variance < 0.0 {
                return bad(format!(
                    "variance of source {} is negative or not finite",
                    j + 1
                ));
            }
            if s.variance > eta_sq {
                return bad(format!(
                    "variance exceeds eta_bar squared: source {} has variance {} > {eta_sq}",
                    j + 1,
                    s.variance
                ));
            }
            if let Some(kappa) = s.fourth_moment {
                if !kappa.is_finite() || kappa < 0.0 {
                    return bad(format!("fourth moment of source {} is negative", j + 1));
                }
                // Jensen: E[e^4] >= (E[e^2])^2; allow rounding slack.
                if kappa < s.variance * s.variance * (1.0 - 1e-12) {
                    return bad(format!(
                        "fourth moment below squared variance for source {}",
                        j + 1
                    ));
                }
            }
        }
        Ok(())
    }
}

pub(crate) fn argmax_lowest(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best
}

pub(crate) fn argmin_lowest(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v < values[best] {
            best = i;
        }
    }
    best
}

/// Pull tallies `n_i`, `m_j`, `n_ij` and the round counter.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountTable {
    arm: Vec<u64>,
    source: Vec<u64>,
    pair: Vec<u64>,
    t: u64,
}

impl CountTable {
    pub fn new(num_arms: usize, num_sources: usize) -> Self {
        Self {
            arm: vec![0; num_arms],
            source: vec![0; num_sources],
            pair: vec![0; num_arms * num_sources],
            t: 0,
        }
    }

    pub fn num_arms(&self) -> usize {
        self.arm.len()
    }

    pub fn num_sources(&self) -> usize {
        self.source.len()
    }

    pub fn record_pull(&mut self, arm: usize, source: usize) -> Result<()> {
        check_index("arm", arm, self.arm.len())?;
        check_index("source", source, self.source.len())?;
        self.arm[arm] += 1;
        self.source[source] += 1;
        self.pair[arm * self.source.len() + source] += 1;
        self.t += 1;
        Ok(())
    }

    /// Records `n` pulls of the same pair at once.
    pub fn record_pulls(&mut self, arm: usize, source: usize, n: u64) -> Result<()> {
        check_index("arm", arm, self.arm.len())?;
        check_index("source", source, self.source.len())?;
        self.arm[arm] += n;
        self.source[source] += n;
        self.pair[arm * self.source.len() + source] += n;
        self.t += n;
        Ok(())
    }

    pub fn arm(&self, arm: usize) -> u64 {
        self.arm[arm]
    }

    pub fn source(&self, source: usize) -> u64 {
        self.source[source]
    }

    pub fn pair(&self, arm: usize, source: usize) -> u64 {
        self.pair[arm * self.source.len() + source]
    }

    pub fn rounds(&self) -> u64 {
        self.t
    }

    pub fn arm_counts(&self) -> &[u64] {
        &self.arm
    }

    pub fn source_counts(&self) -> &[u64] {
        &self.source
    }
}

/// How much of a run to keep in memory.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TraceLevel {
    /// Every round.
    Full,
    /// Cumulative regret after every round.
    #[default]
    Curve,
    /// Phase totals and histograms only.
    Totals,
}

/// Segment of a run with its own sampling rule.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    /// Source pruning on a fixed arm.
    Preprocess,
    /// Every arm pulled a fixed number of times.
    ArmExploration,
    /// Every surviving source pulled a fixed number of times.
    SourceExploration,
    /// Confidence-bound driven selection.
    Adaptive,
    /// Explore-then-commit source identification.
    SourceIdentification,
    /// Explore-then-commit exploitation on the committed source.
    Commit,
}

impl Phase {
    /// Phases that exist only to gather initial estimates.
    pub fn is_exploration(self) -> bool {
        matches!(
            self,
            Phase::Preprocess
                | Phase::ArmExploration
                | Phase::SourceExploration
                | Phase::SourceIdentification
        )
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Round {
    /// 1-based round index.
    pub t: u64,
    pub arm: usize,
    pub source: usize,
    pub reward: f64,
    pub regret: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseSpan {
    pub phase: Phase,
    /// First round of the phase, 1-based.
    pub start: u64,
    pub rounds: u64,
    pub regret: f64,
    pub source_pulls: Vec<u64>,
}

/// Record of one run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunTrace {
    level: TraceLevel,
    gaps: Vec<f64>,
    rounds: Vec<Round>,
    curve: Vec<f64>,
    phases: Vec<PhaseSpan>,
    arm_pulls: Vec<u64>,
    source_pulls: Vec<u64>,
    len: u64,
    cumulative_regret: f64,
}

impl RunTrace {
    pub fn new(instance: &ProblemInstance, level: TraceLevel) -> Self {
        let gaps = (0..instance.num_arms()).map(|i| instance.gap(i)).collect();
        Self {
            level,
            gaps,
            rounds: Vec::new(),
            curve: Vec::new(),
            phases: Vec::new(),
            arm_pulls: vec![0; instance.num_arms()],
            source_pulls: vec![0; instance.num_sources()],
            len: 0,
            cumulative_regret: 0.0,
        }
    }

    /// Opens a new phase; subsequent rounds are charged to it.
    pub fn begin_phase(&mut self, phase: Phase) {
        self.phases.push(PhaseSpan {
            phase,
            start: self.len + 1,
            rounds: 0,
            regret: 0.0,
            source_pulls: vec![0; self.source_pulls.len()],
        });
    }

    pub fn record(&mut self, arm: usize, source: usize, reward: f64) {
        let regret = self.gaps[arm];
        self.len += 1;
        self.cumulative_regret += regret;
        self.arm_pulls[arm] += 1;
        self.source_pulls[source] += 1;
        if let Some(span) = self.phases.last_mut() {
            span.rounds += 1;
            span.regret += regret;
            span.source_pulls[source] += 1;
        }
        match self.level {
            TraceLevel::Full => {
                self.rounds.push(Round {
                    t: self.len,
                    arm,
                    source,
                    reward,
                    regret,
                });
                self.curve.push(self.cumulative_regret);
            }
            TraceLevel::Curve => self.curve.push(self.cumulative_regret),
            TraceLevel::Totals => {}
        }
    }

    pub fn level(&self) -> TraceLevel {
        self.level
    }

    pub fn len(&self) -> u64 {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn cumulative_regret(&self) -> f64 {
        self.cumulative_regret
    }

    /// Per-round records; empty unless the level is [`TraceLevel::Full`].
    pub fn rounds(&self) -> &[Round] {
        &self.rounds
    }

    /// Cumulative regret after each round; empty at [`TraceLevel::Totals`].
    pub fn curve(&self) -> &[f64] {
        &self.curve
    }

    /// Moves the regret curve out, leaving it empty.
    pub fn take_curve(&mut self) -> Vec<f64> {
        std::mem::take(&mut self.curve)
    }

    pub fn phases(&self) -> &[PhaseSpan] {
        &self.phases
    }

    pub fn arm_pulls(&self) -> &[u64] {
        &self.arm_pulls
    }

    pub fn source_pulls(&self) -> &[u64] {
        &self.source_pulls
    }

    pub fn phase(&self, phase: Phase) -> Option<&PhaseSpan> {
        self.phases.iter().find(|p| p.phase == phase)
    }

    pub fn phase_regret(&self, phase: Phase) -> f64 {
        self.phases
            .iter()
            .filter(|p| p.phase == phase)
            .map(|p| p.regret)
            .sum()
    }

    pub fn exploration_regret(&self) -> f64 {
        self.phases
            .iter()
            .filter(|p| p.phase.is_exploration())
            .map(|p| p.regret)
            .sum()
    }

    pub fn exploration_rounds(&self) -> u64 {
        self.phases
            .iter()
            .filter(|p| p.phase.is_exploration())
            .map(|p| p.rounds)
            .sum()
    }
}

/// Tuning knobs shared by SOAR and the baselines.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AlgoParams {
    /// Confidence level, in (0, 1).
    pub delta: f64,
    /// Variance floor / separation scale.
    pub c_star: f64,
    /// Floor on the fourth-moment proxy.
    pub nu: f64,
    /// Slack for very small optimal variance; reported, never used by the sampler.
    pub gamma: f64,
    /// Horizon T.
    pub horizon: u64,
    /// Source-identification tolerance of explore-then-commit.
    pub epsilon: f64,
}

impl Default for AlgoParams {
    fn default() -> Self {
        Self {
            delta: 0.1,
            c_star: 1.0,
            nu: 1.0,
            gamma: 1.0,
            horizon: 10_000,
            epsilon: 0.1,
        }
    }
}

impl AlgoParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return bad(format!("delta must lie in (0, 1), got {}", self.delta));
        }
        for (name, v) in [
            ("c_star", self.c_star),
            ("nu", self.nu),
            ("gamma", self.gamma),
            ("epsilon", self.epsilon),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return bad(format!("{name} must be positive, got {v}"));
            }
        }
        if self.horizon == 0 {
            return bad("horizon must be positive".into());
        }
        Ok(())
    }
}
