//! Monte-Carlo coverage of the concentration bounds behind the estimators,
//! and the elimination rate of source pruning.

use rand_distr::{ChiSquared, Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::environment::{Environment, NoiseModel, RngStream};
use crate::error::{Error, Result};
use crate::estimators::{
    arm_log_term, arm_mean_ucb, q_value, source_log_term, EstimatorState, PreprocessAccumulator,
    RunningMoments,
};
use crate::model::{AlgoParams, NoiseFamily, ProblemInstance, RunTrace, SourceSpec, TraceLevel};
use crate::preprocess::{eliminate, required_preproc_budget, run_preprocess, FIXED_ARM};
use crate::soar::alpha_budget;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Lemma {
    /// `|var_pre - sigma^2| <= 8 eta sigma sqrt(ln(4M/delta) / tau_p)`.
    PreprocessVariance,
    /// `|var_pooled - sigma^2| <= sqrt(Q ln(3MT/delta) / (m - K))`.
    SourceVariance,
    /// `|mu_hat - mu| <= 2 sqrt(ln(3KT/delta) n sigma^2) / n` after `alpha` pulls.
    MeanReward,
    /// `sigma^2 <= 2 var_pooled <= 3 sigma^2`.
    VarianceSandwich,
    /// `mu <= UCB` with estimated variances.
    MeanUcb,
    /// `LCB <= sigma^2` with the estimated fourth-moment proxy.
    VarianceLcb,
}

impl Lemma {
    pub const ALL: [Lemma; 6] = [
        Lemma::PreprocessVariance,
        Lemma::SourceVariance,
        Lemma::MeanReward,
        Lemma::VarianceSandwich,
        Lemma::MeanUcb,
        Lemma::VarianceLcb,
    ];

    pub fn id(self) -> &'static str {
        match self {
            Lemma::PreprocessVariance => "preprocess-variance",
            Lemma::SourceVariance => "source-variance",
            Lemma::MeanReward => "mean-reward",
            Lemma::VarianceSandwich => "variance-sandwich",
            Lemma::MeanUcb => "mean-ucb",
            Lemma::VarianceLcb => "variance-lcb",
        }
    }

    pub fn parse(id: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|l| l.id() == id)
            .ok_or_else(|| Error::UnknownLemma(id.to_string()))
    }
}

/// One noisy source observed through `num_arms` arms with means `i / K`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ConcentrationSetup {
    pub variance: f64,
    /// Must be bounded by `eta_bar`; uniform by default.
    pub family: NoiseFamily,
    pub eta_bar: f64,
    pub num_arms: usize,
    /// Enters the log terms only.
    pub num_sources: usize,
    pub kappa_known: bool,
    pub params: AlgoParams,
    pub seed: u64,
}

impl Default for ConcentrationSetup {
    fn default() -> Self {
        Self {
            variance: 1.0,
            family: NoiseFamily::Uniform,
            eta_bar: 2.0,
            num_arms: 5,
            num_sources: 3,
            kappa_known: true,
            params: AlgoParams::default(),
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoverageReport {
    pub lemma: Lemma,
    pub trials: u64,
    pub covered: u64,
    pub coverage: f64,
    /// `1 - delta / 3`.
    pub nominal: f64,
    /// `nominal - 3 sqrt(nominal (1 - nominal) / trials)`.
    pub threshold: f64,
    pub pass: bool,
    /// Samples per trial prescribed for the bound.
    pub sample_floor: u64,
}

pub fn nominal_level(delta: f64) -> f64 {
    1.0 - delta / 3.0
}

pub fn coverage_threshold(nominal: f64, trials: u64) -> f64 {
    nominal - 3.0 * (nominal * (1.0 - nominal) / trials as f64).sqrt()
}

struct Context {
    noise: NoiseModel,
    sigma2: f64,
    kappa: Option<f64>,
    means: Vec<f64>,
}

impl Context {
    fn new(setup: &ConcentrationSetup) -> Result<Self> {
        let noise = NoiseModel::for_source(
            &SourceSpec::new(setup.variance, setup.family),
            setup.eta_bar,
        )?;
        let sigma2 = noise.variance();
        let kappa = setup.kappa_known.then(|| noise.fourth_moment());
        let k = setup.num_arms;
        Ok(Self {
            noise,
            sigma2,
            kappa,
            means: (0..k).map(|i| i as f64 / k as f64).collect(),
        })
    }

    /// `m` pulls spread round-robin over the arms, after `head` pulls of arm 0.
    fn pooled(&self, head: u64, m: u64, rng: &mut RngStream) -> (EstimatorState, RunningMoments) {
        let k = self.means.len();
        let mut state = EstimatorState::new(k, 1);
        let mut arm0 = RunningMoments::default();
        for t in 0..m {
            let arm = if t < head || k == 1 {
                0
            } else {
                1 + ((t - head) as usize % (k - 1))
            };
            let x = self.means[arm] + self.noise.sample(rng);
            if arm == 0 {
                arm0.push(x);
            }
            state.record(arm, 0, x).expect("indices in range");
        }
        (state, arm0)
    }
}

fn sample_floor(lemma: Lemma, setup: &ConcentrationSetup) -> Result<u64> {
    let p = &setup.params;
    let (k, m) = (setup.num_arms, setup.num_sources);
    let eta4 = setup.eta_bar.powi(4);
    let src_log = source_log_term(m, p.horizon, p.delta);
    let sandwich = k as u64 + (16.0 * eta4 * src_log / p.c_star.powi(4)).ceil() as u64;
    Ok(match lemma {
        Lemma::PreprocessVariance => required_preproc_budget(m, p.delta, p.c_star, setup.eta_bar)?,
        Lemma::SourceVariance | Lemma::VarianceLcb => {
            k as u64 + (4.0 * eta4 * src_log / p.nu).ceil() as u64
        }
        Lemma::VarianceSandwich | Lemma::MeanUcb => sandwich.max(k as u64 + 1),
        Lemma::MeanReward => alpha_budget(p, setup.eta_bar, k)?,
    })
}

fn check_preconditions(lemma: Lemma, setup: &ConcentrationSetup) -> Result<()> {
    let needs_floor = matches!(
        lemma,
        Lemma::MeanReward | Lemma::VarianceSandwich | Lemma::MeanUcb
    );
    let c2 = setup.params.c_star * setup.params.c_star;
    if needs_floor && setup.variance != 0.0 && setup.variance < c2 {
        return Err(Error::InvalidParameter(format!(
            "{} needs variance >= c_star^2 = {c2}, got {}",
            lemma.id(),
            setup.variance
        )));
    }
    if setup.num_arms == 0 || setup.num_sources == 0 {
        return Err(Error::InvalidParameter(
            "need at least one arm and one source".into(),
        ));
    }
    Ok(())
}

fn trial(
    lemma: Lemma,
    setup: &ConcentrationSetup,
    ctx: &Context,
    floor: u64,
    rng: &mut RngStream,
) -> Result<bool> {
    let p = &setup.params;
    let (k, m) = (setup.num_arms, setup.num_sources);
    let sigma2 = ctx.sigma2;
    let src_log = source_log_term(m, p.horizon, p.delta);
    Ok(match lemma {
        Lemma::PreprocessVariance => {
            let mut acc = PreprocessAccumulator::new(1, FIXED_ARM);
            for _ in 0..floor {
                acc.record(0, ctx.means[FIXED_ARM] + ctx.noise.sample(rng))?;
            }
            let bound = 8.0
                * setup.eta_bar
                * sigma2.sqrt()
                * ((4.0 * m as f64 / p.delta).ln() / floor as f64).sqrt();
            (acc.source_variance(0)? - sigma2).abs() <= bound
        }
        Lemma::SourceVariance => {
            let (state, _) = ctx.pooled(0, floor, rng);
            let var = state.pooled_source_variance(0)?;
            let q = q_value(ctx.kappa, var, setup.eta_bar, p.nu);
            (var - sigma2).abs() <= (q * src_log / (floor - k as u64) as f64).sqrt()
        }
        Lemma::VarianceLcb => {
            let (state, _) = ctx.pooled(0, floor, rng);
            state.source_var_lcb(0, ctx.kappa, setup.eta_bar, p.nu, src_log) <= sigma2
        }
        Lemma::VarianceSandwich => {
            let (state, _) = ctx.pooled(0, floor, rng);
            let var = state.pooled_source_variance(0)?;
            sigma2 <= 2.0 * var && 2.0 * var <= 3.0 * sigma2
        }
        Lemma::MeanReward => {
            let mut arm = RunningMoments::default();
            for _ in 0..floor {
                arm.push(ctx.means[0] + ctx.noise.sample(rng));
            }
            let n = floor as f64;
            let bound = 2.0 * (arm_log_term(k, p.horizon, p.delta) * n * sigma2).sqrt() / n;
            (arm.mean() - ctx.means[0]).abs() <= bound
        }
        Lemma::MeanUcb => {
            let alpha = alpha_budget(p, setup.eta_bar, k)?;
            let head = if k == 1 { floor } else { alpha.min(floor) };
            let (state, arm0) = ctx.pooled(head, floor.max(head), rng);
            let var = state.pooled_source_variance(0)?;
            let n = arm0.count();
            let ucb = arm_mean_ucb(
                arm0.mean(),
                n,
                n as f64 * var,
                arm_log_term(k, p.horizon, p.delta),
            );
            ctx.means[0] <= ucb
        }
    })
}

/// Coverage of one bound over `trials` independent replications; trial `t`
/// draws from stream `(setup.seed, t)`.
pub fn validate_concentration(
    lemma: Lemma,
    trials: u64,
    setup: &ConcentrationSetup,
) -> Result<CoverageReport> {
    if trials == 0 {
        return Err(Error::InvalidParameter("need at least one trial".into()));
    }
    setup.params.validate()?;
    check_preconditions(lemma, setup)?;
    let ctx = Context::new(setup)?;
    let floor = sample_floor(lemma, setup)?;
    let hits = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = RngStream::new(setup.seed, t);
            trial(lemma, setup, &ctx, floor, &mut rng).map(u64::from)
        })
        .try_reduce(|| 0, |a, b| Ok(a + b))?;
    let nominal = nominal_level(setup.params.delta);
    let coverage = hits as f64 / trials as f64;
    let threshold = coverage_threshold(nominal, trials);
    Ok(CoverageReport {
        lemma,
        trials,
        covered: hits,
        coverage,
        nominal,
        threshold,
        pass: coverage >= threshold,
        sample_floor: floor,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EliminationReport {
    pub tau_p: u64,
    pub trials: u64,
    /// Per source, how many trials eliminated it.
    pub eliminated: Vec<u64>,
    /// 0-based.
    pub best_source: usize,
    pub best_survived: u64,
    /// Whether the Gaussian sufficient-statistic sampler was used.
    pub sufficient_statistics: bool,
}

impl EliminationReport {
    pub fn elimination_rate(&self, source: usize) -> f64 {
        self.eliminated[source] as f64 / self.trials as f64
    }

    pub fn best_survival_rate(&self) -> f64 {
        self.best_survived as f64 / self.trials as f64
    }
}

/// Gaussian-source preprocessing summarised by exact draws of each source's
/// sample mean `N(mu, sigma^2 / tau)` and sum of squared deviations
/// `sigma^2 chi^2(tau - 1)`, which are independent for Gaussian samples.
fn gaussian_preprocess_moments(
    instance: &ProblemInstance,
    tau_p: u64,
    rng: &mut RngStream,
) -> Result<PreprocessAccumulator> {
    let mu = instance.arm_means[FIXED_ARM];
    let chi = ChiSquared::new((tau_p - 1) as f64)
        .map_err(|e| Error::InvalidParameter(format!("chi-squared with {} dof: {e}", tau_p - 1)))?;
    let moments = instance
        .sources
        .iter()
        .map(|s| {
            let z: f64 = StandardNormal.sample(rng);
            let mean = mu + z * (s.variance / tau_p as f64).sqrt();
            let ss = s.variance * chi.sample(rng);
            RunningMoments::from_parts(tau_p, mean, ss)
        })
        .collect();
    Ok(PreprocessAccumulator::from_moments(FIXED_ARM, moments))
}

/// Runs source pruning `trials` times (stream `(seed, t)` for trial `t`) and
/// counts eliminations. `tau_p` defaults to the prescribed budget.
pub fn preprocess_elimination(
    instance: &ProblemInstance,
    params: &AlgoParams,
    tau_p: Option<u64>,
    trials: u64,
    seed: u64,
) -> Result<EliminationReport> {
    params.validate()?;
    let m = instance.num_sources();
    let tau_p = match tau_p {
        Some(t) => t,
        None => required_preproc_budget(m, params.delta, params.c_star, instance.eta_bar)?,
    };
    if tau_p < 2 {
        return Err(Error::InvalidParameter(
            "preprocessing budget must be at least 2".into(),
        ));
    }
    let fast = instance
        .sources
        .iter()
        .all(|s| s.family == NoiseFamily::Gaussian);
    let env = Environment::new(instance.clone())?;
    let outcomes = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = RngStream::new(seed, t);
            let report = if fast {
                let acc = gaussian_preprocess_moments(instance, tau_p, &mut rng)?;
                eliminate(&acc, instance.eta_bar, params.delta, tau_p)?
            } else {
                let mut trace = RunTrace::new(instance, TraceLevel::Totals);
                run_preprocess(&env, params, tau_p, &mut rng, &mut trace)?.0
            };
            Ok(report
                .estimates
                .iter()
                .map(|e| e.eliminated)
                .collect::<Vec<bool>>())
        })
        .collect::<Result<Vec<_>>>()?;
    let best = instance.best_source();
    let mut eliminated = vec![0u64; m];
    for o in &outcomes {
        for (slot, &e) in eliminated.iter_mut().zip(o) {
            *slot += e as u64;
        }
    }
    Ok(EliminationReport {
        tau_p,
        trials,
        best_source: best,
        best_survived: trials - eliminated[best],
        eliminated,
        sufficient_statistics: fast,
    })
}
