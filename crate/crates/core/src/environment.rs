//! Seeded reward generation and the instance families used in experiments.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use statrs::function::erf::{erf, erf_inv};

use crate::error::{check_index, Error, Result};
use crate::model::{NoiseFamily, ProblemInstance, SourceSpec};

/// Deterministic random stream identified by `(seed, stream)`.
///
/// Streams with the same seed but different ids are independent, so
/// repetition `r` of an experiment can be replayed in isolation.
#[derive(Clone, Debug)]
pub struct RngStream {
    seed: u64,
    stream: u64,
    rng: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Self { seed, stream, rng }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.rng.fill_bytes(dst)
    }
}

/// Concrete mean-zero noise distribution of one source.
#[derive(Clone, Debug, PartialEq)]
pub enum NoiseModel {
    Zero,
    Gaussian {
        sd: f64,
    },
    /// `N(0, raw_sd^2)` conditioned on `|x| <= bound`.
    TruncatedGaussian {
        raw_sd: f64,
        bound: f64,
        /// Probability mass kept by the truncation.
        mass: f64,
        variance: f64,
        fourth_moment: f64,
    },
    Uniform {
        half_width: f64,
    },
    /// Draws uniformly from a fixed list of centered residuals.
    Replay {
        residuals: Vec<f64>,
    },
}

const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Variance and fourth moment of a standard normal truncated to `[-a, a]`.
fn truncated_std_moments(a: f64) -> (f64, f64) {
    let mass = erf(a / std::f64::consts::SQRT_2);
    let pdf = INV_SQRT_2PI * (-0.5 * a * a).exp();
    let second = 1.0 - 2.0 * a * pdf / mass;
    let fourth = 3.0 - (2.0 * a.powi(3) * pdf + 6.0 * a * pdf) / mass;
    (second, fourth)
}

impl NoiseModel {
    /// Builds the noise model for a source. Replay sources need residuals and
    /// must be built with [`NoiseModel::replay`].
    pub fn for_source(spec: &SourceSpec, eta_bar: f64) -> Result<Self> {
        if spec.variance == 0.0 {
            return Ok(NoiseModel::Zero);
        }
        match spec.family {
            NoiseFamily::Gaussian => Ok(NoiseModel::Gaussian {
                sd: spec.variance.sqrt(),
            }),
            NoiseFamily::Uniform => {
                let half_width = (3.0 * spec.variance).sqrt();
                if half_width > eta_bar * (1.0 + 1e-12) {
                    return Err(Error::InvalidParameter(format!(
                        "uniform noise with variance {} needs support wider than eta_bar = {eta_bar}",
                        spec.variance
                    )));
                }
                Ok(NoiseModel::Uniform { half_width })
            }
            NoiseFamily::TruncatedGaussian => Self::truncated_gaussian(spec.variance, eta_bar),
            NoiseFamily::Replay => Err(Error::InvalidParameter(
                "replay sources need recorded residuals".into(),
            )),
        }
    }

    /// Truncated Gaussian on `[-bound, bound]` whose variance after truncation
    /// equals `variance`. Fails when `variance` is not attainable, i.e. at or
    /// above the uniform limit `bound^2 / 3`.
    pub fn truncated_gaussian(variance: f64, bound: f64) -> Result<Self> {
        if variance == 0.0 {
            return Ok(NoiseModel::Zero);
        }
        // With a = bound / raw_sd the truncated variance is
        // bound^2 * g(a), g(a) = v(a) / a^2, strictly decreasing from 1/3.
        let target = variance / (bound * bound);
        let g = |a: f64| truncated_std_moments(a).0 / (a * a);
        let (mut lo, mut hi) = (1e-3, 64.0);
        if target >= g(lo) {
            return Err(Error::InvalidParameter(format!(
                "truncated gaussian cannot reach variance {variance} inside [-{bound}, {bound}]"
            )));
        }
        if target <= g(hi) {
            // Truncation is immaterial this far out.
            let sd = variance.sqrt();
            return Ok(NoiseModel::TruncatedGaussian {
                raw_sd: sd,
                bound,
                mass: 1.0,
                variance,
                fourth_moment: 3.0 * variance * variance,
            });
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if g(mid) > target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let a = 0.5 * (lo + hi);
        let raw_sd = bound / a;
        let (second, fourth) = truncated_std_moments(a);
        Ok(NoiseModel::TruncatedGaussian {
            raw_sd,
            bound,
            mass: erf(a / std::f64::consts::SQRT_2),
            variance: raw_sd * raw_sd * second,
            fourth_moment: raw_sd.powi(4) * fourth,
        })
    }

    /// Replay model; residuals are re-centered so the noise has mean zero.
    pub fn replay(residuals: Vec<f64>) -> Result<Self> {
        if residuals.is_empty() {
            return Err(Error::InvalidParameter(
                "replay needs at least one residual".into(),
            ));
        }
        let mean = residuals.iter().sum::<f64>() / residuals.len() as f64;
        Ok(NoiseModel::Replay {
            residuals: residuals.into_iter().map(|r| r - mean).collect(),
        })
    }

    pub fn variance(&self) -> f64 {
        match self {
            NoiseModel::Zero => 0.0,
            NoiseModel::Gaussian { sd } => sd * sd,
            NoiseModel::TruncatedGaussian { variance, .. } => *variance,
            NoiseModel::Uniform { half_width } => half_width * half_width / 3.0,
            NoiseModel::Replay { residuals } => {
                residuals.iter().map(|r| r * r).sum::<f64>() / residuals.len() as f64
            }
        }
    }

    /// Fourth central moment of the distribution.
    pub fn fourth_moment(&self) -> f64 {
        match self {
            NoiseModel::Zero => 0.0,
            NoiseModel::Gaussian { sd } => 3.0 * sd.powi(4),
            NoiseModel::TruncatedGaussian { fourth_moment, .. } => *fourth_moment,
            NoiseModel::Uniform { half_width } => half_width.powi(4) / 5.0,
            NoiseModel::Replay { residuals } => {
                residuals.iter().map(|r| r.powi(4)).sum::<f64>() / residuals.len() as f64
            }
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            NoiseModel::Zero => 0.0,
            NoiseModel::Gaussian { sd } => {
                let z: f64 = StandardNormal.sample(rng);
                sd * z
            }
            NoiseModel::TruncatedGaussian {
                raw_sd,
                bound,
                mass,
                ..
            } => {
                if *mass >= 0.5 {
                    loop {
                        let z: f64 = StandardNormal.sample(rng);
                        let x = raw_sd * z;
                        if x.abs() <= *bound {
                            return x;
                        }
                    }
                }
                // Inverse CDF restricted to the kept mass.
                let u: f64 = rng.random_range(-1.0..1.0);
                let x = raw_sd * std::f64::consts::SQRT_2 * erf_inv(mass * u);
                x.clamp(-*bound, *bound)
            }
            NoiseModel::Uniform { half_width } => rng.random_range(-*half_width..=*half_width),
            NoiseModel::Replay { residuals } => residuals[rng.random_range(0..residuals.len())],
        }
    }
}

/// A problem instance paired with the noise models that realise it.
#[derive(Clone, Debug)]
pub struct Environment {
    instance: ProblemInstance,
    noise: Vec<NoiseModel>,
}

impl Environment {
    pub fn new(instance: ProblemInstance) -> Result<Self> {
        instance.validate()?;
        let noise = instance
            .sources
            .iter()
            .map(|s| NoiseModel::for_source(s, instance.eta_bar))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { instance, noise })
    }

    /// Environment whose sources replay recorded residuals, one list per source.
    pub fn with_replay(instance: ProblemInstance, residuals: Vec<Vec<f64>>) -> Result<Self> {
        instance.validate()?;
        if residuals.len() != instance.num_sources() {
            return Err(Error::InvalidParameter(format!(
                "{} residual lists for {} sources",
                residuals.len(),
                instance.num_sources()
            )));
        }
        let noise = residuals
            .into_iter()
            .map(NoiseModel::replay)
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { instance, noise })
    }

    pub fn instance(&self) -> &ProblemInstance {
        &self.instance
    }

    pub fn noise(&self, source: usize) -> &NoiseModel {
        &self.noise[source]
    }

    /// Observes `mu_arm + noise_source`.
    pub fn sample_reward<R: Rng + ?Sized>(
        &self,
        arm: usize,
        source: usize,
        rng: &mut R,
    ) -> Result<f64> {
        check_index("arm", arm, self.instance.num_arms())?;
        check_index("source", source, self.noise.len())?;
        Ok(self.instance.arm_means[arm] + self.noise[source].sample(rng))
    }
}

/// How arm means are drawn for the synthetic families.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeanRange {
    pub low: f64,
    pub high: f64,
    /// Round draws to this many decimals.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub round_decimals: Option<u32>,
}

impl MeanRange {
    pub fn new(low: f64, high: f64) -> Self {
        Self {
            low,
            high,
            round_decimals: None,
        }
    }

    pub fn check(&self) -> Result<()> {
        if !(self.low >= 0.0 && self.high > self.low && self.high.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "mean range [{}, {}] must satisfy 0 <= low < high",
                self.low, self.high
            )));
        }
        Ok(())
    }

    pub fn draw<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<f64> {
        (0..n)
            .map(|_| {
                let x = rng.random_range(self.low..=self.high);
                match self.round_decimals {
                    Some(d) => {
                        let scale = 10f64.powi(d as i32);
                        ((x * scale).round() / scale).clamp(self.low, self.high)
                    }
                    None => x,
                }
            })
            .collect()
    }
}

fn source_with_kappa(
    variance: f64,
    family: NoiseFamily,
    eta_bar: f64,
    kappa_known: bool,
) -> Result<SourceSpec> {
    let mut spec = SourceSpec::new(variance, family);
    if kappa_known {
        spec.fourth_moment = Some(NoiseModel::for_source(&spec, eta_bar)?.fourth_moment());
    }
    Ok(spec)
}

/// Noise settings shared by the instance factories.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseSettings {
    #[serde(default)]
    pub family: NoiseFamily,
    /// Tell the learner the true fourth moments.
    #[serde(default = "default_true")]
    pub kappa_known: bool,
    /// Defaults to the square root of the largest variance.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta_bar: Option<f64>,
}

fn default_true() -> bool {
    true
}

impl Default for NoiseSettings {
    fn default() -> Self {
        Self {
            family: NoiseFamily::default(),
            kappa_known: true,
            eta_bar: None,
        }
    }
}

/// Noise scale bound used when none is configured: the largest standard
/// deviation for Gaussian and replayed noise, the support edge of the widest
/// uniform source, and three standard deviations for truncated Gaussians.
pub fn default_eta_bar(family: NoiseFamily, max_variance: f64) -> f64 {
    let sd = max_variance.max(0.0).sqrt();
    let eta = match family {
        NoiseFamily::Gaussian | NoiseFamily::Replay => sd,
        NoiseFamily::Uniform => 3f64.sqrt() * sd,
        NoiseFamily::TruncatedGaussian => 3.0 * sd,
    };
    eta.max(f64::MIN_POSITIVE)
}

/// Explicit means and variances.
pub fn make_explicit_instance(
    arm_means: &[f64],
    variances: &[f64],
    mu_bar: f64,
    noise: &NoiseSettings,
) -> Result<ProblemInstance> {
    let max_var = variances.iter().cloned().fold(0.0, f64::max);
    let eta_bar = noise
        .eta_bar
        .unwrap_or_else(|| default_eta_bar(noise.family, max_var));
    let sources = variances
        .iter()
        .map(|&v| source_with_kappa(v, noise.family, eta_bar, noise.kappa_known))
        .collect::<Result<Vec<_>>>()?;
    ProblemInstance::new(arm_means.to_vec(), sources, eta_bar, mu_bar)
}

/// Worst case for uniform source selection: one source with `sigma_star_sq`,
/// the other `M - 1` share `sigma_max_sq`. The low-variance source sits at a
/// random position.
pub fn make_wc1_instance<R: Rng + ?Sized>(
    num_arms: usize,
    num_sources: usize,
    sigma_max_sq: f64,
    sigma_star_sq: f64,
    means: &MeanRange,
    noise: &NoiseSettings,
    rng: &mut R,
) -> Result<ProblemInstance> {
    if num_arms == 0 || num_sources == 0 {
        return Err(Error::InvalidParameter(
            "need at least one arm and one source".into(),
        ));
    }
    means.check()?;
    if !(sigma_star_sq >= 0.0 && sigma_star_sq < sigma_max_sq) {
        return Err(Error::InvalidParameter(format!(
            "need 0 <= sigma_star^2 < sigma_max^2, got {sigma_star_sq} and {sigma_max_sq}"
        )));
    }
    let eta_bar = noise
        .eta_bar
        .unwrap_or_else(|| default_eta_bar(noise.family, sigma_max_sq));
    if sigma_max_sq > eta_bar * eta_bar * (1.0 + 1e-12) {
        return Err(Error::InvalidParameter(format!(
            "sigma_max^2 = {sigma_max_sq} exceeds eta_bar^2 = {}",
            eta_bar * eta_bar
        )));
    }
    let arm_means = means.draw(num_arms, rng);
    let star = rng.random_range(0..num_sources);
    let sources = (0..num_sources)
        .map(|j| {
            let v = if j == star {
                sigma_star_sq
            } else {
                sigma_max_sq
            };
            source_with_kappa(v, noise.family, eta_bar, noise.kappa_known)
        })
        .collect::<Result<Vec<_>>>()?;
    ProblemInstance::new(arm_means, sources, eta_bar, means.high)
}

/// Worst case for explore-then-commit: variances increase linearly from
/// `base_variance` to `base_variance + spread`.
pub fn make_wc2_instance<R: Rng + ?Sized>(
    num_arms: usize,
    num_sources: usize,
    base_variance: f64,
    spread: f64,
    means: &MeanRange,
    noise: &NoiseSettings,
    rng: &mut R,
) -> Result<ProblemInstance> {
    if num_arms == 0 || num_sources == 0 {
        return Err(Error::InvalidParameter(
            "need at least one arm and one source".into(),
        ));
    }
    means.check()?;
    if !base_variance.is_finite()
        || base_variance <= 0.0
        || spread.is_nan()
        || spread < 0.0
        || spread > base_variance
    {
        return Err(Error::InvalidParameter(format!(
            "need base_variance > 0 and 0 <= spread <= base_variance, got {base_variance} and {spread}"
        )));
    }
    let variances: Vec<f64> = (0..num_sources)
        .map(|j| {
            if num_sources == 1 {
                base_variance
            } else {
                base_variance + spread * j as f64 / (num_sources - 1) as f64
            }
        })
        .collect();
    let eta_bar = noise
        .eta_bar
        .unwrap_or_else(|| default_eta_bar(noise.family, base_variance + spread));
    let arm_means = means.draw(num_arms, rng);
    let sources = variances
        .iter()
        .map(|&v| source_with_kappa(v, noise.family, eta_bar, noise.kappa_known))
        .collect::<Result<Vec<_>>>()?;
    ProblemInstance::new(arm_means, sources, eta_bar, means.high)
}

/// Means and variances both drawn uniformly from ranges.
pub fn make_random_instance<R: Rng + ?Sized>(
    num_arms: usize,
    num_sources: usize,
    means: &MeanRange,
    variances: &MeanRange,
    noise: &NoiseSettings,
    rng: &mut R,
) -> Result<ProblemInstance> {
    if num_arms == 0 || num_sources == 0 {
        return Err(Error::InvalidParameter(
            "need at least one arm and one source".into(),
        ));
    }
    means.check()?;
    variances.check()?;
    let arm_means = means.draw(num_arms, rng);
    let vars = variances.draw(num_sources, rng);
    let eta_bar = noise
        .eta_bar
        .unwrap_or_else(|| default_eta_bar(noise.family, variances.high));
    let sources = vars
        .iter()
        .map(|&v| source_with_kappa(v, noise.family, eta_bar, noise.kappa_known))
        .collect::<Result<Vec<_>>>()?;
    ProblemInstance::new(arm_means, sources, eta_bar, means.high)
}
