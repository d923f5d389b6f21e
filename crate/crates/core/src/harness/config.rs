//! Experiment description, read from TOML.

use std::path::{Path, PathBuf};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::environment::{
    default_eta_bar, make_explicit_instance, make_wc1_instance, make_wc2_instance, Environment,
    MeanRange, NoiseSettings,
};
use crate::error::{Error, Result};
use crate::harness::movielens::{load_movielens_panel, PanelInfo, ReplayMode};
use crate::model::{AlgoParams, ProblemInstance};
use crate::soar::SoarConfig;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AlgorithmKind {
    Soar,
    /// Uniform-UCB.
    Uucb,
    /// Explore-then-commit UCB.
    Etc,
    /// UCB fixed to the true best source.
    Oracle,
}

impl AlgorithmKind {
    pub fn name(self) -> &'static str {
        match self {
            AlgorithmKind::Soar => "soar",
            AlgorithmKind::Uucb => "uucb",
            AlgorithmKind::Etc => "etc",
            AlgorithmKind::Oracle => "oracle",
        }
    }

    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "soar" => Ok(AlgorithmKind::Soar),
            "uucb" => Ok(AlgorithmKind::Uucb),
            "etc" => Ok(AlgorithmKind::Etc),
            "oracle" => Ok(AlgorithmKind::Oracle),
            other => Err(Error::Config(format!("unknown algorithm `{other}`"))),
        }
    }
}

/// A list of numbers given either literally or as uniform draws.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Values {
    List(Vec<f64>),
    Uniform {
        count: usize,
        low: f64,
        high: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        round_decimals: Option<u32>,
    },
}

impl Values {
    pub fn len(&self) -> usize {
        match self {
            Values::List(v) => v.len(),
            Values::Uniform { count, .. } => *count,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Largest value this list can take.
    pub fn upper(&self) -> f64 {
        match self {
            Values::List(v) => v.iter().cloned().fold(0.0, f64::max),
            Values::Uniform { high, .. } => *high,
        }
    }

    pub fn resolve<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Vec<f64>> {
        match self {
            Values::List(v) => Ok(v.clone()),
            Values::Uniform {
                count,
                low,
                high,
                round_decimals,
            } => {
                let range = MeanRange {
                    low: *low,
                    high: *high,
                    round_decimals: *round_decimals,
                };
                range.check()?;
                Ok(range.draw(*count, rng))
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum InstanceSpec {
    /// Means and variances given literally.
    Explicit {
        arm_means: Vec<f64>,
        variances: Vec<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        mu_bar: Option<f64>,
        #[serde(default)]
        noise: NoiseSettings,
    },
    /// Means and variances each literal or drawn; means are drawn first.
    Random {
        arm_means: Values,
        variances: Values,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        mu_bar: Option<f64>,
        #[serde(default)]
        noise: NoiseSettings,
    },
    /// One low-variance source among equally noisy ones.
    Wc1 {
        num_arms: usize,
        num_sources: usize,
        sigma_max_sq: f64,
        sigma_star_sq: f64,
        means: MeanRange,
        #[serde(default)]
        noise: NoiseSettings,
    },
    /// Near-equal, slowly increasing variances.
    Wc2 {
        num_arms: usize,
        num_sources: usize,
        base_variance: f64,
        spread: f64,
        means: MeanRange,
        #[serde(default)]
        noise: NoiseSettings,
    },
    /// Reviewer panel from a MovieLens ratings file.
    Movielens {
        ratings_path: PathBuf,
        #[serde(default = "default_reviewers")]
        num_reviewers: usize,
        #[serde(default = "default_movies")]
        num_movies: usize,
        #[serde(default)]
        replay: ReplayMode,
        #[serde(default)]
        kappa_known: bool,
    },
}

fn default_reviewers() -> usize {
    15
}

fn default_movies() -> usize {
    500
}

/// Instance ready to sample from.
#[derive(Clone, Debug)]
pub struct BuiltInstance {
    pub env: Environment,
    pub panel: Option<PanelInfo>,
}

impl BuiltInstance {
    pub fn instance(&self) -> &ProblemInstance {
        self.env.instance()
    }
}

impl InstanceSpec {
    pub fn build<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<BuiltInstance> {
        let plain = |inst: ProblemInstance| -> Result<BuiltInstance> {
            Ok(BuiltInstance {
                env: Environment::new(inst)?,
                panel: None,
            })
        };
        match self {
            InstanceSpec::Explicit {
                arm_means,
                variances,
                mu_bar,
                noise,
            } => {
                let mu_bar = mu_bar.unwrap_or_else(|| upper_mean(arm_means));
                plain(make_explicit_instance(arm_means, variances, mu_bar, noise)?)
            }
            InstanceSpec::Random {
                arm_means,
                variances,
                mu_bar,
                noise,
            } => {
                let means = arm_means.resolve(rng)?;
                let vars = variances.resolve(rng)?;
                let mu_bar = mu_bar.unwrap_or_else(|| upper_mean(&means).max(arm_means.upper()));
                let noise = NoiseSettings {
                    eta_bar: Some(
                        noise
                            .eta_bar
                            .unwrap_or_else(|| default_eta_bar(noise.family, variances.upper())),
                    ),
                    ..noise.clone()
                };
                plain(make_explicit_instance(&means, &vars, mu_bar, &noise)?)
            }
            InstanceSpec::Wc1 {
                num_arms,
                num_sources,
                sigma_max_sq,
                sigma_star_sq,
                means,
                noise,
            } => plain(make_wc1_instance(
                *num_arms,
                *num_sources,
                *sigma_max_sq,
                *sigma_star_sq,
                means,
                noise,
                rng,
            )?),
            InstanceSpec::Wc2 {
                num_arms,
                num_sources,
                base_variance,
                spread,
                means,
                noise,
            } => plain(make_wc2_instance(
                *num_arms,
                *num_sources,
                *base_variance,
                *spread,
                means,
                noise,
                rng,
            )?),
            InstanceSpec::Movielens {
                ratings_path,
                num_reviewers,
                num_movies,
                replay,
                kappa_known,
            } => {
                let panel = load_movielens_panel(ratings_path, *num_reviewers, *num_movies)?;
                let env = panel.environment(*replay, *kappa_known)?;
                Ok(BuiltInstance {
                    env,
                    panel: Some(panel.info),
                })
            }
        }
    }
}

fn upper_mean(means: &[f64]) -> f64 {
    means
        .iter()
        .cloned()
        .fold(0.0, f64::max)
        .max(f64::MIN_POSITIVE)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub name: String,
    pub horizon: u64,
    #[serde(default = "default_reps")]
    pub repetitions: usize,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    /// Keep and export every run's per-round log.
    #[serde(default)]
    pub save_traces: bool,
    pub algorithms: Vec<AlgorithmKind>,
    pub instance: InstanceSpec,
    /// `params.horizon` is replaced by `horizon`.
    #[serde(default)]
    pub params: AlgoParams,
    #[serde(default)]
    pub soar: SoarConfig,
}

fn default_reps() -> usize {
    1
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// Algorithm parameters with the experiment horizon filled in.
    pub fn algo_params(&self) -> AlgoParams {
        AlgoParams {
            horizon: self.horizon,
            ..self.params.clone()
        }
    }

    /// SOAR settings with the experiment parameters filled in.
    pub fn soar_config(&self) -> SoarConfig {
        SoarConfig {
            params: self.algo_params(),
            ..self.soar.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.repetitions == 0 {
            return Err(Error::Config("repetitions must be at least 1".into()));
        }
        if self.algorithms.is_empty() {
            return Err(Error::Config("no algorithms listed".into()));
        }
        let mut seen = self.algorithms.clone();
        seen.sort();
        seen.dedup();
        if seen.len() != self.algorithms.len() {
            return Err(Error::Config("an algorithm is listed twice".into()));
        }
        self.algo_params().validate()
    }
}

/// Several experiments run back to back.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchConfig {
    pub experiments: Vec<ExperimentConfig>,
}

impl BenchConfig {
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let cfg: Self = toml::from_str(&text).map_err(|e| Error::Config(e.to_string()))?;
        if cfg.experiments.is_empty() {
            return Err(Error::Config("bench config lists no experiments".into()));
        }
        for e in &cfg.experiments {
            e.validate()?;
        }
        Ok(cfg)
    }
}
