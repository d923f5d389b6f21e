//! Bandits whose feedback comes from several sources of unknown, differing
//! noise variance.
//!
//! The main algorithm ([`soar`]) first prunes clearly noisy sources
//! ([`preprocess`]), runs a short fixed exploration, then at every round pulls
//! the arm with the largest mean upper bound through the source with the
//! smallest variance lower bound. [`baselines`] holds the uniform-source and
//! explore-then-commit comparators, and [`harness`] runs seeded experiments,
//! concentration checks and exports.

pub mod baselines;
pub mod environment;
pub mod error;
pub mod estimators;
pub mod harness;
pub mod model;
pub mod preprocess;
pub mod soar;

pub use environment::{Environment, NoiseModel, RngStream};
pub use error::{Error, Result};
pub use model::{
    AlgoParams, CountTable, NoiseFamily, Phase, ProblemInstance, RunTrace, SourceSpec, TraceLevel,
};
