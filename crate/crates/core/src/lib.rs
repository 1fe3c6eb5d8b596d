//! Projection estimation, unbiased-risk model selection and
//! exponential-weight aggregation in the Gaussian sequence model
//! `Y_i = mu_i + sigma xi_i`, with evaluators for their oracle inequalities
//! and a reproducible Monte Carlo engine that checks them.

pub mod bounds;
pub mod cli;
pub mod config;
pub mod error;
pub mod estimators;
pub mod model;
pub mod montecarlo;
pub mod risk;
pub mod rng;

pub use error::{Error, Result};
pub use estimators::{RiskProfile, WeightVector};
pub use model::{MeanFamily, MeanVector, ModelIndexSet, NoiseLevel, Observation};
pub use montecarlo::{ComparisonRow, RiskEstimate, ScenarioConfig};
pub use risk::{OracleReport, RegretBudgets};
