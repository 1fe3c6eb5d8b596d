//! Oracle risk of the projection family and regret against it.

use serde::Serialize;

use crate::error::Result;
use crate::model::{true_projection_risk, MeanVector, ModelIndexSet, NoiseLevel};

/// Regret budgets attached to an oracle report.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RegretBudgets {
    /// `sigma^2 * sqrt(r / sigma^2)`: the URE bound with its constant set to one.
    pub t1_shape: f64,
    /// `4 sigma^2 log(#M)`.
    pub t2: f64,
    /// `4 sigma^2 log{(r / sigma^2) [1 + Psi(sigma^2 / r)]}`.
    pub t3: f64,
}

impl RegretBudgets {
    pub fn combined(&self) -> f64 {
        self.t2.min(self.t3)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleReport {
    /// `r^M(mu) = min_m { sum_{i>m} mu_i^2 + sigma^2 m }`.
    pub oracle_risk: f64,
    pub oracle_index: usize,
    /// Filled in by [`crate::bounds::theorem_bounds`].
    pub budgets: Option<RegretBudgets>,
}

/// Full scan of the projection risks over `models`; ties go to the smallest `m`.
pub fn oracle_risk(mu: &MeanVector, sigma: NoiseLevel, models: &ModelIndexSet) -> Result<OracleReport> {
    models.check_support(mu.len())?;
    let mut best: Option<(f64, usize)> = None;
    for &m in models.indices() {
        let r = true_projection_risk(mu, sigma, m)?;
        if best.is_none_or(|(b, _)| r < b) {
            best = Some((r, m));
        }
    }
    let (oracle_risk, oracle_index) = best.expect("model set is non-empty");
    Ok(OracleReport {
        oracle_risk,
        oracle_index,
        budgets: None,
    })
}

/// Excess of a Monte Carlo risk over the oracle risk. May be negative within MC error.
pub fn regret(mc_risk: f64, oracle: &OracleReport) -> f64 {
    mc_risk - oracle.oracle_risk
}
