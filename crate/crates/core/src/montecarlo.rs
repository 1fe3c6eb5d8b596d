//! Reproducible Monte Carlo estimation of estimator risks and of the
//! maximal statistics behind the oracle inequalities.
//!
//! Replicate `r` of scenario `id` draws from the generator seeded by
//! `replicate_seed(base_seed, scenario_key(id), r)`. Replicates run on the
//! rayon pool, results are stored per replicate and reduced sequentially,
//! so every estimate is bit-identical for any thread count.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::bounds::{theorem_bounds, u_alpha, u_star_alpha};
use crate::error::{invalid, Result};
use crate::estimators::{
    aggregate, exponential_weights, m_epsilon, m_epsilon_centered, neumaier_sum,
    projection_estimate, risk_profile, RiskProfile,
};
use crate::model::{
    generate_observation, squared_loss, MeanFamily, MeanVector, ModelIndexSet, NoiseLevel,
};
use crate::risk::{oracle_risk, regret, OracleReport};
use crate::rng::{generator, replicate_seed, scenario_key};

/// Pass tolerance, in standard errors, for every Monte Carlo bound check.
pub const SE_TOLERANCE: f64 = 4.0;

/// Default truncation of the chi-square maximal statistics.
pub const DEFAULT_K_MAX: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum EstimatorChoice {
    Ure,
    Ew,
    Both,
}

impl EstimatorChoice {
    fn ure(self) -> bool {
        matches!(self, EstimatorChoice::Ure | EstimatorChoice::Both)
    }

    fn ew(self) -> bool {
        matches!(self, EstimatorChoice::Ew | EstimatorChoice::Both)
    }
}

impl std::str::FromStr for EstimatorChoice {
    type Err = crate::error::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "ure" => Ok(EstimatorChoice::Ure),
            "ew" => Ok(EstimatorChoice::Ew),
            "both" => Ok(EstimatorChoice::Both),
            other => invalid(format!("unknown estimator '{other}' (ure, ew, both)")),
        }
    }
}

/// One experiment: mean family, noise, model set and replication plan.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub id: String,
    pub mu: MeanFamily,
    /// Declared length used when `mu` does not fix one; defaults to `max(M)`.
    pub n: Option<usize>,
    pub sigma: NoiseLevel,
    pub models: ModelIndexSet,
    pub replicates: usize,
    pub base_seed: u64,
    pub estimator: EstimatorChoice,
}

impl ScenarioConfig {
    pub fn mean_vector(&self) -> Result<MeanVector> {
        let mu = self.mu.build(self.n.unwrap_or(self.models.max()))?;
        self.models.check_support(mu.len())?;
        Ok(mu)
    }

    fn validate(&self) -> Result<MeanVector> {
        if self.replicates == 0 {
            return invalid(format!("scenario '{}': replicates must be >= 1", self.id));
        }
        self.mean_vector()
    }

    fn seed_for(&self, replicate: usize) -> u64 {
        replicate_seed(self.base_seed, scenario_key(&self.id), replicate as u64)
    }
}

/// Monte Carlo mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RiskEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub replicates: usize,
}

impl RiskEstimate {
    /// Two-pass mean and `sample_sd / sqrt(n)`; zero error for one sample.
    pub fn from_samples(samples: &[f64]) -> Self {
        let n = samples.len();
        assert!(n > 0, "at least one replicate");
        let mean = neumaier_sum(samples.iter().copied()) / n as f64;
        let std_error = if n > 1 {
            let ss = neumaier_sum(samples.iter().map(|x| (x - mean) * (x - mean)));
            (ss / (n - 1) as f64).sqrt() / (n as f64).sqrt()
        } else {
            0.0
        };
        Self {
            mean,
            std_error,
            replicates: n,
        }
    }

    /// `mean <= budget + 4 SE`.
    pub fn within(&self, budget: f64) -> bool {
        self.mean <= budget + SE_TOLERANCE * self.std_error
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct McRisks {
    pub ure: Option<RiskEstimate>,
    pub ew: Option<RiskEstimate>,
}

/// Per-replicate losses of the URE-selected and EW-aggregated estimators.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReplicateLoss {
    pub ure: f64,
    pub ew: f64,
}

fn replicate_losses(config: &ScenarioConfig, mu: &MeanVector) -> Result<Vec<ReplicateLoss>> {
    let run = |r: usize| -> Result<ReplicateLoss> {
        let y = generate_observation(mu, config.sigma, config.seed_for(r));
        let profile = risk_profile(&y, &config.models)?;
        let ure = if config.estimator.ure() {
            squared_loss(&projection_estimate(&y, profile.argmin_index())?, mu)
        } else {
            f64::NAN
        };
        let ew = if config.estimator.ew() {
            let w = exponential_weights(&profile, config.sigma);
            squared_loss(&aggregate(&y, &config.models, &w)?, mu)
        } else {
            f64::NAN
        };
        Ok(ReplicateLoss { ure, ew })
    };
    (0..config.replicates).into_par_iter().map(run).collect()
}

/// Replicate-level losses, exposed for paired comparisons.
pub fn mc_losses(config: &ScenarioConfig) -> Result<Vec<ReplicateLoss>> {
    let mu = config.validate()?;
    replicate_losses(config, &mu)
}

/// Monte Carlo risk `E ||mu_hat - mu||^2` of the configured estimator(s).
pub fn mc_risk(config: &ScenarioConfig) -> Result<McRisks> {
    let losses = mc_losses(config)?;
    Ok(summarize(config.estimator, &losses))
}

fn summarize(choice: EstimatorChoice, losses: &[ReplicateLoss]) -> McRisks {
    let pick = |f: fn(&ReplicateLoss) -> f64| {
        let xs: Vec<f64> = losses.iter().map(f).collect();
        RiskEstimate::from_samples(&xs)
    };
    McRisks {
        ure: choice.ure().then(|| pick(|l| l.ure)),
        ew: choice.ew().then(|| pick(|l| l.ew)),
    }
}

/// One line of the oracle-inequality report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonRow {
    pub scenario_id: String,
    pub oracle_risk: f64,
    pub oracle_index: usize,
    pub ure: RiskEstimate,
    pub ew: RiskEstimate,
    pub t1_shape: f64,
    pub t2_budget: f64,
    pub t3_budget: f64,
    /// URE regret divided by `sigma^2 sqrt(r / sigma^2)`.
    pub empirical_k: f64,
    pub t2_pass: bool,
    pub t3_pass: bool,
    /// EW risk within the smaller of the two budgets (both flags hold).
    pub combined_pass: bool,
}

impl ComparisonRow {
    pub fn all_pass(&self) -> bool {
        self.t2_pass && self.t3_pass
    }
}

/// Oracle risk, both Monte Carlo risks and all budgets for one scenario.
pub fn verify_oracle_inequalities(config: &ScenarioConfig) -> Result<ComparisonRow> {
    if config.estimator != EstimatorChoice::Both {
        return invalid(format!(
            "scenario '{}': oracle inequality check needs estimator = both",
            config.id
        ));
    }
    let mu = config.validate()?;
    let oracle = oracle_risk(&mu, config.sigma, &config.models)?;
    let oracle = theorem_bounds(&oracle, config.sigma, &config.models)?;
    let losses = replicate_losses(config, &mu)?;
    let risks = summarize(config.estimator, &losses);
    Ok(comparison_row(&config.id, &oracle, &risks))
}

fn comparison_row(id: &str, oracle: &OracleReport, risks: &McRisks) -> ComparisonRow {
    let budgets = oracle.budgets.expect("budgets filled");
    let ure = risks.ure.expect("ure estimated");
    let ew = risks.ew.expect("ew estimated");
    let r = oracle.oracle_risk;
    ComparisonRow {
        scenario_id: id.to_string(),
        oracle_risk: r,
        oracle_index: oracle.oracle_index,
        ure,
        ew,
        t1_shape: budgets.t1_shape,
        t2_budget: budgets.t2,
        t3_budget: budgets.t3,
        empirical_k: regret(ure.mean, oracle) / budgets.t1_shape,
        t2_pass: ew.within(r + budgets.t2),
        t3_pass: ew.within(r + budgets.t3),
        combined_pass: ew.within(r + budgets.combined()),
    }
}

/// Maximal statistics whose expectations are bounded by `1/alpha`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MaximalStatistic {
    /// `max_k sum_{i<=k} (xi_i^2 - 1) - U(alpha) k`
    Chi2Upper,
    /// `max_k sum_{i>=k} (mu_i xi_i - alpha mu_i^2 / 2)`
    Linear,
    /// `max_k sum_{i<=k} (1 - xi_i^2) - U*(alpha) k`
    Chi2Lower,
}

impl MaximalStatistic {
    pub fn name(self) -> &'static str {
        match self {
            MaximalStatistic::Chi2Upper => "chi2_upper",
            MaximalStatistic::Linear => "linear",
            MaximalStatistic::Chi2Lower => "chi2_lower",
        }
    }
}

impl std::str::FromStr for MaximalStatistic {
    type Err = crate::error::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "chi2_upper" => Ok(MaximalStatistic::Chi2Upper),
            "linear" => Ok(MaximalStatistic::Linear),
            "chi2_lower" => Ok(MaximalStatistic::Chi2Lower),
            other => invalid(format!(
                "unknown statistic '{other}' (chi2_upper, linear, chi2_lower)"
            )),
        }
    }
}

fn chi2_running_max(gen: &mut impl Rng, k_max: usize, sign: f64, drift: f64) -> f64 {
    let mut s = 0.0;
    let mut best = f64::NEG_INFINITY;
    for _ in 0..k_max {
        let z: f64 = gen.sample(StandardNormal);
        s += sign * (z * z - 1.0) - drift;
        best = best.max(s);
    }
    best
}

fn linear_max(gen: &mut impl Rng, mu: &[f64], alpha: f64) -> f64 {
    let xi: Vec<f64> = mu.iter().map(|_| gen.sample(StandardNormal)).collect();
    // k > N contributes the empty sum 0
    let mut s = 0.0;
    let mut best = 0.0f64;
    for (m, z) in mu.iter().zip(&xi).rev() {
        s += m * z - 0.5 * alpha * m * m;
        best = best.max(s);
    }
    best
}

/// Monte Carlo mean of a maximal statistic. The chi-square walks are
/// truncated at `k_max` steps, which can only lower the maximum.
pub fn lemma2_empirical(
    alpha: f64,
    which: MaximalStatistic,
    mu: Option<&MeanVector>,
    k_max: usize,
    replicates: usize,
    seed: u64,
) -> Result<RiskEstimate> {
    if replicates == 0 {
        return invalid("replicates must be >= 1");
    }
    let key = scenario_key(which.name());
    let samples: Vec<f64> = match which {
        MaximalStatistic::Chi2Upper | MaximalStatistic::Chi2Lower => {
            if k_max == 0 {
                return invalid("k_max must be >= 1");
            }
            let (sign, drift) = if which == MaximalStatistic::Chi2Upper {
                (1.0, u_alpha(alpha)?)
            } else {
                (-1.0, u_star_alpha(alpha)?)
            };
            (0..replicates)
                .into_par_iter()
                .map(|r| {
                    let mut gen = generator(replicate_seed(seed, key, r as u64));
                    chi2_running_max(&mut gen, k_max, sign, drift)
                })
                .collect()
        }
        MaximalStatistic::Linear => {
            if !(alpha > 0.0 && alpha.is_finite()) {
                return invalid(format!("linear statistic needs alpha > 0, got {alpha}"));
            }
            let mu = match mu {
                Some(mu) => mu.coefficients(),
                None => return invalid("linear statistic needs a mean vector"),
            };
            (0..replicates)
                .into_par_iter()
                .map(|r| {
                    let mut gen = generator(replicate_seed(seed, key, r as u64));
                    linear_max(&mut gen, mu, alpha)
                })
                .collect()
        }
    };
    Ok(RiskEstimate::from_samples(&samples))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MEpsilonStudy {
    pub epsilon: f64,
    /// `M_eps` centered at the data minimum `rbar^M(Y)`.
    pub empirical: RiskEstimate,
    /// `M_eps` centered at the oracle risk `r^M(mu)`; replicates with an
    /// empty defining set count as zero.
    pub oracle_centered: RiskEstimate,
    pub oracle_centered_empty: usize,
    /// `r/sigma^2 + 7 eps r / ((1 - 6 eps) sigma^2) + 15 / ((1 - 6 eps) eps)`.
    pub analytic_budget: f64,
}

/// Monte Carlo estimate of `E M_eps` next to its analytic budget.
pub fn m_epsilon_study(config: &ScenarioConfig, epsilon: f64) -> Result<MEpsilonStudy> {
    if !(epsilon > 0.0 && epsilon <= 1.0 / 7.0) {
        return invalid(format!("epsilon must lie in (0, 1/7], got {epsilon}"));
    }
    let mu = config.validate()?;
    let oracle = oracle_risk(&mu, config.sigma, &config.models)?;
    let center = oracle.oracle_risk;
    let per_rep: Vec<(usize, Option<usize>)> = (0..config.replicates)
        .into_par_iter()
        .map(|r| -> Result<(usize, Option<usize>)> {
            let y = generate_observation(&mu, config.sigma, config.seed_for(r));
            let profile: RiskProfile = risk_profile(&y, &config.models)?;
            Ok((
                m_epsilon(&profile, config.sigma, epsilon)?,
                m_epsilon_centered(&profile, config.sigma, epsilon, center)?,
            ))
        })
        .collect::<Result<_>>()?;
    let empirical: Vec<f64> = per_rep.iter().map(|(m, _)| *m as f64).collect();
    let literal: Vec<f64> = per_rep
        .iter()
        .map(|(_, m)| m.map_or(0.0, |m| m as f64))
        .collect();
    let ratio = center / config.sigma.variance();
    Ok(MEpsilonStudy {
        epsilon,
        empirical: RiskEstimate::from_samples(&empirical),
        oracle_centered: RiskEstimate::from_samples(&literal),
        oracle_centered_empty: per_rep.iter().filter(|(_, m)| m.is_none()).count(),
        analytic_budget: ratio
            + 7.0 * epsilon * ratio / (1.0 - 6.0 * epsilon)
            + 15.0 / ((1.0 - 6.0 * epsilon) * epsilon),
    })
}
