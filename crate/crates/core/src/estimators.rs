//! Projection estimators, unbiased risk estimates, model selection by
//! minimal estimated risk, and exponential-weight aggregation.
//!
//! The unbiased risk estimate of the projection `mu_hat^m` is
//! `rbar(Y, m) = -sum_{i<=m} Y_i^2 + 2 sigma^2 m`, which equals the true risk
//! minus the unknown constant `||mu||^2` in expectation. Every consumer below
//! (argmin, softmax, differences) is invariant to that shift.

use crate::error::{invalid, Result};
use crate::model::{ModelIndexSet, NoiseLevel, Observation};

/// Probability weights aligned with a [`ModelIndexSet`].
#[derive(Debug, Clone, PartialEq)]
pub struct WeightVector {
    weights: Vec<f64>,
}

impl WeightVector {
    /// Accepts nonnegative weights summing to one within `1e-12`.
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return invalid("weight vector must be non-empty");
        }
        if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return invalid("weights must be finite and nonnegative");
        }
        let total = neumaier_sum(weights.iter().copied());
        if (total - 1.0).abs() > 1e-12 {
            return invalid(format!("weights sum to {total}, not 1"));
        }
        Ok(Self { weights })
    }

    pub fn uniform(k: usize) -> Result<Self> {
        if k == 0 {
            return invalid("weight vector must be non-empty");
        }
        Ok(Self {
            weights: vec![1.0 / k as f64; k],
        })
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Position of the largest weight (first on ties).
    pub fn argmax_position(&self) -> usize {
        let mut best = 0;
        for (i, &w) in self.weights.iter().enumerate() {
            if w > self.weights[best] {
                best = i;
            }
        }
        best
    }
}

/// Unbiased risk estimates over a model set, with the selected model.
#[derive(Debug, Clone, PartialEq)]
pub struct RiskProfile {
    models: Vec<usize>,
    values: Vec<f64>,
    min_value: f64,
    argmin_position: usize,
}

impl RiskProfile {
    /// Builds a profile from precomputed values; ties go to the smallest `m`.
    pub fn from_values(models: &ModelIndexSet, values: Vec<f64>) -> Result<Self> {
        if values.len() != models.len() {
            return invalid(format!(
                "profile has {} values for {} models",
                values.len(),
                models.len()
            ));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return invalid("profile values must be finite");
        }
        let mut argmin_position = 0;
        for (i, &v) in values.iter().enumerate() {
            // strict comparison keeps the earliest (smallest m) minimizer
            if v < values[argmin_position] {
                argmin_position = i;
            }
        }
        Ok(Self {
            models: models.indices().to_vec(),
            min_value: values[argmin_position],
            values,
            argmin_position,
        })
    }

    pub fn models(&self) -> &[usize] {
        &self.models
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn min_value(&self) -> f64 {
        self.min_value
    }

    pub fn argmin_position(&self) -> usize {
        self.argmin_position
    }

    /// The selected dimension `m_hat(Y)`.
    pub fn argmin_index(&self) -> usize {
        self.models[self.argmin_position]
    }
}

/// `mu_hat^m`: keeps `Y_1..Y_m`, zeroes the rest.
pub fn projection_estimate(y: &Observation, m: usize) -> Result<Vec<f64>> {
    if m == 0 {
        return invalid("projection dimension must be >= 1");
    }
    Ok(y
        .values
        .iter()
        .enumerate()
        .map(|(i, &v)| if i < m { v } else { 0.0 })
        .collect())
}

/// `-sum_{i<=m} Y_i^2 + 2 sigma^2 m`.
pub fn unbiased_risk(y: &Observation, m: usize) -> Result<f64> {
    if m == 0 || m > y.len() {
        return invalid(format!(
            "unbiased risk needs 1 <= m <= N = {}, got m = {m}",
            y.len()
        ));
    }
    let energy: f64 = y.values[..m].iter().map(|v| v * v).sum();
    Ok(-energy + 2.0 * y.noise.variance() * m as f64)
}

/// Unbiased risk estimates for every `m` in `models`, via one prefix sum.
pub fn risk_profile(y: &Observation, models: &ModelIndexSet) -> Result<RiskProfile> {
    models.check_support(y.len())?;
    let var2 = 2.0 * y.noise.variance();
    let mut values = Vec::with_capacity(models.len());
    let mut energy = 0.0;
    let mut upto = 0;
    for &m in models.indices() {
        while upto < m {
            energy += y.values[upto] * y.values[upto];
            upto += 1;
        }
        values.push(-energy + var2 * m as f64);
    }
    RiskProfile::from_values(models, values)
}

/// Point mass on the selected model.
pub fn ure_weights(profile: &RiskProfile) -> WeightVector {
    let mut weights = vec![0.0; profile.values.len()];
    weights[profile.argmin_position] = 1.0;
    WeightVector { weights }
}

/// `w_m ∝ exp(-rbar_m / (4 sigma^2))`.
///
/// The minimum is subtracted first so the largest exponent is exactly zero;
/// far-away models underflow to zero instead of overflowing the sum.
pub fn exponential_weights(profile: &RiskProfile, sigma: NoiseLevel) -> WeightVector {
    let temperature = 4.0 * sigma.variance();
    let min = profile.min_value;
    let mut weights: Vec<f64> = profile
        .values
        .iter()
        .map(|&v| (-(v - min) / temperature).exp())
        .collect();
    // the minimizer contributes exp(0) = 1, so total >= 1
    let total = neumaier_sum(weights.iter().copied());
    for w in &mut weights {
        *w /= total;
    }
    WeightVector { weights }
}

/// `sum_m w_m mu_hat^m`, computed as `Y_i * sum_{m >= i} w_m`.
pub fn aggregate(y: &Observation, models: &ModelIndexSet, w: &WeightVector) -> Result<Vec<f64>> {
    if w.len() != models.len() {
        return invalid(format!(
            "{} weights for {} models",
            w.len(),
            models.len()
        ));
    }
    let n = y.len();
    let mut out = vec![0.0; n];
    // walk models from the largest down, accumulating the suffix weight
    let mut suffix = 0.0;
    let mut pos = models.len();
    for i in (1..=n).rev() {
        while pos > 0 && models.indices()[pos - 1] >= i {
            pos -= 1;
            suffix += w.weights[pos];
        }
        out[i - 1] = y.values[i - 1] * suffix.min(1.0);
    }
    Ok(out)
}

/// Largest `m` with `rbar_m - rbar_min <= 4 eps sigma^2 (m - m_hat) + 4 sigma^2`.
pub fn m_epsilon(profile: &RiskProfile, sigma: NoiseLevel, epsilon: f64) -> Result<usize> {
    let found = m_epsilon_centered(profile, sigma, epsilon, profile.min_value)?;
    Ok(found.expect("the selected model always satisfies the defining inequality"))
}

/// Same scan with an arbitrary centering constant in place of `rbar_min`.
/// Returns `None` when no model satisfies the inequality.
pub fn m_epsilon_centered(
    profile: &RiskProfile,
    sigma: NoiseLevel,
    epsilon: f64,
    center: f64,
) -> Result<Option<usize>> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return invalid(format!("epsilon must lie in (0, 1), got {epsilon}"));
    }
    let var = sigma.variance();
    let m_hat = profile.argmin_index() as f64;
    Ok(profile
        .models
        .iter()
        .zip(&profile.values)
        .rev()
        .find(|(&m, &v)| v - center <= 4.0 * epsilon * var * (m as f64 - m_hat) + 4.0 * var)
        .map(|(&m, _)| m))
}

pub(crate) fn neumaier_sum(xs: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for x in xs {
        let t = sum + x;
        if sum.abs() >= x.abs() {
            comp += (sum - t) + x;
        } else {
            comp += (x - t) + sum;
        }
        sum = t;
    }
    sum + comp
}
