//! Special functions and regret-bound evaluators.
//!
//! * `U(a)  = -(a + log(1 - 2a)/2) / a` on `(0, 1/2)` and
//!   `U*(a) = (a - log(1 + 2a)/2) / a` on `(0, inf)`: drifts that make the
//!   running maxima of centered chi-square walks have mean at most `1/a`.
//! * `R(rho)` and `log(K - 1 + e^R)`: the entropy bound for weight sequences
//!   with geometrically decaying tails.
//! * `Psi(r) = min_{eps in (0, 1/7]} 49 eps + r (105/eps + exp(2/(e eps)))`,
//!   the remainder term of the refined exponential-weighting bound.

use std::f64::consts::E;

use serde::Serialize;

use crate::error::{invalid, Result};
use crate::estimators::{neumaier_sum, WeightVector};
use crate::model::{ModelIndexSet, NoiseLevel};
use crate::risk::{OracleReport, RegretBudgets};

/// Below this `2a`, `U` and `U*` are evaluated from their power series.
const SERIES_CUTOFF: f64 = 1e-2;

/// `U(alpha)` for `0 < alpha < 1/2`.
pub fn u_alpha(alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 0.5) {
        return invalid(format!("U(alpha) needs 0 < alpha < 1/2, got {alpha}"));
    }
    let x = 2.0 * alpha;
    if x < SERIES_CUTOFF {
        // U = sum_{k>=2} x^(k-1) / k
        return Ok(series(x, |k| 1.0 / k as f64));
    }
    Ok(-(alpha + (-x).ln_1p() / 2.0) / alpha)
}

/// `U*(alpha)` for `alpha > 0`.
pub fn u_star_alpha(alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return invalid(format!("U*(alpha) needs alpha > 0, got {alpha}"));
    }
    let x = 2.0 * alpha;
    if x < SERIES_CUTOFF {
        // U* = sum_{k>=2} (-1)^k x^(k-1) / k
        return Ok(series(x, |k| if k % 2 == 0 { 1.0 } else { -1.0 } / k as f64));
    }
    Ok((alpha - x.ln_1p() / 2.0) / alpha)
}

fn series(x: f64, coeff: impl Fn(u32) -> f64) -> f64 {
    let mut sum = 0.0;
    let mut pow = x;
    for k in 2..20 {
        sum += coeff(k) * pow;
        pow *= x;
    }
    sum
}

/// Bisection on a bracket `[lo, hi]` where `f(lo) < target <= f(hi)` and
/// `f` is increasing. Runs until the bracket cannot shrink in `f64`.
fn bisect_increasing(f: impl Fn(f64) -> f64, target: f64, mut lo: f64, mut hi: f64) -> f64 {
    for _ in 0..2000 {
        let mid = lo + (hi - lo) / 2.0;
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo + (hi - lo) / 2.0
}

/// Solves `U(alpha) = y` for `y > 0`.
pub fn u_inverse(y: f64) -> Result<f64> {
    if !(y > 0.0 && y.is_finite()) {
        return invalid(format!("U^-1 needs y > 0, got {y}"));
    }
    let u = |a: f64| u_alpha(a).expect("bracket stays inside (0, 1/2)");
    let hi = 0.5 - f64::EPSILON / 4.0;
    if u(hi) < y {
        return invalid(format!("U^-1: y = {y} exceeds the largest representable U value"));
    }
    Ok(bisect_increasing(u, y, f64::MIN_POSITIVE, hi))
}

/// Solves `U*(alpha) = y` for `0 < y < 1`.
pub fn u_star_inverse(y: f64) -> Result<f64> {
    if !(y > 0.0 && y < 1.0) {
        return invalid(format!("U*^-1 needs 0 < y < 1, got {y}"));
    }
    let u = |a: f64| u_star_alpha(a).expect("bracket stays positive");
    let mut hi = 1.0;
    while u(hi) < y {
        hi *= 2.0;
        if !hi.is_finite() {
            return invalid(format!("U*^-1 bracket overflow for y = {y}"));
        }
    }
    Ok(bisect_increasing(u, y, f64::MIN_POSITIVE, hi))
}

/// Shannon entropy in nats; zero weights contribute nothing.
pub fn entropy(w: &WeightVector) -> f64 {
    neumaier_sum(
        w.as_slice()
            .iter()
            .filter(|&&x| x > 0.0)
            .map(|&x| -x * x.ln()),
    )
}

/// `R(rho)`: `2/(e rho)` when `e rho < 1`, else
/// `(1 + 1/(rho e)) exp((1 - rho e)/(1 + rho e))`.
pub fn r_rho(rho: f64) -> Result<f64> {
    if !(rho > 0.0 && rho.is_finite()) {
        return invalid(format!("R(rho) needs rho > 0, got {rho}"));
    }
    let er = E * rho;
    if er < 1.0 {
        Ok(2.0 / er)
    } else {
        Ok((1.0 + 1.0 / er) * ((1.0 - er) / (1.0 + er)).exp())
    }
}

/// `log(K - 1 + exp(R(rho)))`, evaluated without overflowing `exp`.
pub fn lemma4_bound(k: usize, rho: f64) -> Result<f64> {
    if k == 0 {
        return invalid("entropy bound needs K >= 1");
    }
    let r = r_rho(rho)?;
    if k == 1 {
        return Ok(r);
    }
    let a = ((k - 1) as f64).ln();
    let (hi, lo) = if a > r { (a, r) } else { (r, a) };
    Ok(hi + (lo - hi).exp().ln_1p())
}

/// Weights `w = (p_1..p_{K-1}, q_1, q_2, ...) / (P + Q)`.
pub fn assemble_entropy_weights(p: &[f64], q: &[f64]) -> Result<WeightVector> {
    if p.iter().chain(q).any(|x| !(x.is_finite() && *x >= 0.0)) {
        return invalid("p and q must be finite and nonnegative");
    }
    let total = neumaier_sum(p.iter().chain(q).copied());
    if total <= 0.0 {
        return invalid("p and q must not both vanish");
    }
    WeightVector::new(p.iter().chain(q).map(|x| x / total).collect())
}

/// Lower edge of the `eps` grid used to minimize the `Psi` objective.
pub const PSI_EPS_MIN: f64 = 1e-6;
/// Upper edge of the `eps` range.
pub const PSI_EPS_MAX: f64 = 1.0 / 7.0;
const PSI_GRID_POINTS: usize = 20_001;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PsiEvaluation {
    pub r: f64,
    pub psi: f64,
    pub epsilon_star: f64,
    pub objective_at_star: f64,
}

/// `49 eps + r (105/eps + exp(2/(e eps)))`; `+inf` once the exponential overflows.
pub fn psi_objective(r: f64, eps: f64) -> f64 {
    let tail = if r == 0.0 {
        0.0
    } else {
        r * (105.0 / eps + (2.0 / (E * eps)).exp())
    };
    49.0 * eps + tail
}

/// Minimizes the `Psi` objective over `eps in [1e-6, 1/7]`.
///
/// A log-spaced grid locates the basin; a ternary search between the grid
/// neighbours of the best point refines it. `Psi(0) = 0` with `eps*` at the
/// grid's lower edge.
pub fn psi(r: f64) -> Result<PsiEvaluation> {
    if !(0.0..=1.0).contains(&r) {
        return invalid(format!("Psi(r) needs r in [0, 1], got {r}"));
    }
    if r == 0.0 {
        return Ok(PsiEvaluation {
            r,
            psi: 0.0,
            epsilon_star: PSI_EPS_MIN,
            objective_at_star: 0.0,
        });
    }
    let log_lo = PSI_EPS_MIN.ln();
    let log_hi = PSI_EPS_MAX.ln();
    let step = (log_hi - log_lo) / (PSI_GRID_POINTS - 1) as f64;
    let grid = |i: usize| {
        if i == PSI_GRID_POINTS - 1 {
            PSI_EPS_MAX
        } else {
            (log_lo + step * i as f64).exp()
        }
    };

    let mut best_i = 0;
    let mut best = f64::INFINITY;
    for i in 0..PSI_GRID_POINTS {
        let g = psi_objective(r, grid(i));
        if g < best {
            best = g;
            best_i = i;
        }
    }

    let mut lo = grid(best_i.saturating_sub(1));
    let mut hi = grid((best_i + 1).min(PSI_GRID_POINTS - 1));
    for _ in 0..200 {
        if hi - lo <= f64::EPSILON * hi {
            break;
        }
        let m1 = lo + (hi - lo) / 3.0;
        let m2 = hi - (hi - lo) / 3.0;
        if psi_objective(r, m1) <= psi_objective(r, m2) {
            hi = m2;
        } else {
            lo = m1;
        }
    }
    let mut eps = lo + (hi - lo) / 2.0;
    let mut value = psi_objective(r, eps);
    if value > best {
        eps = grid(best_i);
        value = best;
    }
    Ok(PsiEvaluation {
        r,
        psi: value,
        epsilon_star: eps,
        objective_at_star: value,
    })
}

/// Small-`r` leading term `(98/e) / log(49/r)`.
pub fn psi_asymptotic(r: f64) -> f64 {
    98.0 / E / (49.0 / r).ln()
}

/// Small-`r` approximation `(2/e) / L * (1 + log((2/e) L))` with `L = log(49/r)`.
pub fn epsilon_star_asymptotic(r: f64) -> f64 {
    let l = (49.0 / r).ln();
    2.0 / E / l * (1.0 + (2.0 / E * l).ln())
}

/// Fills the three regret budgets for an oracle computed at `(sigma, models)`.
pub fn theorem_bounds(
    oracle: &OracleReport,
    sigma: NoiseLevel,
    models: &ModelIndexSet,
) -> Result<OracleReport> {
    let var = sigma.variance();
    let ratio = oracle.oracle_risk / var;
    if !(ratio >= 1.0 && ratio.is_finite()) {
        return invalid(format!(
            "oracle risk / sigma^2 must be >= 1, got {ratio}"
        ));
    }
    let budgets = budgets_for_ratio(ratio, models.len())?;
    Ok(OracleReport {
        budgets: Some(RegretBudgets {
            t1_shape: var * budgets.t1_shape,
            t2: var * budgets.t2,
            t3: var * budgets.t3,
        }),
        ..oracle.clone()
    })
}

/// Budgets in units of `sigma^2` for `r / sigma^2 = ratio` and `#M = count`.
pub fn budgets_for_ratio(ratio: f64, count: usize) -> Result<RegretBudgets> {
    if !(ratio >= 1.0 && ratio.is_finite()) {
        return invalid(format!("r / sigma^2 must be >= 1, got {ratio}"));
    }
    if count == 0 {
        return invalid("model count must be >= 1");
    }
    let p = psi(1.0 / ratio)?;
    Ok(RegretBudgets {
        t1_shape: ratio.sqrt(),
        t2: 4.0 * (count as f64).ln(),
        t3: 4.0 * (ratio.ln() + p.psi.ln_1p()),
    })
}
