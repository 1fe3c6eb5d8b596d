//! Acceptance suite. Each criterion is its own test and prints one
//! `criterion N: PASS|FAIL ...` line (run with `--nocapture` to see them).

use std::f64::consts::E;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use seqagg::bounds::{
    assemble_entropy_weights, entropy, lemma4_bound, psi, r_rho, u_alpha, u_inverse,
    u_star_alpha, u_star_inverse,
};
use seqagg::cli::{simulate, RESULTS_CSV};
use seqagg::estimators::{exponential_weights, unbiased_risk, RiskProfile};
use seqagg::model::{generate_observation, true_projection_risk};
use seqagg::montecarlo::{
    lemma2_empirical, mc_losses, verify_oracle_inequalities, ComparisonRow, EstimatorChoice,
    MaximalStatistic, RiskEstimate, ScenarioConfig, SE_TOLERANCE,
};
use seqagg::rng::replicate_seed;
use seqagg::{MeanFamily, ModelIndexSet, NoiseLevel};

fn report(n: u32, pass: bool, detail: impl std::fmt::Display) {
    println!("criterion {n}: {} {detail}", if pass { "PASS" } else { "FAIL" });
}

fn scenario(id: &str, mu: &str, sigma: f64, models: &str, reps: usize) -> ScenarioConfig {
    ScenarioConfig {
        id: id.into(),
        mu: mu.parse().unwrap(),
        n: None,
        sigma: NoiseLevel::new(sigma).unwrap(),
        models: models.parse().unwrap(),
        replicates: reps,
        base_seed: 20_240_601,
        estimator: EstimatorChoice::Both,
    }
}

// ---------------------------------------------------------------------------
// 1. unbiasedness of the risk estimate
// ---------------------------------------------------------------------------

#[test]
fn criterion_01_unbiased_risk() {
    let start = Instant::now();
    let mu = MeanFamily::Poly {
        beta: 1.0,
        scale: 1.0,
        n: Some(50),
    }
    .build(50)
    .unwrap();
    let sigma = NoiseLevel::new(1.0).unwrap();
    let mut ok = true;
    let mut details = Vec::new();
    for m in [1usize, 5, 20] {
        let truth = true_projection_risk(&mu, sigma, m).unwrap();
        let diffs: Vec<f64> = (0..100_000u64)
            .map(|r| {
                let y = generate_observation(&mu, sigma, replicate_seed(1, m as u64, r));
                unbiased_risk(&y, m).unwrap() + mu.squared_norm() - truth
            })
            .collect();
        let est = RiskEstimate::from_samples(&diffs);
        let pass = est.mean.abs() <= SE_TOLERANCE * est.std_error;
        ok &= pass;
        details.push(format!("m={m}: bias {:.2e} (se {:.2e})", est.mean, est.std_error));
    }
    let elapsed = start.elapsed();
    ok &= elapsed < Duration::from_secs(30);
    report(1, ok, format!("{} in {:.1?}", details.join("; "), elapsed));
    assert!(ok);
}

// ---------------------------------------------------------------------------
// 2, 3, 8. nine-scenario grid
// ---------------------------------------------------------------------------

struct Grid {
    rows: Vec<ComparisonRow>,
    elapsed: Duration,
}

fn grid() -> &'static Grid {
    static GRID: OnceLock<Grid> = OnceLock::new();
    GRID.get_or_init(|| {
        let start = Instant::now();
        let mut rows = Vec::new();
        for (name, mu) in [("zero", "zero"), ("poly", "poly:beta=1"), ("sparse", "sparse:k=5,amp=1")] {
            for sigma in [1.0, 0.3, 0.1] {
                let cfg = scenario(&format!("{name}-s{sigma}"), mu, sigma, "1..100", 100_000);
                rows.push(verify_oracle_inequalities(&cfg).unwrap());
            }
        }
        Grid {
            rows,
            elapsed: start.elapsed(),
        }
    })
}

#[test]
fn criterion_02_theorem2_budget() {
    let g = grid();
    let mut ok = g.elapsed < Duration::from_secs(300);
    for row in &g.rows {
        ok &= row.t2_pass;
        println!(
            "  {}: ew {:.5}±{:.5} <= {:.5} + {:.5} {}",
            row.scenario_id,
            row.ew.mean,
            row.ew.std_error,
            row.oracle_risk,
            row.t2_budget,
            row.t2_pass
        );
    }
    report(2, ok, format!("9 scenarios in {:.1?}", g.elapsed));
    assert!(ok);
}

#[test]
fn criterion_03_theorem3_budget() {
    let g = grid();
    let mut ok = true;
    for row in &g.rows {
        ok &= row.t3_pass;
        println!(
            "  {}: ew {:.5}±{:.5} <= {:.5} + {:.5} {}",
            row.scenario_id, row.ew.mean, row.ew.std_error, row.oracle_risk, row.t3_budget, row.t3_pass
        );
    }
    report(3, ok, "9 scenarios");
    assert!(ok);
}

#[test]
fn criterion_08_empirical_ure_constant() {
    let g = grid();
    let ks: Vec<f64> = g.rows.iter().map(|r| r.empirical_k).collect();
    for row in &g.rows {
        println!("  {}: K = {:.4}", row.scenario_id, row.empirical_k);
    }
    let ok = ks.iter().all(|k| k.is_finite() && *k > 0.0);
    let max = ks.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    report(8, ok, format!("max empirical K = {max:.4}"));
    assert!(ok);
}

// ---------------------------------------------------------------------------
// 4. maximal inequalities
// ---------------------------------------------------------------------------

#[test]
fn criterion_04_maximal_inequalities() {
    let start = Instant::now();
    let mu = MeanFamily::Poly {
        beta: 1.0,
        scale: 1.0,
        n: Some(100),
    }
    .build(100)
    .unwrap();
    let mut cases: Vec<(MaximalStatistic, f64)> = Vec::new();
    cases.extend([0.1, 0.25, 0.4].map(|a| (MaximalStatistic::Chi2Upper, a)));
    cases.extend([0.1, 0.5, 1.0].map(|a| (MaximalStatistic::Chi2Lower, a)));
    cases.extend([0.5, 1.0].map(|a| (MaximalStatistic::Linear, a)));
    let mut ok = true;
    for (which, alpha) in cases {
        let est = lemma2_empirical(alpha, which, Some(&mu), 10_000, 10_000, 4).unwrap();
        let pass = est.within(1.0 / alpha);
        ok &= pass;
        println!(
            "  {} alpha={alpha}: mean {:.4} (se {:.4}) vs 1/alpha = {:.4} {pass}",
            which.name(),
            est.mean,
            est.std_error,
            1.0 / alpha
        );
    }
    let elapsed = start.elapsed();
    ok &= elapsed < Duration::from_secs(120);
    report(4, ok, format!("8 checks in {elapsed:.1?}"));
    assert!(ok);
}

// ---------------------------------------------------------------------------
// 5. inverse-function inequalities
// ---------------------------------------------------------------------------

#[test]
fn criterion_05_inverse_inequalities() {
    let n = 1000;
    let mut ok = true;
    let mut worst_trip = 0.0f64;
    for i in 0..n {
        let y = 0.05 + (5.0 - 0.05) * i as f64 / (n - 1) as f64;
        let a = u_inverse(y).unwrap();
        ok &= a >= y / (1.0 + 2.0 * y);
        worst_trip = worst_trip.max((u_alpha(a).unwrap() - y).abs());

        let y = 0.05 + (0.95 - 0.05) * i as f64 / (n - 1) as f64;
        let a = u_star_inverse(y).unwrap();
        ok &= a >= y;
        worst_trip = worst_trip.max((u_star_alpha(a).unwrap() - y).abs());
    }
    ok &= worst_trip <= 1e-10;
    report(5, ok, format!("worst round-trip error {worst_trip:.2e}"));
    assert!(ok);
}

// ---------------------------------------------------------------------------
// 6. entropy bound
// ---------------------------------------------------------------------------

/// `q_1 = 1`, `q_k = u_k exp(-rho (k - 2) - 1)` for `k >= 2`, truncated once
/// the envelope drops below 1e-300.
fn random_tail(rng: &mut ChaCha8Rng, rho: f64) -> Vec<f64> {
    let mode = rng.gen_range(0..3);
    let mut q = vec![1.0];
    for k in 2.. {
        let envelope = (-rho * (k as f64 - 2.0) - 1.0).exp();
        if envelope < 1e-300 {
            break;
        }
        let u: f64 = match mode {
            0 => 1.0,
            1 => rng.gen(),
            _ => {
                if rng.gen_bool(0.5) {
                    1.0
                } else {
                    0.0
                }
            }
        };
        q.push(u * envelope);
    }
    q
}

#[test]
fn criterion_06_entropy_bound() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let ks = [2usize, 10, 100];
    let rhos = [0.2, 1.0 / E, 1.0, 5.0];
    // per rho: (cases, violations, min slack)
    let mut stats = [(0usize, 0usize, f64::INFINITY); 4];
    let mut cases = 0;
    while cases < 1000 {
        for &k in &ks {
            for (j, &rho) in rhos.iter().enumerate() {
                let scale = 10f64.powf(rng.gen_range(-6.0..6.0));
                let p: Vec<f64> = (0..k - 1).map(|_| scale * rng.gen::<f64>()).collect();
                let q = random_tail(&mut rng, rho);
                let w = assemble_entropy_weights(&p, &q).unwrap();
                let slack = lemma4_bound(k, rho).unwrap() - entropy(&w);
                let s = &mut stats[j];
                s.0 += 1;
                s.1 += usize::from(slack < 0.0);
                s.2 = s.2.min(slack);
                cases += 1;
            }
        }
    }
    for (rho, (n, bad, slack)) in rhos.iter().zip(&stats) {
        println!("  rho={rho:.4}: {bad}/{n} violations, min slack {slack:.3e}");
    }
    let seam = 1.0 / E;
    let jump = (r_rho(seam).unwrap() - r_rho(seam * (1.0 - 1e-15)).unwrap()).abs();
    let violations: usize = stats.iter().map(|s| s.1).sum();
    let ok = violations == 0 && jump <= 1e-12;
    report(6, ok, format!("{cases} constructions, {violations} violations, seam jump {jump:.1e}"));
    assert!(ok);
}

// ---------------------------------------------------------------------------
// 7. small-r behaviour of Psi
// ---------------------------------------------------------------------------

#[test]
fn criterion_07_psi_asymptotics() {
    let products: Vec<f64> = [1e-3, 1e-4, 1e-5, 1e-6]
        .iter()
        .map(|&r| psi(r).unwrap().psi * (E / 98.0) * (49.0f64 / r).ln())
        .collect();
    let approaching = products
        .windows(2)
        .all(|w| (w[1] - 1.0).abs() < (w[0] - 1.0).abs());
    let last = products[3];
    let in_band = (0.5..=1.5).contains(&last);
    let ok = approaching && in_band;
    report(
        7,
        ok,
        format!("products {products:.4?}; monotone approach {approaching}; r=1e-6 in [0.5, 1.5] {in_band}"),
    );
    assert!(ok);
}

// ---------------------------------------------------------------------------
// 9. EW against URE when r/sigma^2 is large
// ---------------------------------------------------------------------------

#[test]
fn criterion_09_ew_vs_ure() {
    let cfg = scenario("poly-s0.05", "poly:beta=1", 0.05, "1..200", 100_000);
    let row = verify_oracle_inequalities(&cfg).unwrap();
    let ew_regret = row.ew.mean - row.oracle_risk;
    let ure_regret = row.ure.mean - row.oracle_risk;
    let combined_se = (row.ew.std_error.powi(2) + row.ure.std_error.powi(2)).sqrt();
    let ok = ew_regret <= ure_regret + SE_TOLERANCE * combined_se;

    let losses = mc_losses(&cfg).unwrap();
    let paired: Vec<f64> = losses.iter().map(|l| l.ew - l.ure).collect();
    let paired = RiskEstimate::from_samples(&paired);
    report(
        9,
        ok,
        format!(
            "r/sigma^2 = {:.1}; EW regret {ew_regret:.5} vs URE regret {ure_regret:.5} (combined se {combined_se:.5}); paired diff {:.5} ± {:.5}",
            row.oracle_risk / 0.0025,
            paired.mean,
            paired.std_error
        ),
    );
    if !ok {
        // soft criterion: stated as a hypothesis, reported but not enforced
        println!("warning: exponential weighting did not beat URE selection in this scenario");
    }
}

// ---------------------------------------------------------------------------
// 10. softmax invariants
// ---------------------------------------------------------------------------

#[test]
fn criterion_10_softmax_invariants() {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let dyadic = |rng: &mut ChaCha8Rng, half_width: f64| {
        // multiples of 2^-20, so shifted sums stay exact
        (rng.gen_range(-half_width..half_width) * 1_048_576.0).round() / 1_048_576.0
    };
    let mut ok = true;
    let mut worst_sum = 0.0f64;
    let mut worst_shift = 0.0f64;
    for _ in 0..10_000 {
        let k = rng.gen_range(1..=60);
        let models = ModelIndexSet::range(1, k).unwrap();
        let spread = 10f64.powf(rng.gen_range(-2.0..3.0));
        let values: Vec<f64> = (0..k).map(|_| dyadic(&mut rng, spread)).collect();
        let sigma = NoiseLevel::new(10f64.powf(rng.gen_range(-1.0..1.0))).unwrap();
        let c = dyadic(&mut rng, 1e6);

        let p = RiskProfile::from_values(&models, values.clone()).unwrap();
        let shifted = RiskProfile::from_values(&models, values.iter().map(|v| v + c).collect()).unwrap();
        let w = exponential_weights(&p, sigma);
        let ws = exponential_weights(&shifted, sigma);

        ok &= w.as_slice().iter().all(|x| *x >= 0.0 && x.is_finite());
        let sum: f64 = w.as_slice().iter().sum();
        worst_sum = worst_sum.max((sum - 1.0).abs());
        let shift = w
            .as_slice()
            .iter()
            .zip(ws.as_slice())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        worst_shift = worst_shift.max(shift);
        ok &= w.argmax_position() == p.argmin_position();
    }
    ok &= worst_sum <= 1e-12 && worst_shift <= 1e-12;
    report(
        10,
        ok,
        format!("10^4 profiles; worst |sum-1| {worst_sum:.1e}; worst shift change {worst_shift:.1e}"),
    );
    assert!(ok);
}

// ---------------------------------------------------------------------------
// 11. byte-identical simulate output
// ---------------------------------------------------------------------------

#[test]
fn criterion_11_deterministic_simulate() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("grid.cfg");
    std::fs::write(
        &cfg,
        "replicates = 5000\nbase_seed = 42\n\n\
         [scenario zero]\nmu = zero\nsigma = 1\nmodels = 1..50\n\n\
         [scenario poly]\nmu = poly:beta=1\nsigma = 0.3\nmodels = 1..50\n",
    )
    .unwrap();
    let a = simulate(&cfg, &dir.path().join("a"), 1).unwrap();
    let b = simulate(&cfg, &dir.path().join("b"), 1).unwrap();
    let csv_a = std::fs::read(dir.path().join("a").join(RESULTS_CSV)).unwrap();
    let csv_b = std::fs::read(dir.path().join("b").join(RESULTS_CSV)).unwrap();
    let ok = csv_a == csv_b && a.rows == b.rows;
    report(11, ok, format!("{} bytes", csv_a.len()));
    assert!(ok);
}
