//! Command implementations behind the `seqagg` binary.
//!
//! Each command returns its process exit code: 0 on success, 1 when a
//! checked bound is violated, 2 on configuration or domain errors.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use serde_json::json;

use crate::bounds::{budgets_for_ratio, epsilon_star_asymptotic, psi, psi_asymptotic};
use crate::config::parse_config;
use crate::error::{Error, Result};
use crate::montecarlo::{lemma2_empirical, verify_oracle_inequalities, ComparisonRow, MaximalStatistic};
use crate::model::{MeanFamily, MeanVector};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VIOLATION: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

/// Column order of the comparison CSV.
pub const CSV_HEADER: [&str; 13] = [
    "scenario_id",
    "oracle_risk",
    "oracle_index",
    "ure_mean",
    "ure_se",
    "ew_mean",
    "ew_se",
    "t1_shape",
    "t2_budget",
    "t3_budget",
    "empirical_K",
    "t2_pass",
    "t3_pass",
];

pub const RESULTS_CSV: &str = "results.csv";
pub const RESULTS_JSON: &str = "results.json";
pub const MANIFEST_JSON: &str = "manifest.json";

/// 17 significant digits: exact round trip for `f64`.
pub fn fmt_real(x: f64) -> String {
    format!("{x:.16e}")
}

fn csv_record(row: &ComparisonRow) -> Vec<String> {
    vec![
        row.scenario_id.clone(),
        fmt_real(row.oracle_risk),
        row.oracle_index.to_string(),
        fmt_real(row.ure.mean),
        fmt_real(row.ure.std_error),
        fmt_real(row.ew.mean),
        fmt_real(row.ew.std_error),
        fmt_real(row.t1_shape),
        fmt_real(row.t2_budget),
        fmt_real(row.t3_budget),
        fmt_real(row.empirical_k),
        row.t2_pass.to_string(),
        row.t3_pass.to_string(),
    ]
}

fn json_record(row: &ComparisonRow) -> serde_json::Value {
    json!({
        "scenario_id": row.scenario_id,
        "oracle_risk": row.oracle_risk,
        "oracle_index": row.oracle_index,
        "ure_mean": row.ure.mean,
        "ure_se": row.ure.std_error,
        "ew_mean": row.ew.mean,
        "ew_se": row.ew.std_error,
        "t1_shape": row.t1_shape,
        "t2_budget": row.t2_budget,
        "t3_budget": row.t3_budget,
        "empirical_K": row.empirical_k,
        "t2_pass": row.t2_pass,
        "t3_pass": row.t3_pass,
        "combined_pass": row.combined_pass,
        "replicates": row.ew.replicates,
    })
}

pub fn write_rows_csv(path: &Path, rows: &[ComparisonRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(CSV_HEADER)?;
    for row in rows {
        w.write_record(csv_record(row))?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_rows_json(path: &Path, rows: &[ComparisonRow]) -> Result<()> {
    let records: Vec<_> = rows.iter().map(json_record).collect();
    let mut text = serde_json::to_string_pretty(&records)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

#[derive(Debug, Serialize)]
struct Timing {
    command: &'static str,
    seconds: f64,
}

#[derive(Debug, Serialize)]
struct RunManifest {
    tool_version: &'static str,
    config_digest: String,
    base_seeds: Vec<u64>,
    timings: Vec<Timing>,
    outputs: Vec<PathBuf>,
}

/// Result of a `simulate` run.
#[derive(Debug)]
pub struct SimulateOutcome {
    pub rows: Vec<ComparisonRow>,
    pub outputs: Vec<PathBuf>,
}

/// Runs every scenario in the config and writes CSV, JSON and manifest.
pub fn simulate(config_path: &Path, out_dir: &Path, default_seed: u64) -> Result<SimulateOutcome> {
    let started = Instant::now();
    let text = fs::read_to_string(config_path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", config_path.display())))?;
    let config = parse_config(&text, default_seed)?;
    let rows = config
        .scenarios
        .iter()
        .map(verify_oracle_inequalities)
        .collect::<Result<Vec<_>>>()?;

    fs::create_dir_all(out_dir)?;
    let csv_path = out_dir.join(RESULTS_CSV);
    let json_path = out_dir.join(RESULTS_JSON);
    write_rows_csv(&csv_path, &rows)?;
    write_rows_json(&json_path, &rows)?;

    let manifest_path = out_dir.join(MANIFEST_JSON);
    let manifest = RunManifest {
        tool_version: env!("CARGO_PKG_VERSION"),
        config_digest: config.digest.clone(),
        base_seeds: config.scenarios.iter().map(|s| s.base_seed).collect(),
        timings: vec![Timing {
            command: "simulate",
            seconds: started.elapsed().as_secs_f64(),
        }],
        outputs: vec![csv_path.clone(), json_path.clone(), manifest_path.clone()],
    };
    fs::write(&manifest_path, serde_json::to_string_pretty(&manifest)? + "\n")?;

    Ok(SimulateOutcome {
        rows,
        outputs: manifest.outputs,
    })
}

fn report_error(err: &mut impl Write, e: &Error) -> i32 {
    let _ = writeln!(err, "error: {e}");
    EXIT_USAGE
}

/// `simulate --config <path> --out <dir>`.
pub fn cmd_simulate(
    config_path: &Path,
    out_dir: &Path,
    default_seed: u64,
    out: &mut impl Write,
    err: &mut impl Write,
) -> i32 {
    match simulate(config_path, out_dir, default_seed) {
        Ok(outcome) => {
            for row in &outcome.rows {
                let _ = writeln!(
                    out,
                    "{}: oracle {:.6} ure {:.6}±{:.6} ew {:.6}±{:.6} t2 {} t3 {} K {:.3}",
                    row.scenario_id,
                    row.oracle_risk,
                    row.ure.mean,
                    row.ure.std_error,
                    row.ew.mean,
                    row.ew.std_error,
                    pass_word(row.t2_pass),
                    pass_word(row.t3_pass),
                    row.empirical_k,
                );
            }
            let code = exit_code_for(&outcome.rows);
            if code == EXIT_VIOLATION {
                let _ = writeln!(err, "bound violation in at least one scenario");
            }
            code
        }
        Err(e) => report_error(err, &e),
    }
}

/// 0 when every scenario satisfies both budgets, 1 otherwise.
pub fn exit_code_for(rows: &[ComparisonRow]) -> i32 {
    if rows.iter().all(ComparisonRow::all_pass) {
        EXIT_OK
    } else {
        EXIT_VIOLATION
    }
}

fn pass_word(ok: bool) -> &'static str {
    if ok {
        "pass"
    } else {
        "FAIL"
    }
}

/// `bounds --r <r/sigma^2> --m <#M>`: budgets in units of `sigma^2`.
pub fn cmd_bounds(r_over_sigma2: f64, count: usize, out: &mut impl Write, err: &mut impl Write) -> i32 {
    let result = budgets_for_ratio(r_over_sigma2, count)
        .and_then(|b| Ok((b, psi(1.0 / r_over_sigma2)?)));
    match result {
        Ok((b, p)) => {
            let doc = json!({
                "r_over_sigma2": r_over_sigma2,
                "model_count": count,
                "t1_shape": b.t1_shape,
                "t2": b.t2,
                "t3": b.t3,
                "combined": b.combined(),
                "psi": p,
            });
            let _ = writeln!(out, "{}", serde_json::to_string_pretty(&doc).expect("serializable"));
            EXIT_OK
        }
        Err(e) => report_error(err, &e),
    }
}

/// `psi <r>...`: one CSV row `(r, Psi(r), eps*(r))` per value, plus the
/// small-`r` asymptotic forms.
pub fn cmd_psi(values: &[f64], out: &mut impl Write, err: &mut impl Write) -> i32 {
    let evals = match values.iter().map(|&r| psi(r)).collect::<Result<Vec<_>>>() {
        Ok(e) => e,
        Err(e) => return report_error(err, &e),
    };
    let _ = writeln!(out, "r,psi,epsilon_star,psi_asymptotic,epsilon_star_asymptotic");
    for p in evals {
        let (pa, ea) = if p.r > 0.0 {
            (fmt_real(psi_asymptotic(p.r)), fmt_real(epsilon_star_asymptotic(p.r)))
        } else {
            ("0".to_string(), "".to_string())
        };
        let _ = writeln!(
            out,
            "{},{},{},{pa},{ea}",
            fmt_real(p.r),
            fmt_real(p.psi),
            fmt_real(p.epsilon_star)
        );
    }
    EXIT_OK
}

#[derive(Debug, Clone)]
pub struct LemmaCheckArgs {
    pub which: String,
    pub alpha: f64,
    pub mu: Option<String>,
    pub k_max: usize,
    pub replicates: usize,
    pub seed: u64,
}

/// `lemma-check`: Monte Carlo mean of a maximal statistic against `1/alpha`.
pub fn cmd_lemma_check(args: &LemmaCheckArgs, out: &mut impl Write, err: &mut impl Write) -> i32 {
    let run = || -> Result<(MaximalStatistic, crate::montecarlo::RiskEstimate)> {
        let which: MaximalStatistic = args.which.parse()?;
        let mu: Option<MeanVector> = match &args.mu {
            Some(spec) => {
                let family: MeanFamily = spec.parse()?;
                let n = family.declared_len().ok_or_else(|| {
                    Error::InvalidArgument(format!("mean spec '{spec}' needs n=<N>"))
                })?;
                Some(family.build(n)?)
            }
            None => None,
        };
        let est = lemma2_empirical(args.alpha, which, mu.as_ref(), args.k_max, args.replicates, args.seed)?;
        Ok((which, est))
    };
    match run() {
        Ok((which, est)) => {
            let budget = 1.0 / args.alpha;
            let pass = est.within(budget);
            let doc = json!({
                "which": which,
                "alpha": args.alpha,
                "k_max": args.k_max,
                "seed": args.seed,
                "estimate": est,
                "budget": budget,
                "pass": pass,
            });
            let _ = writeln!(out, "{}", serde_json::to_string_pretty(&doc).expect("serializable"));
            if pass {
                EXIT_OK
            } else {
                EXIT_VIOLATION
            }
        }
        Err(e) => report_error(err, &e),
    }
}
