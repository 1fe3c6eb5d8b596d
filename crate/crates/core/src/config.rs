//! Scenario configuration files.
//!
//! Flat `key = value` lines. Keys before the first section are defaults
//! shared by every scenario; each `[scenario <id>]` header opens a new
//! scenario. `#` starts a comment.
//!
//! ```text
//! base_seed = 7
//! replicates = 100000
//!
//! [scenario zero-s1]
//! mu = zero
//! sigma = 1
//! models = 1..100
//! ```
//!
//! Scenario keys: `mu`, `sigma`, `models` (required); `n`, `replicates`,
//! `seed`, `estimator` (optional). Defaults accept `replicates`,
//! `base_seed` and `estimator`.

use std::collections::BTreeMap;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::model::NoiseLevel;
use crate::montecarlo::{EstimatorChoice, ScenarioConfig};

/// Seed used when neither the config nor the environment supplies one.
pub const FALLBACK_SEED: u64 = 20_240_601;
/// Environment variable overriding [`FALLBACK_SEED`].
pub const SEED_ENV: &str = "SEQAGG_SEED";

const DEFAULT_KEYS: &[&str] = &["replicates", "base_seed", "estimator"];
const SCENARIO_KEYS: &[&str] = &["mu", "sigma", "models", "n", "replicates", "seed", "estimator"];

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub scenarios: Vec<ScenarioConfig>,
    /// SHA-256 of the canonical form, hex encoded.
    pub digest: String,
}

type Section = BTreeMap<String, String>;

fn config_err<T>(line: usize, msg: impl std::fmt::Display) -> Result<T> {
    Err(Error::Config(format!("line {line}: {msg}")))
}

/// Parses config text. `default_seed` applies when no `base_seed` is given.
pub fn parse_config(text: &str, default_seed: u64) -> Result<ExperimentConfig> {
    let mut defaults = Section::new();
    let mut sections: Vec<(String, usize, Section)> = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(header) = line.strip_prefix('[') {
            let Some(header) = header.strip_suffix(']') else {
                return config_err(lineno, "unterminated section header");
            };
            let mut words = header.split_whitespace();
            match (words.next(), words.next(), words.next()) {
                (Some("scenario"), Some(id), None) => {
                    if sections.iter().any(|(other, _, _)| other == id) {
                        return config_err(lineno, format!("duplicate scenario '{id}'"));
                    }
                    sections.push((id.to_string(), lineno, Section::new()));
                }
                _ => return config_err(lineno, format!("expected [scenario <id>], got [{header}]")),
            }
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return config_err(lineno, format!("expected key = value, got '{line}'"));
        };
        let (key, value) = (key.trim().to_string(), value.trim().to_string());
        let (target, allowed) = match sections.last_mut() {
            Some((_, _, s)) => (s, SCENARIO_KEYS),
            None => (&mut defaults, DEFAULT_KEYS),
        };
        if !allowed.contains(&key.as_str()) {
            return config_err(lineno, format!("unknown key '{key}'"));
        }
        if target.insert(key.clone(), value).is_some() {
            return config_err(lineno, format!("duplicate key '{key}'"));
        }
    }

    if sections.is_empty() {
        return Err(Error::Config("no scenarios defined".into()));
    }

    let base_seed = match defaults.get("base_seed") {
        Some(v) => parse_num::<u64>(0, "base_seed", v)?,
        None => default_seed,
    };
    let scenarios = sections
        .iter()
        .map(|(id, line, s)| build_scenario(id, *line, s, &defaults, base_seed))
        .collect::<Result<Vec<_>>>()?;

    Ok(ExperimentConfig {
        scenarios,
        digest: digest(&canonical_text(&defaults, &sections)),
    })
}

fn parse_num<T: std::str::FromStr>(line: usize, key: &str, v: &str) -> Result<T> {
    v.parse::<T>()
        .or_else(|_| config_err(line, format!("bad value '{v}' for {key}")))
}

fn build_scenario(
    id: &str,
    line: usize,
    s: &Section,
    defaults: &Section,
    base_seed: u64,
) -> Result<ScenarioConfig> {
    let get = |k: &str| s.get(k).or_else(|| defaults.get(k));
    let required = |k: &str| {
        s.get(k)
            .ok_or_else(|| Error::Config(format!("scenario '{id}' (line {line}): missing '{k}'")))
    };
    let wrap = |e: Error| Error::Config(format!("scenario '{id}' (line {line}): {e}"));

    let mu = required("mu")?.parse().map_err(wrap)?;
    let sigma = NoiseLevel::new(parse_num(line, "sigma", required("sigma")?)?).map_err(wrap)?;
    let models = required("models")?.parse().map_err(wrap)?;
    let n = s.get("n").map(|v| parse_num(line, "n", v)).transpose()?;
    let replicates = match get("replicates") {
        Some(v) => parse_num(line, "replicates", v)?,
        None => return Err(Error::Config(format!("scenario '{id}': missing 'replicates'"))),
    };
    let base_seed = match s.get("seed") {
        Some(v) => parse_num(line, "seed", v)?,
        None => base_seed,
    };
    let estimator = match get("estimator") {
        Some(v) => v.parse::<EstimatorChoice>().map_err(wrap)?,
        None => EstimatorChoice::Both,
    };

    let cfg = ScenarioConfig {
        id: id.to_string(),
        mu,
        n,
        sigma,
        models,
        replicates,
        base_seed,
        estimator,
    };
    if cfg.replicates == 0 {
        return Err(Error::Config(format!("scenario '{id}': replicates must be >= 1")));
    }
    cfg.mean_vector().map_err(wrap)?;
    Ok(cfg)
}

/// Comments and blank lines dropped, keys sorted within each section.
fn canonical_text(defaults: &Section, sections: &[(String, usize, Section)]) -> String {
    let mut out = String::new();
    for (k, v) in defaults {
        out.push_str(&format!("{k}={v}\n"));
    }
    for (id, _, s) in sections {
        out.push_str(&format!("[scenario {id}]\n"));
        for (k, v) in s {
            out.push_str(&format!("{k}={v}\n"));
        }
    }
    out
}

fn digest(text: &str) -> String {
    Sha256::digest(text.as_bytes())
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

/// Seed default from [`SEED_ENV`], falling back to [`FALLBACK_SEED`].
pub fn default_seed_from_env() -> Result<u64> {
    match std::env::var(SEED_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| Error::Config(format!("{SEED_ENV}='{v}' is not an unsigned integer"))),
        Err(_) => Ok(FALLBACK_SEED),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::MeanFamily;

    const SAMPLE: &str = "
        # shared
        replicates = 500
        base_seed = 11

        [scenario a]
        mu = poly:beta=1,scale=2
        sigma = 0.5
        models = 1..20
        n = 40

        [scenario b]   # trailing comment
        models = 1,2
        sigma = 1
        mu = zero
        replicates = 7
        seed = 99
        estimator = ew
    ";

    #[test]
    fn parses_sections_and_defaults() {
        let cfg = parse_config(SAMPLE, 1).unwrap();
        assert_eq!(cfg.scenarios.len(), 2);
        let a = &cfg.scenarios[0];
        assert_eq!(a.id, "a");
        assert_eq!(a.replicates, 500);
        assert_eq!(a.base_seed, 11);
        assert_eq!(a.n, Some(40));
        assert_eq!(a.mean_vector().unwrap().len(), 40);
        assert_eq!(a.estimator, EstimatorChoice::Both);
        assert_eq!(
            a.mu,
            MeanFamily::Poly {
                beta: 1.0,
                scale: 2.0,
                n: None
            }
        );
        let b = &cfg.scenarios[1];
        assert_eq!((b.replicates, b.base_seed), (7, 99));
        assert_eq!(b.estimator, EstimatorChoice::Ew);
        assert_eq!(b.mean_vector().unwrap().len(), 2);
    }

    #[test]
    fn digest_ignores_layout() {
        let a = parse_config(SAMPLE, 1).unwrap();
        let reordered = SAMPLE.replace("        n = 40\n", "").replace(
            "models = 1..20",
            "n = 40\n        models = 1..20   # moved",
        );
        let b = parse_config(&reordered, 1).unwrap();
        assert_eq!(a.digest, b.digest);
        assert_eq!(a.digest.len(), 64);
        let c = parse_config(&SAMPLE.replace("sigma = 0.5", "sigma = 0.6"), 1).unwrap();
        assert_ne!(a.digest, c.digest);
    }

    #[test]
    fn default_seed_used_when_absent() {
        let text = "replicates = 3\n[scenario x]\nmu = zero\nsigma = 1\nmodels = 1\n";
        assert_eq!(parse_config(text, 123).unwrap().scenarios[0].base_seed, 123);
    }

    #[test]
    fn rejects_bad_configs() {
        let bad = [
            "",
            "replicates = 3\n",
            "[scenario x]\nmu = zero\nsigma = 1\nmodels = 1\n",
            "replicates = 3\n[scenario x]\nmu = zero\nsigma = 0\nmodels = 1\n",
            "replicates = 3\n[scenario x]\nmu = zero\nsigma = 1\n",
            "replicates = 3\n[scenario x]\nmu = zero\nsigma = 1\nmodels = 1\ncolour = red\n",
            "replicates = 3\n[scenario x]\nmu = zero\nsigma = 1\nmodels = 1\n[scenario x]\n",
            "replicates = 3\n[scenario x\n",
            "replicates = 3\n[run x]\n",
            "replicates = 0\n[scenario x]\nmu = zero\nsigma = 1\nmodels = 1\n",
            "replicates = 3\n[scenario x]\nmu = zero:n=3\nsigma = 1\nmodels = 1..5\n",
            "replicates = 3\n[scenario x]\nmu = zero\nsigma = 1\nmodels = 1\nmodels = 2\n",
            "mu = zero\n[scenario x]\n",
        ];
        for text in bad {
            assert!(
                matches!(parse_config(text, 1), Err(Error::Config(_))),
                "accepted: {text:?}"
            );
        }
    }
}
