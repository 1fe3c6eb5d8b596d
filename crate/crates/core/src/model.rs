//! The Gaussian sequence model `Y_i = mu_i + sigma * xi_i`.
//!
//! Mean vectors have finite support: `mu` is stored up to a declared length
//! `N` and every coordinate beyond `N` is exactly zero, so tail sums and
//! projection risks are computed without truncation error.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{invalid, Error, Result};
use crate::rng;

/// Mean vector with an exact zero tail beyond `len()`.
#[derive(Debug, Clone, PartialEq)]
pub struct MeanVector {
    coefficients: Vec<f64>,
    // tail_sq[m] = sum_{i > m} mu_i^2, for m = 0..=N
    tail_sq: Vec<f64>,
}

impl MeanVector {
    pub fn new(coefficients: Vec<f64>) -> Result<Self> {
        if coefficients.is_empty() {
            return invalid("mean vector must have at least one coordinate");
        }
        if let Some(i) = coefficients.iter().position(|c| !c.is_finite()) {
            return invalid(format!("mean coordinate {} is not finite", i + 1));
        }
        let n = coefficients.len();
        let mut tail_sq = vec![0.0; n + 1];
        for m in (0..n).rev() {
            tail_sq[m] = tail_sq[m + 1] + coefficients[m] * coefficients[m];
        }
        if !tail_sq[0].is_finite() {
            return invalid("squared norm of mean vector overflows");
        }
        Ok(Self {
            coefficients,
            tail_sq,
        })
    }

    pub fn zeros(n: usize) -> Result<Self> {
        Self::new(vec![0.0; n])
    }

    /// Declared length `N`.
    pub fn len(&self) -> usize {
        self.coefficients.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coefficients.is_empty()
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn squared_norm(&self) -> f64 {
        self.tail_sq[0]
    }

    /// `sum_{i > m} mu_i^2`; zero once `m >= N`.
    pub fn tail_energy(&self, m: usize) -> f64 {
        self.tail_sq.get(m).copied().unwrap_or(0.0)
    }

    pub fn scaled(&self, c: f64) -> Result<Self> {
        Self::new(self.coefficients.iter().map(|x| c * x).collect())
    }
}

/// Known noise standard deviation, strictly positive.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct NoiseLevel(f64);

impl NoiseLevel {
    pub fn new(sigma: f64) -> Result<Self> {
        if !(sigma.is_finite() && sigma > 0.0) {
            return invalid(format!("noise level must be finite and > 0, got {sigma}"));
        }
        Ok(Self(sigma))
    }

    pub fn sigma(self) -> f64 {
        self.0
    }

    pub fn variance(self) -> f64 {
        self.0 * self.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub values: Vec<f64>,
    pub noise: NoiseLevel,
    pub seed: u64,
}

impl Observation {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Draws `Y = mu + sigma * xi` from the generator seeded by `seed`.
pub fn generate_observation(mu: &MeanVector, sigma: NoiseLevel, seed: u64) -> Observation {
    let mut gen = rng::generator(seed);
    let s = sigma.sigma();
    let values = mu
        .coefficients()
        .iter()
        .map(|&m| {
            let z: f64 = gen.sample(StandardNormal);
            m + s * z
        })
        .collect();
    Observation {
        values,
        noise: sigma,
        seed,
    }
}

/// Exact risk of the projection onto the first `m` coordinates:
/// `sum_{i>m} mu_i^2 + sigma^2 m`.
pub fn true_projection_risk(mu: &MeanVector, sigma: NoiseLevel, m: usize) -> Result<f64> {
    if m == 0 {
        return invalid("projection dimension must be >= 1");
    }
    Ok(mu.tail_energy(m) + sigma.variance() * m as f64)
}

/// `||estimate - mu||^2`, both vectors padded with zeros.
pub fn squared_loss(estimate: &[f64], mu: &MeanVector) -> f64 {
    let coeffs = mu.coefficients();
    let n = estimate.len().max(coeffs.len());
    (0..n)
        .map(|i| {
            let d = estimate.get(i).copied().unwrap_or(0.0) - coeffs.get(i).copied().unwrap_or(0.0);
            d * d
        })
        .sum()
}

/// Bounded set of candidate projection dimensions, strictly increasing.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModelIndexSet {
    indices: Vec<usize>,
}

impl ModelIndexSet {
    pub fn new(mut indices: Vec<usize>) -> Result<Self> {
        if indices.is_empty() {
            return invalid("model index set must be non-empty");
        }
        if indices.contains(&0) {
            return invalid("model indices must be >= 1");
        }
        indices.sort_unstable();
        indices.dedup();
        Ok(Self { indices })
    }

    /// `{lo, lo+1, ..., hi}`.
    pub fn range(lo: usize, hi: usize) -> Result<Self> {
        if lo > hi {
            return invalid(format!("empty model range {lo}..{hi}"));
        }
        Self::new((lo..=hi).collect())
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn min(&self) -> usize {
        self.indices[0]
    }

    pub fn max(&self) -> usize {
        *self.indices.last().expect("non-empty by construction")
    }

    pub fn check_support(&self, n: usize) -> Result<()> {
        if self.max() > n {
            return invalid(format!(
                "max model index {} exceeds mean vector length {n}",
                self.max()
            ));
        }
        Ok(())
    }
}

/// Parses `"1..100"`, `"1,2,5"` or a mix such as `"1..10,20,50..60"`.
/// Ranges are inclusive on both ends.
impl FromStr for ModelIndexSet {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut out = Vec::new();
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            if let Some((lo, hi)) = part.split_once("..") {
                let lo = parse_index(lo)?;
                let hi = parse_index(hi.trim_start_matches('='))?;
                if lo > hi {
                    return invalid(format!("empty model range '{part}'"));
                }
                out.extend(lo..=hi);
            } else {
                out.push(parse_index(part)?);
            }
        }
        Self::new(out)
    }
}

impl fmt::Display for ModelIndexSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        // compress runs of consecutive indices
        let mut first = true;
        let mut i = 0;
        while i < self.indices.len() {
            let mut j = i;
            while j + 1 < self.indices.len() && self.indices[j + 1] == self.indices[j] + 1 {
                j += 1;
            }
            if !first {
                f.write_str(",")?;
            }
            first = false;
            if j > i {
                write!(f, "{}..{}", self.indices[i], self.indices[j])?;
            } else {
                write!(f, "{}", self.indices[i])?;
            }
            i = j + 1;
        }
        Ok(())
    }
}

fn parse_index(s: &str) -> Result<usize> {
    s.trim()
        .parse::<usize>()
        .map_err(|_| Error::InvalidArgument(format!("bad model index '{s}'")))
}

/// Textual mean-vector families.
///
/// * `zero`
/// * `poly:beta=<b>,scale=<c>` with `mu_i = c * i^(-b)` (`scale` defaults to 1)
/// * `sparse:k=<k>,amp=<a>` with the first `k` coordinates equal to `a`
/// * `explicit:<x1>,<x2>,...`
///
/// All but `explicit` accept an optional `n=<N>` fixing the declared length;
/// otherwise the length is supplied when the family is built.
#[derive(Debug, Clone, PartialEq)]
pub enum MeanFamily {
    Zero { n: Option<usize> },
    Poly { beta: f64, scale: f64, n: Option<usize> },
    Sparse { k: usize, amp: f64, n: Option<usize> },
    Explicit(Vec<f64>),
}

impl MeanFamily {
    /// Declared length, if the spec fixes one.
    pub fn declared_len(&self) -> Option<usize> {
        match self {
            MeanFamily::Zero { n } | MeanFamily::Poly { n, .. } | MeanFamily::Sparse { n, .. } => *n,
            MeanFamily::Explicit(v) => Some(v.len()),
        }
    }

    /// Builds the mean vector, using `default_len` when the spec carries no `n`.
    pub fn build(&self, default_len: usize) -> Result<MeanVector> {
        let n = self.declared_len().unwrap_or(default_len);
        if n == 0 {
            return invalid("mean vector length must be >= 1");
        }
        match self {
            MeanFamily::Zero { .. } => MeanVector::zeros(n),
            MeanFamily::Poly { beta, scale, .. } => {
                MeanVector::new((1..=n).map(|i| scale * (i as f64).powf(-beta)).collect())
            }
            MeanFamily::Sparse { k, amp, .. } => {
                if *k > n {
                    return invalid(format!("sparse k={k} exceeds length {n}"));
                }
                MeanVector::new((1..=n).map(|i| if i <= *k { *amp } else { 0.0 }).collect())
            }
            MeanFamily::Explicit(v) => MeanVector::new(v.clone()),
        }
    }
}

impl FromStr for MeanFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (kind, args) = match s.split_once(':') {
            Some((k, a)) => (k.trim(), a.trim()),
            None => (s, ""),
        };
        if kind == "explicit" {
            let values = args
                .split(',')
                .map(|x| {
                    x.trim()
                        .parse::<f64>()
                        .map_err(|_| Error::InvalidArgument(format!("bad coordinate '{x}'")))
                })
                .collect::<Result<Vec<_>>>()?;
            return Ok(MeanFamily::Explicit(values));
        }

        let mut beta = None;
        let mut scale = None;
        let mut k = None;
        let mut amp = None;
        let mut n = None;
        for kv in args.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (key, value) = kv
                .split_once('=')
                .ok_or_else(|| Error::InvalidArgument(format!("expected key=value, got '{kv}'")))?;
            let value = value.trim();
            let real = || {
                value
                    .parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| Error::InvalidArgument(format!("bad number '{value}' for {key}")))
            };
            match key.trim() {
                "beta" => beta = Some(real()?),
                "scale" => scale = Some(real()?),
                "amp" => amp = Some(real()?),
                "k" => k = Some(parse_index(value)?),
                "n" => n = Some(parse_index(value)?),
                other => return invalid(format!("unknown key '{other}' in mean spec '{s}'")),
            }
        }
        match kind {
            "zero" if beta.is_none() && scale.is_none() && k.is_none() && amp.is_none() => {
                Ok(MeanFamily::Zero { n })
            }
            "poly" if k.is_none() && amp.is_none() => Ok(MeanFamily::Poly {
                beta: beta.ok_or_else(|| Error::InvalidArgument("poly needs beta".into()))?,
                scale: scale.unwrap_or(1.0),
                n,
            }),
            "sparse" if beta.is_none() && scale.is_none() => Ok(MeanFamily::Sparse {
                k: k.ok_or_else(|| Error::InvalidArgument("sparse needs k".into()))?,
                amp: amp.ok_or_else(|| Error::InvalidArgument("sparse needs amp".into()))?,
                n,
            }),
            "zero" | "poly" | "sparse" => invalid(format!("unexpected parameters in '{s}'")),
            other => invalid(format!("unknown mean family '{other}'")),
        }
    }
}
