//! Causality maps: pairwise conditional-probability estimates `P(F^i | F^j)`
//! between the feature maps of a stack.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stack::FeatureStack;

pub const DEFAULT_EPSILON: f64 = 1e-12;

/// Lehmer exponents swept by the experiment harness by default.
pub const LEHMER_P_GRID: [f64; 6] = [-100.0, -2.0, -1.0, 0.0, 1.0, 100.0];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Max,
    Lehmer,
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Method::Max => "max",
            Method::Lehmer => "lehmer",
        })
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "max" => Ok(Method::Max),
            "lehmer" => Ok(Method::Lehmer),
            other => Err(Error::InvalidInput(format!("unknown estimator method '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimatorConfig {
    pub method: Method,
    /// Only read by the Lehmer estimator.
    pub lehmer_p: f64,
    /// Floor for denominators (and, when `lehmer_p < 0`, for the values being averaged).
    pub epsilon: f64,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        Self::max()
    }
}

impl EstimatorConfig {
    pub fn max() -> Self {
        Self {
            method: Method::Max,
            lehmer_p: 0.0,
            epsilon: DEFAULT_EPSILON,
        }
    }

    pub fn lehmer(p: f64) -> Self {
        Self {
            method: Method::Lehmer,
            lehmer_p: p,
            epsilon: DEFAULT_EPSILON,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "epsilon must be positive and finite, got {}",
                self.epsilon
            )));
        }
        if !self.lehmer_p.is_finite() {
            return Err(Error::InvalidInput("lehmer_p must be finite".into()));
        }
        Ok(())
    }
}

/// `k × k` matrix with `entry(i, j) = P(F^i | F^j)`, stored row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CausalityMap {
    k: usize,
    entries: Vec<f64>,
    method: Method,
}

impl CausalityMap {
    pub fn new(k: usize, entries: Vec<f64>, method: Method) -> Result<Self> {
        if entries.len() != k * k {
            return Err(Error::ShapeMismatch {
                context: "causality map",
                expected: k * k,
                found: entries.len(),
            });
        }
        if let Some(v) = entries.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(Error::InvalidInput(format!(
                "causality map entries must be finite and non-negative, found {v}"
            )));
        }
        Ok(Self { k, entries, method })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn method(&self) -> Method {
        self.method
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.k + j]
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.entries[i * self.k..(i + 1) * self.k]
    }

    pub fn max_entry(&self) -> f64 {
        self.entries.iter().copied().fold(0.0, f64::max)
    }
}

/// Generalized Lehmer mean `Σ x^(p+1) / Σ x^p`.
///
/// For `p < 0` values below `epsilon` are raised to `epsilon` first. The sums
/// are evaluated relative to the extreme element that dominates them (the
/// minimum for `p < 0`, the maximum otherwise), which keeps exponents such as
/// `±100` from overflowing. An all-zero vector has mean 0.
pub fn lehmer_mean(x: &[f64], p: f64, epsilon: f64) -> Result<f64> {
    if x.is_empty() {
        return Err(Error::EmptyVector);
    }
    if !p.is_finite() {
        return Err(Error::InvalidInput("lehmer exponent must be finite".into()));
    }
    if let Some(v) = x.iter().find(|v| !v.is_finite() || **v < 0.0) {
        return Err(Error::InvalidInput(format!(
            "lehmer mean needs finite non-negative values, found {v}"
        )));
    }
    let clamp = p < 0.0;
    let value = |v: f64| if clamp { v.max(epsilon) } else { v };
    let scale = if clamp {
        x.iter().map(|&v| value(v)).fold(f64::INFINITY, f64::min)
    } else {
        x.iter().copied().fold(0.0, f64::max)
    };
    if scale == 0.0 {
        return Ok(0.0);
    }
    let (num, den) = x.iter().fold((0.0, 0.0), |(num, den), &v| {
        let r = value(v) / scale;
        (num + r.powf(p + 1.0), den + r.powf(p))
    });
    finite("lehmer mean", scale * num / den)
}

/// Lehmer mean of all `len(x) · len(y)` pairwise products, evaluated literally
/// (each product is clamped individually when `p < 0`).
fn lehmer_mean_of_products(x: &[f64], y: &[f64], p: f64, epsilon: f64) -> Result<f64> {
    let clamp = p < 0.0;
    let value = |v: f64| if clamp { v.max(epsilon) } else { v };
    let mut scale = if clamp { f64::INFINITY } else { 0.0 };
    for &a in x {
        for &b in y {
            let v = value(a * b);
            scale = if clamp { scale.min(v) } else { scale.max(v) };
        }
    }
    if scale == 0.0 {
        return Ok(0.0);
    }
    let (mut num, mut den) = (0.0, 0.0);
    for &a in x {
        for &b in y {
            let r = value(a * b) / scale;
            num += r.powf(p + 1.0);
            den += r.powf(p);
        }
    }
    finite("lehmer mean of products", scale * num / den)
}

fn finite(what: &'static str, v: f64) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::NumericOverflow(what))
    }
}

/// Max-estimator map over equal-length rows: `max_i · max_j / Σ_j`, with the
/// sum floored at `epsilon`.
pub(crate) fn max_estimator(rows: &[f64], row_len: usize, epsilon: f64) -> Vec<f64> {
    let (maxes, sums): (Vec<f64>, Vec<f64>) = rows
        .chunks_exact(row_len)
        .map(|r| (r.iter().copied().fold(0.0, f64::max), r.iter().sum::<f64>()))
        .unzip();
    let k = maxes.len();
    let mut out = Vec::with_capacity(k * k);
    for &mi in &maxes {
        for (&mj, &sj) in maxes.iter().zip(&sums) {
            out.push(mi * mj / sj.max(epsilon));
        }
    }
    out
}

/// Lehmer map on an already normalized stack.
///
/// `LM_p` over the `n^4` products factorizes into `LM_p(F^i) · LM_p(F^j)` as
/// long as no product needs clamping, so the `n^4` vector is only walked for
/// pairs that contain values below `sqrt(epsilon)` when `p < 0`.
fn lehmer_estimator(stack: &FeatureStack, p: f64, epsilon: f64) -> Result<Vec<f64>> {
    let k = stack.k();
    let means = stack
        .maps()
        .map(|m| lehmer_mean(m, p, epsilon))
        .collect::<Result<Vec<_>>>()?;
    let mins: Vec<f64> = stack
        .maps()
        .map(|m| m.iter().copied().fold(f64::INFINITY, f64::min))
        .collect();
    let mut out = Vec::with_capacity(k * k);
    for i in 0..k {
        for j in 0..k {
            let joint = if p >= 0.0 || mins[i] * mins[j] >= epsilon {
                means[i] * means[j]
            } else {
                lehmer_mean_of_products(stack.map(i), stack.map(j), p, epsilon)?
            };
            out.push(finite("lehmer causality map", joint / means[j].max(epsilon))?);
        }
    }
    Ok(out)
}

/// Normalizes `stack` by its global maximum and estimates every `P(F^i | F^j)`.
pub fn compute_causality_map(stack: &FeatureStack, cfg: &EstimatorConfig) -> Result<CausalityMap> {
    cfg.validate()?;
    let normalized = stack.normalize()?;
    map_from_normalized(&normalized, cfg)
}

pub(crate) fn map_from_normalized(normalized: &FeatureStack, cfg: &EstimatorConfig) -> Result<CausalityMap> {
    let entries = match cfg.method {
        Method::Max => {
            let e = max_estimator(normalized.as_slice(), normalized.map_len(), cfg.epsilon);
            if e.iter().any(|v| !v.is_finite()) {
                return Err(Error::NumericOverflow("max causality map"));
            }
            e
        }
        Method::Lehmer => lehmer_estimator(normalized, cfg.lehmer_p, cfg.epsilon)?,
    };
    CausalityMap::new(normalized.k(), entries, cfg.method)
}
