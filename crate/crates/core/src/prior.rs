//! Knowledge-injection losses built on causality maps: a task prior pulling an
//! embedding map toward a reference map, and a mini-batch term aligning each
//! sample's map with its class mean.

use serde::{Deserialize, Serialize};

use crate::cmap::{max_estimator, CausalityMap, Method};
use crate::error::{check_len, Error, Result};

/// `n_c × h` class embeddings, one row per class.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingSet {
    n_classes: usize,
    hidden: usize,
    rows: Vec<f64>,
}

impl EmbeddingSet {
    pub fn new(n_classes: usize, hidden: usize, rows: Vec<f64>) -> Result<Self> {
        if n_classes < 2 || hidden == 0 {
            return Err(Error::InvalidInput(format!(
                "embedding set needs n_c >= 2 and h >= 1, got {n_classes}x{hidden}"
            )));
        }
        check_len("embedding set", n_classes * hidden, rows.len())?;
        if rows.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("embedding values must be finite".into()));
        }
        Ok(Self { n_classes, hidden, rows })
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn hidden(&self) -> usize {
        self.hidden
    }

    pub fn rows(&self) -> &[f64] {
        &self.rows
    }
}

/// Reference map with entries in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PriorMap {
    n: usize,
    entries: Vec<f64>,
}

impl PriorMap {
    pub fn new(n: usize, entries: Vec<f64>) -> Result<Self> {
        check_len("prior map", n * n, entries.len())?;
        if let Some(v) = entries.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::InvalidInput(format!("prior map entries must lie in [0, 1], found {v}")));
        }
        Ok(Self { n, entries })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }
}

/// Max-style map between embedding rows after global-max normalization.
pub fn embedding_causality_map(q: &EmbeddingSet, epsilon: f64) -> Result<CausalityMap> {
    let max = q.rows.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max <= 0.0 {
        return Err(Error::ZeroStack);
    }
    // rows may carry negative activations; they cannot count as presence
    let normalized: Vec<f64> = q.rows.iter().map(|v| (v / max).max(0.0)).collect();
    let entries = max_estimator(&normalized, q.hidden, epsilon);
    CausalityMap::new(q.n_classes, entries, Method::Max)
}

/// Mean squared difference between a learned map and the reference.
pub fn task_prior_loss(c: &CausalityMap, c_gt: &PriorMap) -> Result<f64> {
    check_len("task prior loss", c_gt.n, c.k())?;
    let n = c.entries().len() as f64;
    Ok(c.entries()
        .iter()
        .zip(&c_gt.entries)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        / n)
}

/// Task prior with its balancing weight.
#[derive(Debug, Clone, PartialEq)]
pub struct TaskPrior {
    pub reference: PriorMap,
    /// Defaults to 1.0; the full transformer framework used 100.
    pub lambda: f64,
}

impl TaskPrior {
    pub fn new(reference: PriorMap) -> Self {
        Self { reference, lambda: 1.0 }
    }

    pub fn loss(&self, c: &CausalityMap) -> Result<f64> {
        Ok(self.lambda * task_prior_loss(c, &self.reference)?)
    }
}

/// `(1/B) Σ_i ‖M_i − mean_{j: y_j = y_i} M_j‖²` (squared Frobenius norm).
pub fn minibatch_alignment_loss(maps: &[CausalityMap], labels: &[usize]) -> Result<f64> {
    if maps.is_empty() {
        return Err(Error::EmptyBatch);
    }
    check_len("mini-batch labels", maps.len(), labels.len())?;
    let k = maps[0].k();
    for m in maps {
        check_len("mini-batch map side", k, m.k())?;
    }
    let mut classes: Vec<usize> = labels.to_vec();
    classes.sort_unstable();
    classes.dedup();
    let mut total = 0.0;
    for &class in &classes {
        let members: Vec<&CausalityMap> = maps
            .iter()
            .zip(labels)
            .filter(|(_, &l)| l == class)
            .map(|(m, _)| m)
            .collect();
        let mut mean = vec![0.0; k * k];
        for m in &members {
            for (acc, v) in mean.iter_mut().zip(m.entries()) {
                *acc += v;
            }
        }
        let count = members.len() as f64;
        mean.iter_mut().for_each(|v| *v /= count);
        for m in &members {
            total += m
                .entries()
                .iter()
                .zip(&mean)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>();
        }
    }
    Ok(total / maps.len() as f64)
}

/// Mini-batch losses at the three hierarchy sites (early, middle, late).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SiteValues {
    pub v1: f64,
    pub pfc: f64,
    pub it: f64,
}

impl SiteValues {
    pub const DEFAULT_WEIGHTS: SiteValues = SiteValues { v1: 0.7, pfc: 0.5, it: 0.1 };
}

pub fn weighted_total_alignment(losses: SiteValues, weights: SiteValues) -> Result<f64> {
    if [weights.v1, weights.pfc, weights.it].iter().any(|w| !(*w >= 0.0)) {
        return Err(Error::InvalidInput("site weights must be non-negative".into()));
    }
    Ok(weights.v1 * losses.v1 + weights.pfc * losses.pfc + weights.it * losses.it)
}
