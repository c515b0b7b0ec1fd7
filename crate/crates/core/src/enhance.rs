//! Ways of feeding causality information to a classifier.
//!
//! Flattened payloads always put the original features first and the causal
//! block second, row-major.

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::cmap::{CausalityMap, Method};
use crate::error::{check_len, Result};
use crate::factors::FactorVector;
use crate::rng;
use crate::stack::FeatureStack;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "kind")]
pub enum Layout {
    Baseline { k: usize, n: usize },
    Cat { k: usize, n: usize },
    Mulcat { k: usize, n: usize },
    Cab { k: usize, n: usize },
}

impl Layout {
    pub fn len(&self) -> usize {
        match *self {
            Layout::Baseline { k, n } | Layout::Cab { k, n } => k * n * n,
            Layout::Cat { k, n } => k * n * n + k * k,
            Layout::Mulcat { k, n } => 2 * k * n * n,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnhancedFeatures {
    pub payload: Vec<f64>,
    pub layout: Layout,
}

pub fn baseline(stack: &FeatureStack) -> EnhancedFeatures {
    EnhancedFeatures {
        payload: stack.as_slice().to_vec(),
        layout: Layout::Baseline { k: stack.k(), n: stack.n() },
    }
}

pub fn enhance_cat(stack: &FeatureStack, cmap: &CausalityMap) -> Result<EnhancedFeatures> {
    check_len("cat: causality map side", stack.k(), cmap.k())?;
    let mut payload = Vec::with_capacity(stack.as_slice().len() + cmap.entries().len());
    payload.extend_from_slice(stack.as_slice());
    payload.extend_from_slice(cmap.entries());
    Ok(EnhancedFeatures {
        payload,
        layout: Layout::Cat { k: stack.k(), n: stack.n() },
    })
}

/// Originals followed by every map `i` scaled by `factors[i]`.
pub fn enhance_mulcat(stack: &FeatureStack, factors: &FactorVector) -> Result<EnhancedFeatures> {
    check_len("mulcat: factor vector", stack.k(), factors.len())?;
    let mut payload = Vec::with_capacity(2 * stack.as_slice().len());
    payload.extend_from_slice(stack.as_slice());
    for (map, &w) in stack.maps().zip(&factors.weights) {
        payload.extend(map.iter().map(|v| w * v));
    }
    Ok(EnhancedFeatures {
        payload,
        layout: Layout::Mulcat { k: stack.k(), n: stack.n() },
    })
}

/// Per-map gains `1 + factor / (k - 1)` used by the contextual attention block.
pub fn cab_gains(factors: &[f64]) -> Vec<f64> {
    let scale = (factors.len().max(2) - 1) as f64;
    factors.iter().map(|f| 1.0 + f / scale).collect()
}

/// Contextual attention block: adds the rescaled factor-weighted maps to the
/// originals. Shape-preserving and parameter-free.
pub fn enhance_cab(stack: &FeatureStack, factors: &FactorVector) -> Result<EnhancedFeatures> {
    check_len("cab: factor vector", stack.k(), factors.len())?;
    let gains = cab_gains(&factors.weights);
    let payload = stack
        .maps()
        .zip(&gains)
        .flat_map(|(map, &g)| map.iter().map(move |v| v * g))
        .collect();
    Ok(EnhancedFeatures {
        payload,
        layout: Layout::Cab { k: stack.k(), n: stack.n() },
    })
}

/// A `k × k` map of seeded uniform `[0, 1)` values.
pub fn random_map(k: usize, seed: u64) -> CausalityMap {
    let mut rng = rng::stream(seed, 0xca7_da3a6e);
    let entries = (0..k * k).map(|_| rng.random::<f64>()).collect();
    CausalityMap::new(k, entries, Method::Max).expect("uniform draws are valid map entries")
}

/// Cat with a random map in place of the estimated one.
pub fn damaged_cat(stack: &FeatureStack, seed: u64) -> EnhancedFeatures {
    enhance_cat(stack, &random_map(stack.k(), seed)).expect("random map matches stack size")
}
