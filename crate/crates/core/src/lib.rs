//! Weak causality signals from stacks of non-negative feature maps.
//!
//! The crate computes causality maps (Max and Lehmer estimators), extracts
//! per-feature causality factors, enhances classifier features with them, and
//! provides prior-alignment losses, activation maximization with image priors,
//! and a small trainable network for desk-scale experiments.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod am;
pub mod cmap;
pub mod desknet;
pub mod enhance;
pub mod error;
pub mod factors;
pub mod io;
pub mod prior;
pub mod rng;
pub mod stack;

pub use cmap::{compute_causality_map, lehmer_mean, CausalityMap, EstimatorConfig, Method};
pub use enhance::{EnhancedFeatures, Layout};
pub use error::{Error, Result};
pub use factors::{count_causes_effects, damaged_factors, extract_factors, Direction, FactorConfig, FactorVector, Mode};
pub use stack::{normalize_stack, FeatureStack};
