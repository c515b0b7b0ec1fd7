//! Causality factors: per-feature weights obtained by counting, for every
//! feature, how often it is found to cause (or be caused by) another one.

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::cmap::CausalityMap;
use crate::error::{Error, Result};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Causes,
    Effects,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Full,
    Bool,
}

impl std::fmt::Display for Direction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Direction::Causes => "causes",
            Direction::Effects => "effects",
        })
    }
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Mode::Full => "full",
            Mode::Bool => "bool",
        })
    }
}

impl std::str::FromStr for Direction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "causes" => Ok(Direction::Causes),
            "effects" => Ok(Direction::Effects),
            other => Err(Error::InvalidInput(format!("unknown causality direction '{other}'"))),
        }
    }
}

impl std::str::FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "full" => Ok(Mode::Full),
            "bool" => Ok(Mode::Bool),
            other => Err(Error::InvalidInput(format!("unknown weighing mode '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FactorConfig {
    pub direction: Direction,
    pub mode: Mode,
}

impl Default for FactorConfig {
    fn default() -> Self {
        Self {
            direction: Direction::Causes,
            mode: Mode::Full,
        }
    }
}

/// Where a factor vector came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Provenance {
    Extracted(FactorConfig),
    /// Random weights for the ablation runs.
    Damaged { mode: Mode, seed: u64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactorVector {
    pub weights: Vec<f64>,
    pub provenance: Provenance,
}

impl FactorVector {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

/// Counts directed edges `i → j` (`cmap[i][j] > cmap[j][i]`, strict) per feature.
///
/// Mirrors the triangular vectorization: the strict upper triangle is compared
/// against the transposed strict lower triangle, the two boolean halves are
/// OR-ed into one matrix, and its row sums give the causes while its column
/// sums give the effects.
pub fn count_causes_effects(cmap: &CausalityMap) -> (Vec<u32>, Vec<u32>) {
    let k = cmap.k();
    // upper[i][j] = cmap[i][j], lower_t[i][j] = cmap[j][i], both for j > i
    let mut upper = vec![0.0; k * k];
    let mut lower_t = vec![0.0; k * k];
    for i in 0..k {
        for j in i + 1..k {
            upper[i * k + j] = cmap.get(i, j);
            lower_t[i * k + j] = cmap.get(j, i);
        }
    }
    let mut edges = vec![false; k * k];
    for i in 0..k {
        for j in i + 1..k {
            let (u, l) = (upper[i * k + j], lower_t[i * k + j]);
            // (lower_t > upper) transposed lands below the diagonal
            edges[j * k + i] |= l > u;
            edges[i * k + j] |= u > l;
        }
    }
    let causes = (0..k)
        .map(|i| edges[i * k..(i + 1) * k].iter().filter(|&&e| e).count() as u32)
        .collect();
    let effects = (0..k)
        .map(|j| (0..k).filter(|&i| edges[i * k + j]).count() as u32)
        .collect();
    (causes, effects)
}

fn shape_weights(raw: impl Iterator<Item = i64>, mode: Mode) -> Vec<f64> {
    raw.map(|d| match mode {
        Mode::Full => d.max(0) as f64,
        Mode::Bool => u8::from(d > 0) as f64,
    })
    .collect()
}

pub fn extract_factors(cmap: &CausalityMap, cfg: FactorConfig) -> FactorVector {
    let (causes, effects) = count_causes_effects(cmap);
    let diff = causes.iter().zip(&effects).map(|(&c, &e)| match cfg.direction {
        Direction::Causes => c as i64 - e as i64,
        Direction::Effects => e as i64 - c as i64,
    });
    FactorVector {
        weights: shape_weights(diff, cfg.mode),
        provenance: Provenance::Extracted(cfg),
    }
}

/// Uniform random weights: integers in `0..k` (full) or `{0, 1}` (bool).
pub fn damaged_factors(k: usize, mode: Mode, seed: u64) -> Result<FactorVector> {
    if k < 2 {
        return Err(Error::InvalidInput(format!("need k >= 2, got {k}")));
    }
    let mut rng = rng::stream(seed, 0xda_6a_9e_d0);
    let upper = match mode {
        Mode::Full => k as u64,
        Mode::Bool => 2,
    };
    let weights = (0..k).map(|_| rng.random_range(0..upper) as f64).collect();
    Ok(FactorVector {
        weights,
        provenance: Provenance::Damaged { mode, seed },
    })
}
