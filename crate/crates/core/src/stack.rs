use crate::error::{Error, Result};

/// `k` non-negative `n × n` feature maps stored map-major, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureStack {
    k: usize,
    n: usize,
    data: Vec<f64>,
}

impl FeatureStack {
    pub fn new(k: usize, n: usize, data: Vec<f64>) -> Result<Self> {
        if k < 2 {
            return Err(Error::InvalidInput(format!("need at least 2 feature maps, got {k}")));
        }
        if n == 0 {
            return Err(Error::InvalidInput("feature maps must be at least 1x1".into()));
        }
        if data.len() != k * n * n {
            return Err(Error::ShapeMismatch {
                context: "feature stack",
                expected: k * n * n,
                found: data.len(),
            });
        }
        if let Some(v) = data.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(Error::InvalidInput(format!(
                "feature values must be finite and non-negative, found {v}"
            )));
        }
        Ok(Self { k, n, data })
    }

    /// Builds a stack from per-map slices, each of length `n * n`.
    pub fn from_maps(n: usize, maps: &[&[f64]]) -> Result<Self> {
        let data = maps.iter().flat_map(|m| m.iter().copied()).collect();
        Self::new(maps.len(), n, data)
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn map_len(&self) -> usize {
        self.n * self.n
    }

    pub fn map(&self, i: usize) -> &[f64] {
        let len = self.map_len();
        &self.data[i * len..(i + 1) * len]
    }

    pub fn maps(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.map_len())
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn global_max(&self) -> f64 {
        self.data.iter().copied().fold(0.0, f64::max)
    }

    /// Divides every element by the global maximum so values land in `[0, 1]`.
    pub fn normalize(&self) -> Result<FeatureStack> {
        let max = self.global_max();
        if max <= 0.0 {
            return Err(Error::ZeroStack);
        }
        Ok(FeatureStack {
            k: self.k,
            n: self.n,
            data: self.data.iter().map(|v| v / max).collect(),
        })
    }
}

pub fn normalize_stack(stack: &FeatureStack) -> Result<FeatureStack> {
    stack.normalize()
}
