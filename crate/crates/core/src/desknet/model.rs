//! A two-block convolutional classifier with hand-written backpropagation.
//!
//! `1×16×16 → conv3×3(8) → ReLU → maxpool2 → conv3×3(16) → ReLU → maxpool2`
//! gives a `16 × 4 × 4` feature stack, which the configured variant turns into
//! the classifier input (see [`crate::enhance`]).

use std::str::FromStr;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::am::{Image, Scorer};
use crate::cmap::{map_from_normalized, EstimatorConfig, Method};
use crate::enhance::{cab_gains, random_map, Layout};
use crate::error::{Error, Result};
use crate::factors::{damaged_factors, extract_factors, FactorConfig};
use crate::rng;
use crate::stack::FeatureStack;

pub const IN_SIDE: usize = 16;
pub const C1: usize = 8;
pub const C2: usize = 16;
pub const MID_SIDE: usize = IN_SIDE / 2;
pub const FEAT_SIDE: usize = MID_SIDE / 2;
pub const CLASSES: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    Baseline,
    Cat,
    Mulcat,
    Cab,
    DamagedCat,
    DamagedMulcat,
}

impl Variant {
    pub const ALL: [Variant; 6] = [
        Variant::Baseline,
        Variant::Cat,
        Variant::Mulcat,
        Variant::Cab,
        Variant::DamagedCat,
        Variant::DamagedMulcat,
    ];

    pub fn layout(self, k: usize, n: usize) -> Layout {
        match self {
            Variant::Baseline => Layout::Baseline { k, n },
            Variant::Cat | Variant::DamagedCat => Layout::Cat { k, n },
            Variant::Mulcat | Variant::DamagedMulcat => Layout::Mulcat { k, n },
            Variant::Cab => Layout::Cab { k, n },
        }
    }

    pub fn classifier_width(self, k: usize, n: usize) -> usize {
        self.layout(k, n).len()
    }

    pub fn name(self) -> &'static str {
        match self {
            Variant::Baseline => "baseline",
            Variant::Cat => "cat",
            Variant::Mulcat => "mulcat",
            Variant::Cab => "cab",
            Variant::DamagedCat => "damaged_cat",
            Variant::DamagedMulcat => "damaged_mulcat",
        }
    }
}

impl std::fmt::Display for Variant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase().replace('-', "_");
        Variant::ALL
            .into_iter()
            .find(|v| v.name() == s)
            .ok_or_else(|| Error::InvalidInput(format!("unknown variant '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NetConfig {
    pub variant: Variant,
    pub factors: FactorConfig,
    pub estimator: EstimatorConfig,
    /// Backpropagate through the Max-estimator map of the Cat variant.
    pub cmap_backprop: bool,
}

impl NetConfig {
    pub fn new(variant: Variant) -> Self {
        Self {
            variant,
            factors: FactorConfig::default(),
            estimator: EstimatorConfig::max(),
            cmap_backprop: true,
        }
    }

    pub fn classifier_width(&self) -> usize {
        self.variant.classifier_width(C2, FEAT_SIDE)
    }

    /// Lehmer maps are always treated as constants.
    fn map_differentiable(&self) -> bool {
        self.variant == Variant::Cat && self.cmap_backprop && self.estimator.method == Method::Max
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeskNetParams {
    /// `[out][in][3][3]`
    pub conv1_w: Vec<f64>,
    pub conv1_b: Vec<f64>,
    pub conv2_w: Vec<f64>,
    pub conv2_b: Vec<f64>,
    /// `[class][width]`
    pub fc_w: Vec<f64>,
    pub fc_b: Vec<f64>,
}

pub const GROUP_NAMES: [&str; 6] = ["conv1_w", "conv1_b", "conv2_w", "conv2_b", "fc_w", "fc_b"];

impl DeskNetParams {
    pub fn zeros(width: usize) -> Self {
        Self {
            conv1_w: vec![0.0; C1 * 9],
            conv1_b: vec![0.0; C1],
            conv2_w: vec![0.0; C2 * C1 * 9],
            conv2_b: vec![0.0; C2],
            fc_w: vec![0.0; CLASSES * width],
            fc_b: vec![0.0; CLASSES],
        }
    }

    /// He-uniform convolutions, `U(±1/sqrt(width))` classifier, zero biases.
    /// The convolution draws do not depend on `width`.
    pub fn init(width: usize, seed: u64) -> Self {
        let mut p = Self::zeros(width);
        let fill = |v: &mut [f64], bound: f64, stream: u64| {
            let mut r = rng::stream(seed, stream);
            v.iter_mut().for_each(|x| *x = r.random_range(-bound..bound));
        };
        fill(&mut p.conv1_w, (6.0f64 / 9.0).sqrt(), 1);
        fill(&mut p.conv2_w, (6.0 / (9.0 * C1 as f64)).sqrt(), 2);
        fill(&mut p.fc_w, 1.0 / (width as f64).sqrt(), 3);
        p
    }

    pub fn classifier_width(&self) -> usize {
        self.fc_w.len() / CLASSES
    }

    pub fn groups(&self) -> [&[f64]; 6] {
        [&self.conv1_w, &self.conv1_b, &self.conv2_w, &self.conv2_b, &self.fc_w, &self.fc_b]
    }

    pub fn groups_mut(&mut self) -> [&mut Vec<f64>; 6] {
        [
            &mut self.conv1_w,
            &mut self.conv1_b,
            &mut self.conv2_w,
            &mut self.conv2_b,
            &mut self.fc_w,
            &mut self.fc_b,
        ]
    }

    pub fn count(&self) -> usize {
        self.groups().iter().map(|g| g.len()).sum()
    }

    /// `self += scale · other`
    pub fn add_scaled(&mut self, other: &DeskNetParams, scale: f64) {
        for (dst, src) in self.groups_mut().into_iter().zip(other.groups()) {
            for (d, s) in dst.iter_mut().zip(src) {
                *d += scale * s;
            }
        }
    }

    pub fn is_finite(&self) -> bool {
        self.groups().iter().all(|g| g.iter().all(|v| v.is_finite()))
    }
}

fn conv3x3(input: &[f64], cin: usize, side: usize, w: &[f64], b: &[f64], cout: usize) -> Vec<f64> {
    let plane = side * side;
    let mut out = vec![0.0; cout * plane];
    for o in 0..cout {
        let dst = &mut out[o * plane..(o + 1) * plane];
        dst.iter_mut().for_each(|v| *v = b[o]);
        for i in 0..cin {
            let src = &input[i * plane..(i + 1) * plane];
            let kernel = &w[(o * cin + i) * 9..(o * cin + i + 1) * 9];
            for y in 0..side {
                for x in 0..side {
                    let mut acc = 0.0;
                    for ky in 0..3 {
                        let sy = y as isize + ky as isize - 1;
                        if sy < 0 || sy >= side as isize {
                            continue;
                        }
                        for kx in 0..3 {
                            let sx = x as isize + kx as isize - 1;
                            if sx >= 0 && sx < side as isize {
                                acc += kernel[ky * 3 + kx] * src[sy as usize * side + sx as usize];
                            }
                        }
                    }
                    dst[y * side + x] += acc;
                }
            }
        }
    }
    out
}

#[allow(clippy::too_many_arguments)]
fn conv3x3_backward(
    input: &[f64],
    cin: usize,
    side: usize,
    w: &[f64],
    cout: usize,
    dout: &[f64],
    dw: &mut [f64],
    db: &mut [f64],
    mut din: Option<&mut [f64]>,
) {
    let plane = side * side;
    for o in 0..cout {
        let g = &dout[o * plane..(o + 1) * plane];
        db[o] += g.iter().sum::<f64>();
        for i in 0..cin {
            let src = &input[i * plane..(i + 1) * plane];
            let base = (o * cin + i) * 9;
            for y in 0..side {
                for x in 0..side {
                    let gv = g[y * side + x];
                    if gv == 0.0 {
                        continue;
                    }
                    for ky in 0..3 {
                        let sy = y as isize + ky as isize - 1;
                        if sy < 0 || sy >= side as isize {
                            continue;
                        }
                        for kx in 0..3 {
                            let sx = x as isize + kx as isize - 1;
                            if sx >= 0 && sx < side as isize {
                                let si = sy as usize * side + sx as usize;
                                dw[base + ky * 3 + kx] += gv * src[si];
                                if let Some(d) = din.as_deref_mut() {
                                    d[i * plane + si] += gv * w[base + ky * 3 + kx];
                                }
                            }
                        }
                    }
                }
            }
        }
    }
}

/// 2×2 max pooling; ties go to the first element in row-major window order.
/// Returns the pooled values and, per output, the flat index of its source.
fn maxpool2(input: &[f64], channels: usize, side: usize) -> (Vec<f64>, Vec<usize>) {
    let half = side / 2;
    let mut out = Vec::with_capacity(channels * half * half);
    let mut idx = Vec::with_capacity(channels * half * half);
    for c in 0..channels {
        for y in 0..half {
            for x in 0..half {
                let mut best = c * side * side + (2 * y) * side + 2 * x;
                for (dy, dx) in [(0, 1), (1, 0), (1, 1)] {
                    let j = c * side * side + (2 * y + dy) * side + 2 * x + dx;
                    if input[j] > input[best] {
                        best = j;
                    }
                }
                out.push(input[best]);
                idx.push(best);
            }
        }
    }
    (out, idx)
}

fn relu(v: &[f64]) -> Vec<f64> {
    v.iter().map(|x| x.max(0.0)).collect()
}

/// Quantities of the Max-estimator map needed to backpropagate through it.
#[derive(Debug, Clone)]
struct MapGrad {
    global_max: f64,
    global_argmax: usize,
    maxes: Vec<f64>,
    argmaxes: Vec<usize>,
    sums: Vec<f64>,
    epsilon: f64,
}

impl MapGrad {
    fn new(features: &[f64], epsilon: f64) -> Option<Self> {
        let mut global_argmax = 0;
        for (i, &v) in features.iter().enumerate() {
            if v > features[global_argmax] {
                global_argmax = i;
            }
        }
        let global_max = features[global_argmax];
        if global_max <= 0.0 {
            return None;
        }
        let plane = FEAT_SIDE * FEAT_SIDE;
        let mut maxes = Vec::with_capacity(C2);
        let mut argmaxes = Vec::with_capacity(C2);
        let mut sums = Vec::with_capacity(C2);
        for m in features.chunks_exact(plane) {
            let mut a = 0;
            for (i, &v) in m.iter().enumerate() {
                if v > m[a] {
                    a = i;
                }
            }
            maxes.push(m[a] / global_max);
            argmaxes.push(a);
            sums.push(m.iter().map(|v| v / global_max).sum::<f64>());
        }
        Some(Self {
            global_max,
            global_argmax,
            maxes,
            argmaxes,
            sums,
            epsilon,
        })
    }

    /// Adds `∂L/∂features` given `∂L/∂map` (row-major `k × k`).
    fn backward(&self, dmap: &[f64], dfeatures: &mut [f64], features: &[f64]) {
        let k = self.maxes.len();
        let plane = FEAT_SIDE * FEAT_SIDE;
        let den: Vec<f64> = self.sums.iter().map(|s| s.max(self.epsilon)).collect();
        let mut dmax = vec![0.0; k];
        let mut dsum = vec![0.0; k];
        for i in 0..k {
            for j in 0..k {
                let g = dmap[i * k + j];
                dmax[i] += g * self.maxes[j] / den[j];
                dmax[j] += g * self.maxes[i] / den[j];
                if self.sums[j] >= self.epsilon {
                    dsum[j] -= g * self.maxes[i] * self.maxes[j] / (den[j] * den[j]);
                }
            }
        }
        // normalized features x̂ = x / G
        let mut dnorm = vec![0.0; features.len()];
        for m in 0..k {
            dnorm[m * plane..(m + 1) * plane].iter_mut().for_each(|d| *d = dsum[m]);
            dnorm[m * plane + self.argmaxes[m]] += dmax[m];
        }
        let g = self.global_max;
        let mut dglobal = 0.0;
        for ((df, dn), x) in dfeatures.iter_mut().zip(&dnorm).zip(features) {
            *df += dn / g;
            dglobal -= dn * x / (g * g);
        }
        dfeatures[self.global_argmax] += dglobal;
    }
}

#[derive(Debug, Clone)]
enum Enhancement {
    Plain,
    /// Cat: map block appended; `Some` when gradients flow through it.
    Map(Option<MapGrad>),
    /// Mulcat: second half scaled per map by constant weights.
    Scaled(Vec<f64>),
    /// Contextual attention: per-map constant gains, shape preserved.
    Gains(Vec<f64>),
}

/// Intermediate values kept for the backward pass.
#[derive(Debug, Clone)]
pub struct Cache {
    input: Vec<f64>,
    pre1: Vec<f64>,
    pooled1: Vec<f64>,
    idx1: Vec<usize>,
    pre2: Vec<f64>,
    idx2: Vec<usize>,
    features: Vec<f64>,
    payload: Vec<f64>,
    enhancement: Enhancement,
}

/// The discrete choices of a forward pass: which units were active, which
/// element won each pooling window, and any causal weights or map argmaxes.
/// Away from points where it changes, the network is smooth in its inputs.
#[derive(Debug, Clone, PartialEq)]
pub struct ActivationPattern {
    relu1: Vec<bool>,
    pool1: Vec<usize>,
    relu2: Vec<bool>,
    pool2: Vec<usize>,
    map_argmax: Option<(usize, Vec<usize>)>,
    weights: Vec<f64>,
}

impl Cache {
    pub fn pattern(&self) -> ActivationPattern {
        let (map_argmax, weights) = match &self.enhancement {
            Enhancement::Map(Some(m)) => (Some((m.global_argmax, m.argmaxes.clone())), Vec::new()),
            Enhancement::Scaled(w) | Enhancement::Gains(w) => (None, w.clone()),
            Enhancement::Plain | Enhancement::Map(None) => (None, Vec::new()),
        };
        ActivationPattern {
            relu1: self.pre1.iter().map(|&v| v > 0.0).collect(),
            pool1: self.idx1.clone(),
            relu2: self.pre2.iter().map(|&v| v > 0.0).collect(),
            pool2: self.idx2.clone(),
            map_argmax,
            weights,
        }
    }

    /// The `16 × 4 × 4` stack right before the enhancement step.
    pub fn features(&self) -> &[f64] {
        &self.features
    }

    /// Classifier input.
    pub fn payload(&self) -> &[f64] {
        &self.payload
    }
}

#[derive(Debug, Clone)]
pub struct Forward {
    pub logits: [f64; CLASSES],
    pub cache: Cache,
}

fn causal_weights(features: &[f64], cfg: &NetConfig) -> Result<Vec<f64>> {
    let stack = FeatureStack::new(C2, FEAT_SIDE, features.to_vec())?;
    match stack.normalize() {
        Ok(normalized) => {
            let map = map_from_normalized(&normalized, &cfg.estimator)?;
            Ok(extract_factors(&map, cfg.factors).weights)
        }
        // no activation at all: no causal signal, every factor is zero
        Err(Error::ZeroStack) => Ok(vec![0.0; C2]),
        Err(e) => Err(e),
    }
}

fn causality_entries(features: &[f64], cfg: &NetConfig) -> Result<Vec<f64>> {
    let stack = FeatureStack::new(C2, FEAT_SIDE, features.to_vec())?;
    match stack.normalize() {
        Ok(normalized) => Ok(map_from_normalized(&normalized, &cfg.estimator)?.entries().to_vec()),
        Err(Error::ZeroStack) => Ok(vec![0.0; C2 * C2]),
        Err(e) => Err(e),
    }
}

/// Runs the network on one `16 × 16` image. `damage_seed` drives the random
/// map/factors of the damaged variants and is ignored otherwise.
pub fn forward(params: &DeskNetParams, image: &[f64], cfg: &NetConfig, damage_seed: u64) -> Result<Forward> {
    if image.len() != IN_SIDE * IN_SIDE {
        return Err(Error::ShapeMismatch {
            context: "desk net input",
            expected: IN_SIDE * IN_SIDE,
            found: image.len(),
        });
    }
    let width = cfg.classifier_width();
    if params.classifier_width() != width || params.fc_w.len() != CLASSES * width {
        return Err(Error::ShapeMismatch {
            context: "classifier width",
            expected: width,
            found: params.classifier_width(),
        });
    }
    cfg.estimator.validate()?;

    let pre1 = conv3x3(image, 1, IN_SIDE, &params.conv1_w, &params.conv1_b, C1);
    let (pooled1, idx1) = maxpool2(&relu(&pre1), C1, IN_SIDE);
    let pre2 = conv3x3(&pooled1, C1, MID_SIDE, &params.conv2_w, &params.conv2_b, C2);
    let (features, idx2) = maxpool2(&relu(&pre2), C2, MID_SIDE);

    let mut payload = features.clone();
    let plane = FEAT_SIDE * FEAT_SIDE;
    let enhancement = match cfg.variant {
        Variant::Baseline => Enhancement::Plain,
        Variant::Cat => {
            payload.extend(causality_entries(&features, cfg)?);
            let grad = if cfg.map_differentiable() {
                MapGrad::new(&features, cfg.estimator.epsilon)
            } else {
                None
            };
            Enhancement::Map(grad)
        }
        Variant::DamagedCat => {
            payload.extend_from_slice(random_map(C2, damage_seed).entries());
            Enhancement::Map(None)
        }
        Variant::Mulcat | Variant::DamagedMulcat => {
            let weights = if cfg.variant == Variant::Mulcat {
                causal_weights(&features, cfg)?
            } else {
                damaged_factors(C2, cfg.factors.mode, damage_seed)?.weights
            };
            for (m, w) in features.chunks_exact(plane).zip(&weights) {
                payload.extend(m.iter().map(|v| v * w));
            }
            Enhancement::Scaled(weights)
        }
        Variant::Cab => {
            let gains = cab_gains(&causal_weights(&features, cfg)?);
            for (m, g) in payload.chunks_exact_mut(plane).zip(&gains) {
                m.iter_mut().for_each(|v| *v *= g);
            }
            Enhancement::Gains(gains)
        }
    };
    debug_assert_eq!(payload.len(), width);

    let mut logits = [0.0; CLASSES];
    for (c, l) in logits.iter_mut().enumerate() {
        let row = &params.fc_w[c * width..(c + 1) * width];
        *l = params.fc_b[c] + row.iter().zip(&payload).map(|(w, x)| w * x).sum::<f64>();
    }
    if logits.iter().any(|l| !l.is_finite()) {
        return Err(Error::NumericOverflow("desk net logits"));
    }
    Ok(Forward {
        logits,
        cache: Cache {
            input: image.to_vec(),
            pre1,
            pooled1,
            idx1,
            pre2,
            idx2,
            features,
            payload,
            enhancement,
        },
    })
}

/// Accumulates parameter gradients for `∂L/∂logits = dlogits` into `grads`.
/// Returns `∂L/∂input` when `want_input` is set.
pub fn backward(
    params: &DeskNetParams,
    cache: &Cache,
    dlogits: &[f64; CLASSES],
    grads: &mut DeskNetParams,
    want_input: bool,
) -> Option<Vec<f64>> {
    let width = cache.payload.len();
    let mut dpayload = vec![0.0; width];
    for (c, &g) in dlogits.iter().enumerate() {
        grads.fc_b[c] += g;
        let row = &params.fc_w[c * width..(c + 1) * width];
        let grow = &mut grads.fc_w[c * width..(c + 1) * width];
        for j in 0..width {
            grow[j] += g * cache.payload[j];
            dpayload[j] += g * row[j];
        }
    }

    let feat_len = cache.features.len();
    let plane = FEAT_SIDE * FEAT_SIDE;
    let mut dfeat = dpayload[..feat_len].to_vec();
    match &cache.enhancement {
        Enhancement::Plain | Enhancement::Map(None) => {}
        Enhancement::Map(Some(map)) => map.backward(&dpayload[feat_len..], &mut dfeat, &cache.features),
        Enhancement::Scaled(weights) => {
            for (i, d) in dfeat.iter_mut().enumerate() {
                *d += weights[i / plane] * dpayload[feat_len + i];
            }
        }
        Enhancement::Gains(gains) => {
            for (i, d) in dfeat.iter_mut().enumerate() {
                *d *= gains[i / plane];
            }
        }
    }

    let mut dpre2 = vec![0.0; cache.pre2.len()];
    for (&src, &d) in cache.idx2.iter().zip(&dfeat) {
        if cache.pre2[src] > 0.0 {
            dpre2[src] += d;
        }
    }
    let mut dpooled1 = vec![0.0; cache.pooled1.len()];
    conv3x3_backward(
        &cache.pooled1,
        C1,
        MID_SIDE,
        &params.conv2_w,
        C2,
        &dpre2,
        &mut grads.conv2_w,
        &mut grads.conv2_b,
        Some(&mut dpooled1),
    );
    let mut dpre1 = vec![0.0; cache.pre1.len()];
    for (&src, &d) in cache.idx1.iter().zip(&dpooled1) {
        if cache.pre1[src] > 0.0 {
            dpre1[src] += d;
        }
    }
    let mut dinput = want_input.then(|| vec![0.0; cache.input.len()]);
    conv3x3_backward(
        &cache.input,
        1,
        IN_SIDE,
        &params.conv1_w,
        C1,
        &dpre1,
        &mut grads.conv1_w,
        &mut grads.conv1_b,
        dinput.as_deref_mut(),
    );
    dinput
}

/// Softmax cross-entropy of one logit pair: loss and `∂loss/∂logits`.
pub fn cross_entropy(logits: &[f64; CLASSES], label: usize) -> (f64, [f64; CLASSES]) {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|l| (l - max).exp()).collect();
    let z: f64 = exps.iter().sum();
    let mut d = [0.0; CLASSES];
    for c in 0..CLASSES {
        d[c] = exps[c] / z - if c == label { 1.0 } else { 0.0 };
    }
    (z.ln() + max - logits[label], d)
}

pub fn predict(logits: &[f64; CLASSES]) -> usize {
    // ties resolve to the lower class id
    let mut best = 0;
    for c in 1..CLASSES {
        if logits[c] > logits[best] {
            best = c;
        }
    }
    best
}

/// One logit of a trained network as an activation-maximization objective.
/// Inputs are `16 × 16` single-channel images.
#[derive(Debug, Clone)]
pub struct DeskNetScorer {
    pub params: DeskNetParams,
    pub net: NetConfig,
    pub class: usize,
    /// Damage seed used for every forward pass.
    pub seed: u64,
}

impl Scorer for DeskNetScorer {
    fn score(&mut self, img: &Image) -> Result<(f64, Image)> {
        if img.channels() != 1 || img.height() != IN_SIDE || img.width() != IN_SIDE {
            return Err(Error::ShapeMismatch {
                context: "desk net scorer input",
                expected: IN_SIDE * IN_SIDE,
                found: img.as_slice().len(),
            });
        }
        if self.class >= CLASSES {
            return Err(Error::InvalidInput(format!("class {} out of range", self.class)));
        }
        let f = forward(&self.params, img.as_slice(), &self.net, self.seed)?;
        let mut dlogits = [0.0; CLASSES];
        dlogits[self.class] = 1.0;
        let mut sink = DeskNetParams::zeros(self.params.classifier_width());
        let grad = backward(&self.params, &f.cache, &dlogits, &mut sink, true).expect("input gradient requested");
        Ok((f.logits[self.class], img.with_data(grad)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn image(seed: u64) -> Vec<f64> {
        let mut r = rng::stream(seed, 77);
        (0..IN_SIDE * IN_SIDE).map(|_| r.random::<f64>()).collect()
    }

    #[test]
    fn classifier_widths() {
        assert_eq!(NetConfig::new(Variant::Baseline).classifier_width(), 256);
        assert_eq!(NetConfig::new(Variant::Mulcat).classifier_width(), 512);
        assert_eq!(NetConfig::new(Variant::Cat).classifier_width(), 512);
        assert_eq!(NetConfig::new(Variant::Cab).classifier_width(), 256);
    }

    #[test]
    fn forward_rejects_mismatched_classifier() {
        let params = DeskNetParams::init(256, 0);
        let err = forward(&params, &image(0), &NetConfig::new(Variant::Cat), 0).unwrap_err();
        assert!(matches!(err, Error::ShapeMismatch { .. }));
        assert!(forward(&params, &image(0)[..10], &NetConfig::new(Variant::Baseline), 0).is_err());
    }

    #[test]
    fn payload_blocks_follow_layout() {
        let cfg = NetConfig::new(Variant::Mulcat);
        let params = DeskNetParams::init(cfg.classifier_width(), 4);
        let f = forward(&params, &image(1), &cfg, 0).unwrap();
        let feats = f.cache.features();
        assert_eq!(&f.cache.payload()[..256], feats);
        assert!(feats.iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn cross_entropy_is_stable() {
        let (loss, d) = cross_entropy(&[1000.0, 0.0], 0);
        assert!(loss.abs() < 1e-12);
        assert!(d[0].abs() < 1e-12 && d[1].abs() < 1e-12);
        let (loss, _) = cross_entropy(&[0.0, 0.0], 1);
        assert!((loss - 2f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn variant_names_round_trip() {
        for v in Variant::ALL {
            assert_eq!(v.name().parse::<Variant>().unwrap(), v);
        }
        assert_eq!("damaged-mulcat".parse::<Variant>().unwrap(), Variant::DamagedMulcat);
        assert!("resnet".parse::<Variant>().is_err());
    }
}
