//! Independent reference implementations shared by the integration tests.
#![allow(dead_code, clippy::needless_range_loop)]

use causemap::rng;
use causemap::{CausalityMap, FeatureStack};
use rand::Rng as _;

/// Random stack with roughly `zero_frac` exact zeros, like post-ReLU activations.
pub fn random_stack(seed: u64, k: usize, n: usize, zero_frac: f64) -> FeatureStack {
    let mut r = rng::stream(seed, 0x7e57);
    let scale = 10f64.powf(r.random_range(-3.0..3.0));
    let data = (0..k * n * n)
        .map(|_| if r.random::<f64>() < zero_frac { 0.0 } else { scale * r.random::<f64>() })
        .collect::<Vec<_>>();
    let mut stack = FeatureStack::new(k, n, data.clone());
    if data.iter().all(|&v| v == 0.0) {
        let mut d = data;
        d[0] = scale;
        stack = FeatureStack::new(k, n, d);
    }
    stack.unwrap()
}

/// Random shape with `k ∈ [2, max_k]`, `n ∈ [1, max_n]`.
pub fn random_shape(seed: u64, max_k: usize, max_n: usize) -> (usize, usize) {
    let mut r = rng::stream(seed, 0x5a9e);
    (r.random_range(2..=max_k), r.random_range(1..=max_n))
}

pub fn random_map(seed: u64, k: usize) -> CausalityMap {
    let mut r = rng::stream(seed, 0xa11);
    // coarse values so that ties across the diagonal occur
    let e = (0..k * k).map(|_| r.random_range(0..6) as f64 / 5.0).collect();
    CausalityMap::new(k, e, causemap::Method::Max).unwrap()
}

fn normalized(stack: &FeatureStack) -> Vec<Vec<f64>> {
    let mut g = 0.0f64;
    for v in stack.as_slice() {
        if *v > g {
            g = *v;
        }
    }
    (0..stack.k()).map(|i| stack.map(i).iter().map(|v| v / g).collect()).collect()
}

/// Scalar double loop over map pairs.
pub fn max_oracle(stack: &FeatureStack, eps: f64) -> Vec<f64> {
    let maps = normalized(stack);
    let k = maps.len();
    let mut out = vec![0.0; k * k];
    for i in 0..k {
        for j in 0..k {
            let mut mi = 0.0f64;
            for &v in &maps[i] {
                if v > mi {
                    mi = v;
                }
            }
            let mut mj = 0.0f64;
            let mut sj = 0.0;
            for &v in &maps[j] {
                if v > mj {
                    mj = v;
                }
                sj += v;
            }
            out[i * k + j] = mi * mj / if sj < eps { eps } else { sj };
        }
    }
    out
}

/// Lehmer mean evaluated in the log domain: `exp(LSE((p+1)·ln x) − LSE(p·ln x))`.
pub fn lehmer_log_domain(values: &[f64], p: f64, eps: f64) -> f64 {
    let xs: Vec<f64> = values.iter().map(|&v| if p < 0.0 && v < eps { eps } else { v }).collect();
    if xs.iter().all(|&v| v == 0.0) {
        return 0.0;
    }
    let lse = |q: f64| {
        let terms: Vec<f64> = xs
            .iter()
            .map(|&v| if q == 0.0 { 0.0 } else if v == 0.0 { f64::NEG_INFINITY } else { q * v.ln() })
            .collect();
        let m = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        m + terms.iter().map(|t| (t - m).exp()).sum::<f64>().ln()
    };
    (lse(p + 1.0) - lse(p)).exp()
}

/// Lehmer estimator over the literal `n⁴` product vector of each pair.
pub fn lehmer_oracle(stack: &FeatureStack, p: f64, eps: f64) -> Vec<f64> {
    let maps = normalized(stack);
    let k = maps.len();
    let mut out = vec![0.0; k * k];
    for i in 0..k {
        for j in 0..k {
            let mut products = Vec::with_capacity(maps[i].len() * maps[j].len());
            for &a in &maps[i] {
                for &b in &maps[j] {
                    products.push(a * b);
                }
            }
            let joint = lehmer_log_domain(&products, p, eps);
            let marginal = lehmer_log_domain(&maps[j], p, eps);
            out[i * k + j] = joint / marginal.max(eps);
        }
    }
    out
}

/// Arithmetic means substituted for the Lehmer means.
pub fn arithmetic_oracle(stack: &FeatureStack, eps: f64) -> Vec<f64> {
    let maps = normalized(stack);
    let k = maps.len();
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let mut out = vec![0.0; k * k];
    for i in 0..k {
        for j in 0..k {
            let mut products = Vec::new();
            for &a in &maps[i] {
                for &b in &maps[j] {
                    products.push(a * b);
                }
            }
            out[i * k + j] = mean(&products) / mean(&maps[j]).max(eps);
        }
    }
    out
}

/// Ordered-pair counting: `i` causes `j` when `C[i][j] > C[j][i]`.
pub fn count_oracle(map: &CausalityMap) -> (Vec<u32>, Vec<u32>) {
    let k = map.k();
    let mut causes = vec![0; k];
    let mut effects = vec![0; k];
    for i in 0..k {
        for j in 0..k {
            if i != j && map.get(i, j) > map.get(j, i) {
                causes[i] += 1;
                effects[j] += 1;
            }
        }
    }
    (causes, effects)
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// `‖a − n‖ / max(‖a‖, ‖n‖, floor)` in the Euclidean norm.
pub fn relative_error(analytic: &[f64], numeric: &[f64], floor: f64) -> f64 {
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let diff: Vec<f64> = analytic.iter().zip(numeric).map(|(a, b)| a - b).collect();
    norm(&diff) / norm(analytic).max(norm(numeric)).max(floor)
}

/// Central differences with step `h` of `f` at `x`.
pub fn numeric_gradient(x: &[f64], h: f64, mut f: impl FnMut(&[f64]) -> f64) -> Vec<f64> {
    let mut probe = x.to_vec();
    (0..x.len())
        .map(|i| {
            let orig = probe[i];
            probe[i] = orig + h;
            let up = f(&probe);
            probe[i] = orig - h;
            let down = f(&probe);
            probe[i] = orig;
            (up - down) / (2.0 * h)
        })
        .collect()
}

pub mod grad {
    use causemap::am::Image;
    use causemap::desknet::model::{ActivationPattern, GROUP_NAMES};
    use causemap::desknet::{forward, generate_dataset, loss_and_grads, DeskNetParams, NetConfig, SyntheticSample, Variant};
    use causemap::rng;
    use rand::Rng as _;

    use super::{numeric_gradient, relative_error};

    pub const H: f64 = 1e-5;
    pub const FLOOR: f64 = 1e-6;

    pub fn random_image(seed: u64, side: usize) -> Image {
        let mut r = rng::stream(seed, 0x1a6e);
        Image::new(side, side, 1, (0..side * side).map(|_| r.random_range(0.05..0.95)).collect()).unwrap()
    }

    /// Worst relative error over `trials` random 8×8 images: `(error, image seed)`.
    pub fn image_loss_error(trials: u64, h: f64, f: impl Fn(&Image) -> (f64, Image)) -> (f64, u64) {
        let mut worst = (0.0, 0);
        for seed in 0..trials {
            let img = random_image(seed, 8);
            let (_, analytic) = f(&img);
            let numeric = numeric_gradient(img.as_slice(), h, |x| f(&img.with_data(x.to_vec())).0);
            let err = relative_error(analytic.as_slice(), &numeric, FLOOR);
            if err > worst.0 {
                worst = (err, seed);
            }
        }
        worst
    }

    pub fn batch(seed: u64, n: usize) -> Vec<SyntheticSample> {
        let mut data = generate_dataset(n, seed);
        // keep the labels, move the pixels away from exact zeros and ones
        let mut r = rng::stream(seed, 0xba7c);
        for s in &mut data {
            for v in &mut s.image {
                *v = 0.8 * *v + 0.1 + r.random_range(-0.05..0.05);
            }
        }
        data
    }

    /// Sampled coordinates of one parameter group.
    fn coordinates(len: usize, count: usize, seed: u64) -> Vec<usize> {
        if len <= count {
            return (0..len).collect();
        }
        let mut r = rng::stream(seed, 0xc00d);
        (0..count).map(|_| r.random_range(0..len)).collect()
    }

    fn patterns(params: &DeskNetParams, samples: &[&SyntheticSample], cfg: &NetConfig, step_key: u64) -> Vec<ActivationPattern> {
        samples
            .iter()
            .map(|s| forward(params, &s.image, cfg, rng::mix(&[step_key, s.id])).unwrap().cache.pattern())
            .collect()
    }

    #[derive(Debug, Default)]
    pub struct NetCheck {
        pub worst: f64,
        pub worst_at: String,
        pub probes: usize,
        pub skipped: usize,
    }

    /// Central differences on `per_group` sampled coordinates of every parameter
    /// group for a 4-sample batch. A probe whose ±h neighbours change the
    /// activation pattern straddles a kink, where the difference quotient is not
    /// a derivative; such coordinates are skipped and counted.
    pub fn desk_net_check(variant: Variant, trial: u64, per_group: usize, check: &mut NetCheck) {
        let cfg = NetConfig::new(variant);
        let samples = batch(trial, 4);
        let refs: Vec<_> = samples.iter().collect();
        let params = DeskNetParams::init(cfg.classifier_width(), trial);
        let step_key = 31 + trial;
        let (_, grads, _) = loss_and_grads(&params, &refs, &cfg, step_key).unwrap();
        let base = patterns(&params, &refs, &cfg, step_key);
        for g in 0..6 {
            let mut analytic = Vec::new();
            let mut numeric = Vec::new();
            let mut probe = params.clone();
            for i in coordinates(params.groups()[g].len(), per_group, trial * 7 + g as u64) {
                let orig = probe.groups()[g][i];
                let mut eval = |v: f64| {
                    probe.groups_mut()[g][i] = v;
                    let loss = loss_and_grads(&probe, &refs, &cfg, step_key).unwrap().0;
                    (loss, patterns(&probe, &refs, &cfg, step_key) == base)
                };
                let (up, up_smooth) = eval(orig + H);
                let (down, down_smooth) = eval(orig - H);
                probe.groups_mut()[g][i] = orig;
                check.probes += 1;
                if !(up_smooth && down_smooth) {
                    check.skipped += 1;
                    continue;
                }
                analytic.push(grads.groups()[g][i]);
                numeric.push((up - down) / (2.0 * H));
            }
            let err = relative_error(&analytic, &numeric, FLOOR);
            if err > check.worst {
                check.worst = err;
                check.worst_at = format!("{variant} trial {trial} {}", GROUP_NAMES[g]);
            }
        }
    }
}
