//! Image priors for activation maximization. Each loss returns its value
//! together with the gradient with respect to every pixel.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use super::image::Image;
use crate::error::{Error, Result};

/// Floor applied to histogram bins before renormalizing.
pub const HISTOGRAM_EPSILON: f64 = 1e-12;
/// Spectrum magnitudes below this are treated as constant.
pub const SPECTRUM_EPSILON: f64 = 1e-12;
pub const DEFAULT_BINS: usize = 64;

/// Mean squared difference between the left half and the mirrored right half.
/// With an odd width the centre column is left out.
pub fn symmetry_loss(img: &Image) -> (f64, Image) {
    let (h, w, c) = (img.height(), img.width(), img.channels());
    let half = w / 2;
    let mut grad = Image::zeros_like(img);
    if half == 0 {
        return (0.0, grad);
    }
    let count = (h * half * c) as f64;
    let mut loss = 0.0;
    let g = grad.as_mut_slice();
    for y in 0..h {
        for x in 0..half {
            for ch in 0..c {
                let l = img.index(y, x, ch);
                let r = img.index(y, w - 1 - x, ch);
                let d = img.as_slice()[l] - img.as_slice()[r];
                loss += d * d;
                g[l] += 2.0 * d / count;
                g[r] -= 2.0 * d / count;
            }
        }
    }
    (loss / count, grad)
}

fn bin_center(b: usize, bins: usize) -> f64 {
    (b as f64 + 0.5) / bins as f64
}

/// Triangular-kernel soft histogram of all pixel values over `[0, 1]`, divided
/// by the pixel count. Values inside `[center_0, center_last]` contribute a
/// total mass of exactly one.
pub fn soft_histogram(img: &Image, bins: usize) -> Vec<f64> {
    let width = 1.0 / bins as f64;
    let n = img.as_slice().len() as f64;
    let mut hist = vec![0.0; bins];
    for &v in img.as_slice() {
        for (b, slot) in hist.iter_mut().enumerate() {
            let t = 1.0 - (v - bin_center(b, bins)).abs() / width;
            if t > 0.0 {
                *slot += t / n;
            }
        }
    }
    hist
}

fn floor_renormalize(h: &[f64], epsilon: f64) -> (Vec<f64>, f64) {
    let floored: Vec<f64> = h.iter().map(|&v| v.max(epsilon)).collect();
    let sum: f64 = floored.iter().sum();
    (floored.iter().map(|v| v / sum).collect(), sum)
}

fn validate_target(target: &[f64]) -> Result<()> {
    if target.is_empty() {
        return Err(Error::DegenerateTarget("no bins".into()));
    }
    if let Some((b, v)) = target.iter().enumerate().find(|(_, v)| !(**v >= 0.0) || !v.is_finite()) {
        return Err(Error::DegenerateTarget(format!("bin {b} is {v}")));
    }
    let sum: f64 = target.iter().sum();
    if (sum - 1.0).abs() > 1e-9 {
        return Err(Error::DegenerateTarget(format!("bins sum to {sum}, expected 1")));
    }
    Ok(())
}

/// Symmetric KL divergence between the soft histogram of `img` and `target`
/// (one bin per target entry).
pub fn histogram_loss(img: &Image, target: &[f64]) -> Result<(f64, Image)> {
    validate_target(target)?;
    let bins = target.len();
    let width = 1.0 / bins as f64;
    let n = img.as_slice().len() as f64;
    let raw = soft_histogram(img, bins);
    let (p, sum) = floor_renormalize(&raw, HISTOGRAM_EPSILON);
    let (t, _) = floor_renormalize(target, HISTOGRAM_EPSILON);

    // KL(p‖t) + KL(t‖p) = Σ (p − t) ln(p / t)
    let loss = 0.5 * p.iter().zip(&t).map(|(p, t)| (p - t) * (p / t).ln()).sum::<f64>();

    // d loss / d p_b, then through the renormalization and the floor
    let dp: Vec<f64> = p.iter().zip(&t).map(|(p, t)| 0.5 * ((p / t).ln() + 1.0 - t / p)).collect();
    let mean_dp: f64 = dp.iter().zip(&p).map(|(d, p)| d * p).sum();
    let draw: Vec<f64> = raw
        .iter()
        .zip(&dp)
        .map(|(&r, &d)| if r > HISTOGRAM_EPSILON { (d - mean_dp) / sum } else { 0.0 })
        .collect();

    let mut grad = Image::zeros_like(img);
    for (g, &v) in grad.as_mut_slice().iter_mut().zip(img.as_slice()) {
        for (b, &d) in draw.iter().enumerate() {
            let offset = v - bin_center(b, bins);
            if offset.abs() < width {
                *g += d * (-offset.signum() / width) / n;
            }
        }
    }
    Ok((loss, grad))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PoolConfig {
    pub kernel: usize,
    pub stride: usize,
    pub padding: usize,
}

impl Default for PoolConfig {
    fn default() -> Self {
        Self {
            kernel: 5,
            stride: 1,
            padding: 2,
        }
    }
}

impl PoolConfig {
    fn out_dim(&self, d: usize) -> Result<usize> {
        let padded = d + 2 * self.padding;
        if self.kernel == 0 || self.stride == 0 || padded < self.kernel {
            return Err(Error::InvalidInput(format!("pooling {self:?} does not fit size {d}")));
        }
        Ok((padded - self.kernel) / self.stride + 1)
    }
}

/// Zero-padded average pooling that always divides by `kernel²`.
fn avg_pool(x: &[f64], h: usize, w: usize, pool: PoolConfig) -> Result<(Vec<f64>, usize, usize)> {
    let (oh, ow) = (pool.out_dim(h)?, pool.out_dim(w)?);
    let area = (pool.kernel * pool.kernel) as f64;
    let mut out = vec![0.0; oh * ow];
    for oy in 0..oh {
        for ox in 0..ow {
            let mut acc = 0.0;
            for ky in 0..pool.kernel {
                let y = (oy * pool.stride + ky) as isize - pool.padding as isize;
                if y < 0 || y >= h as isize {
                    continue;
                }
                for kx in 0..pool.kernel {
                    let xx = (ox * pool.stride + kx) as isize - pool.padding as isize;
                    if xx >= 0 && xx < w as isize {
                        acc += x[y as usize * w + xx as usize];
                    }
                }
            }
            out[oy * ow + ox] = acc / area;
        }
    }
    Ok((out, oh, ow))
}

/// Adjoint of [`avg_pool`]: spreads output gradients back onto the input grid.
fn avg_pool_adjoint(g: &[f64], h: usize, w: usize, oh: usize, ow: usize, pool: PoolConfig) -> Vec<f64> {
    let area = (pool.kernel * pool.kernel) as f64;
    let mut out = vec![0.0; h * w];
    for oy in 0..oh {
        for ox in 0..ow {
            let share = g[oy * ow + ox] / area;
            for ky in 0..pool.kernel {
                let y = (oy * pool.stride + ky) as isize - pool.padding as isize;
                if y < 0 || y >= h as isize {
                    continue;
                }
                for kx in 0..pool.kernel {
                    let xx = (ox * pool.stride + kx) as isize - pool.padding as isize;
                    if xx >= 0 && xx < w as isize {
                        out[y as usize * w + xx as usize] += share;
                    }
                }
            }
        }
    }
    out
}

fn require_single_channel(img: &Image, context: &'static str) -> Result<()> {
    if img.channels() == 1 {
        Ok(())
    } else {
        Err(Error::ShapeMismatch {
            context,
            expected: 1,
            found: img.channels(),
        })
    }
}

/// Mean of `(local mean − local variance)²`, both taken with average pooling.
pub fn noise_loss(img: &Image, pool: PoolConfig) -> Result<(f64, Image)> {
    require_single_channel(img, "noise loss channels")?;
    let (h, w) = (img.height(), img.width());
    let x = img.as_slice();
    let sq: Vec<f64> = x.iter().map(|v| v * v).collect();
    let (mu, oh, ow) = avg_pool(x, h, w, pool)?;
    let (m2, _, _) = avg_pool(&sq, h, w, pool)?;
    let count = mu.len() as f64;

    let mut loss = 0.0;
    let mut g_mu = vec![0.0; mu.len()];
    let mut g_m2 = vec![0.0; mu.len()];
    for i in 0..mu.len() {
        let d = mu[i] - (m2[i] - mu[i] * mu[i]);
        loss += d * d;
        let dd = 2.0 * d / count;
        g_mu[i] = dd * (1.0 + 2.0 * mu[i]);
        g_m2[i] = -dd;
    }
    let back_mu = avg_pool_adjoint(&g_mu, h, w, oh, ow, pool);
    let back_m2 = avg_pool_adjoint(&g_m2, h, w, oh, ow, pool);
    let grad = x
        .iter()
        .zip(back_mu.iter().zip(&back_m2))
        .map(|(v, (a, b))| a + 2.0 * v * b)
        .collect();
    Ok((loss / count, img.with_data(grad)))
}

/// Unnormalized 2-D DFT (forward) or inverse DFT of a row-major `h × w` grid.
fn fft2(data: &mut [Complex<f64>], h: usize, w: usize, inverse: bool) {
    let mut planner = FftPlanner::new();
    let (row, col) = if inverse {
        (planner.plan_fft_inverse(w), planner.plan_fft_inverse(h))
    } else {
        (planner.plan_fft_forward(w), planner.plan_fft_forward(h))
    };
    for r in data.chunks_exact_mut(w) {
        row.process(r);
    }
    let mut column = vec![Complex::new(0.0, 0.0); h];
    for x in 0..w {
        for y in 0..h {
            column[y] = data[y * w + x];
        }
        col.process(&mut column);
        for y in 0..h {
            data[y * w + x] = column[y];
        }
    }
}

/// Spectrum magnitudes `|DFT2(img)|`, floored at [`SPECTRUM_EPSILON`].
pub fn spectrum_magnitude(img: &Image) -> Vec<f64> {
    let mut f: Vec<Complex<f64>> = img.as_slice().iter().map(|&v| Complex::new(v, 0.0)).collect();
    fft2(&mut f, img.height(), img.width(), false);
    f.iter().map(|z| z.norm().max(SPECTRUM_EPSILON)).collect()
}

/// Mean squared difference between the DFT magnitudes of `img` and `reference`.
pub fn frequency_loss(img: &Image, reference: &Image) -> Result<(f64, Image)> {
    require_single_channel(img, "frequency loss channels")?;
    if !img.same_shape(reference) {
        return Err(Error::ShapeMismatch {
            context: "frequency loss reference",
            expected: img.as_slice().len(),
            found: reference.as_slice().len(),
        });
    }
    let (h, w) = (img.height(), img.width());
    let target = spectrum_magnitude(reference);
    let mut f: Vec<Complex<f64>> = img.as_slice().iter().map(|&v| Complex::new(v, 0.0)).collect();
    fft2(&mut f, h, w, false);
    let n = f.len() as f64;

    let mut loss = 0.0;
    for (z, &t) in f.iter_mut().zip(&target) {
        let norm = z.norm();
        let d = norm.max(SPECTRUM_EPSILON) - t;
        loss += d * d;
        // d|F|/dI_x = Re(w_kx conj(F)) / |F|, folded back with an inverse DFT
        *z = if norm >= SPECTRUM_EPSILON {
            *z * (2.0 * d / (n * norm))
        } else {
            Complex::new(0.0, 0.0)
        };
    }
    fft2(&mut f, h, w, true);
    let grad = f.iter().map(|z| z.re).collect();
    Ok((loss / n, img.with_data(grad)))
}

/// Weights of the four priors: histogram, noise, symmetry, frequency.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct PriorWeights {
    pub histogram: f64,
    pub noise: f64,
    pub symmetry: f64,
    pub frequency: f64,
}

/// Weighted sum of the prior terms. Terms with zero weight are skipped, so
/// their inputs may be absent.
pub fn combined_prior_loss(
    img: &Image,
    weights: &PriorWeights,
    pool: PoolConfig,
    target: Option<&[f64]>,
    reference: Option<&Image>,
) -> Result<(f64, Image)> {
    let mut total = 0.0;
    let mut grad = vec![0.0; img.as_slice().len()];
    let mut add = |w: f64, (v, g): (f64, Image)| {
        total += w * v;
        for (acc, gi) in grad.iter_mut().zip(g.as_slice()) {
            *acc += w * gi;
        }
    };
    if weights.histogram != 0.0 {
        let target = target.ok_or_else(|| Error::InvalidInput("histogram prior needs a target".into()))?;
        add(weights.histogram, histogram_loss(img, target)?);
    }
    if weights.noise != 0.0 {
        add(weights.noise, noise_loss(img, pool)?);
    }
    if weights.symmetry != 0.0 {
        add(weights.symmetry, symmetry_loss(img));
    }
    if weights.frequency != 0.0 {
        let reference = reference.ok_or_else(|| Error::InvalidInput("frequency prior needs a reference".into()))?;
        add(weights.frequency, frequency_loss(img, reference)?);
    }
    Ok((total, img.with_data(grad)))
}
