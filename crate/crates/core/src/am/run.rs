use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::image::Image;
use super::losses::{combined_prior_loss, PoolConfig, PriorWeights};
use crate::error::{Error, Result};
use crate::rng;

const AM_STREAM: u64 = 0xa_0a1;
const INIT_STREAM: u64 = 0x1_0a1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AmConfig {
    pub step_size: f64,
    pub iterations: usize,
    /// Maximum circular shift (pixels, each axis) applied before every scorer call.
    pub jitter_px: usize,
    /// Blur every this many iterations; 0 disables it.
    pub blur_every: usize,
    pub clip_lo: f64,
    pub clip_hi: f64,
    pub seed: u64,
    pub prior_weights: PriorWeights,
    pub pool: PoolConfig,
    /// Regularizers are applied on iterations divisible by this stride.
    pub prior_every: usize,
}

impl Default for AmConfig {
    fn default() -> Self {
        Self {
            step_size: 0.1,
            iterations: 100,
            jitter_px: 0,
            blur_every: 0,
            clip_lo: 0.0,
            clip_hi: 1.0,
            seed: 0,
            prior_weights: PriorWeights::default(),
            pool: PoolConfig::default(),
            prior_every: 1,
        }
    }
}

impl AmConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.step_size > 0.0 && self.step_size.is_finite()) {
            return Err(Error::InvalidInput(format!("step size must be positive, got {}", self.step_size)));
        }
        if !(self.clip_lo < self.clip_hi) {
            return Err(Error::InvalidInput(format!(
                "clip range [{}, {}] is empty",
                self.clip_lo, self.clip_hi
            )));
        }
        if self.prior_every == 0 {
            return Err(Error::InvalidInput("prior stride must be at least 1".into()));
        }
        let w = &self.prior_weights;
        if [w.histogram, w.noise, w.symmetry, w.frequency].iter().any(|v| !(*v >= 0.0)) {
            return Err(Error::InvalidInput("prior weights must be non-negative".into()));
        }
        Ok(())
    }
}

/// Anything that maps an image to an activation and its input gradient.
pub trait Scorer {
    fn score(&mut self, img: &Image) -> Result<(f64, Image)>;
}

impl<F> Scorer for F
where
    F: FnMut(&Image) -> Result<(f64, Image)>,
{
    fn score(&mut self, img: &Image) -> Result<(f64, Image)> {
        self(img)
    }
}

/// Concave test objective `a(X) = −‖X − X*‖²` with its maximum at `target`.
#[derive(Debug, Clone)]
pub struct QuadraticScorer {
    pub target: Image,
}

impl QuadraticScorer {
    /// A fixed smooth pattern in `[0.25, 0.75]`.
    pub fn pattern(h: usize, w: usize, c: usize) -> Result<Self> {
        let data = (0..h * w * c).map(|i| 0.5 + 0.25 * (i as f64 * 0.7).sin()).collect();
        Ok(Self {
            target: Image::new(h, w, c, data)?,
        })
    }
}

impl Scorer for QuadraticScorer {
    fn score(&mut self, img: &Image) -> Result<(f64, Image)> {
        if !img.same_shape(&self.target) {
            return Err(Error::ShapeMismatch {
                context: "quadratic scorer input",
                expected: self.target.as_slice().len(),
                found: img.as_slice().len(),
            });
        }
        let diff: Vec<f64> = img.as_slice().iter().zip(self.target.as_slice()).map(|(a, b)| a - b).collect();
        let value = -diff.iter().map(|d| d * d).sum::<f64>();
        Ok((value, img.with_data(diff.iter().map(|d| -2.0 * d).collect())))
    }
}

/// Uniform noise in `[lo, hi)`, reproducible from `seed`.
pub fn random_init(h: usize, w: usize, c: usize, lo: f64, hi: f64, seed: u64) -> Result<Image> {
    if !(lo < hi) {
        return Err(Error::InvalidInput(format!("init range [{lo}, {hi}] is empty")));
    }
    let mut r = rng::stream(seed, INIT_STREAM);
    Image::new(h, w, c, (0..h * w * c).map(|_| r.random_range(lo..hi)).collect())
}

/// A penalty `r(X)` subtracted from the objective.
pub trait Regularizer {
    fn evaluate(&self, img: &Image) -> Result<(f64, Image)>;
}

/// The weighted histogram/noise/symmetry/frequency priors as one regularizer.
#[derive(Debug, Clone)]
pub struct ImagePriors {
    pub weights: PriorWeights,
    pub pool: PoolConfig,
    pub target: Option<Vec<f64>>,
    pub reference: Option<Image>,
}

impl Regularizer for ImagePriors {
    fn evaluate(&self, img: &Image) -> Result<(f64, Image)> {
        combined_prior_loss(img, &self.weights, self.pool, self.target.as_deref(), self.reference.as_ref())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub iteration: usize,
    /// Scorer activation before this iteration's update.
    pub activation: f64,
    /// Weighted regularizer value (0 on iterations where priors are skipped).
    pub regularizer: f64,
}

#[derive(Debug, Clone)]
pub struct AmOutput {
    pub image: Image,
    pub trace: Vec<TraceRow>,
}

fn ensure_finite(iteration: usize, value: f64, grad: &Image) -> Result<()> {
    if value.is_finite() && grad.is_finite() {
        Ok(())
    } else {
        Err(Error::NonFiniteGradient { iteration })
    }
}

/// Runs `cfg.iterations` steps of `X ← X + γ ∂a/∂X − Σ λ ∂r/∂X`.
///
/// Each step jitters the image by a random circular shift before scoring and
/// shifts the gradient back; after the update the image is optionally blurred
/// and every pixel outside the clip range is redrawn uniformly inside it.
pub fn am_run<S: Scorer + ?Sized>(
    scorer: &mut S,
    init: &Image,
    cfg: &AmConfig,
    regularizers: &[(f64, &dyn Regularizer)],
) -> Result<AmOutput> {
    cfg.validate()?;
    let mut rng = rng::stream(cfg.seed, AM_STREAM);
    let jitter = cfg.jitter_px as i64;
    let mut x = init.clone();
    let mut trace = Vec::with_capacity(cfg.iterations);

    for t in 0..cfg.iterations {
        let (dy, dx) = if jitter > 0 {
            (
                rng.random_range(-jitter..=jitter) as isize,
                rng.random_range(-jitter..=jitter) as isize,
            )
        } else {
            (0, 0)
        };
        let (activation, grad) = match scorer.score(&x.roll(dy, dx)) {
            Err(Error::NumericOverflow(_)) => return Err(Error::NonFiniteGradient { iteration: t }),
            other => other?,
        };
        if !grad.same_shape(&x) {
            return Err(Error::ShapeMismatch {
                context: "scorer gradient",
                expected: x.as_slice().len(),
                found: grad.as_slice().len(),
            });
        }
        ensure_finite(t, activation, &grad)?;
        let grad = grad.roll(-dy, -dx);

        let mut penalty = 0.0;
        let mut penalty_grad = vec![0.0; x.as_slice().len()];
        if t % cfg.prior_every == 0 {
            for &(weight, reg) in regularizers {
                let (v, g) = reg.evaluate(&x)?;
                ensure_finite(t, v, &g)?;
                penalty += weight * v;
                for (acc, gi) in penalty_grad.iter_mut().zip(g.as_slice()) {
                    *acc += weight * gi;
                }
            }
        }

        for ((xi, gi), pi) in x.as_mut_slice().iter_mut().zip(grad.as_slice()).zip(&penalty_grad) {
            *xi += cfg.step_size * gi - pi;
        }
        if cfg.blur_every > 0 && (t + 1) % cfg.blur_every == 0 {
            x = x.box_blur3();
        }
        for xi in x.as_mut_slice() {
            if *xi < cfg.clip_lo || *xi > cfg.clip_hi {
                *xi = rng.random_range(cfg.clip_lo..cfg.clip_hi);
            }
        }
        if !x.is_finite() {
            return Err(Error::NonFiniteGradient { iteration: t });
        }
        trace.push(TraceRow {
            iteration: t,
            activation,
            regularizer: penalty,
        });
    }
    Ok(AmOutput { image: x, trace })
}
