//! Activation maximization: gradient ascent on the input of any differentiable
//! scorer, with jitter, blur, stochastic clipping and image-prior regularizers.

mod image;
mod losses;
mod run;

pub use image::Image;
pub use losses::{
    combined_prior_loss, frequency_loss, histogram_loss, noise_loss, soft_histogram, spectrum_magnitude,
    symmetry_loss, PoolConfig, PriorWeights, DEFAULT_BINS, HISTOGRAM_EPSILON, SPECTRUM_EPSILON,
};
pub use run::{am_run, random_init, AmConfig, AmOutput, ImagePriors, QuadraticScorer, Regularizer, Scorer, TraceRow};
