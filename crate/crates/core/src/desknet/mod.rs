//! Desk-scale convolutional classifier, its synthetic dataset and training loop.

pub mod arch;
pub mod data;
pub mod model;
pub mod train;

pub use arch::{count_parameters, ArchitectureSpec, DESK_BACKBONE, RESNET18_BACKBONE};
pub use data::{generate_dataset, stratified_split, write_dataset_csv, Split, SplitSizes, SyntheticSample};
pub use model::{backward, cross_entropy, forward, predict, DeskNetParams, DeskNetScorer, NetConfig, Variant};
pub use train::{evaluate, loss_and_grads, train, train_on, EpochRecord, Evaluation, RunMetrics, TrainConfig, TrainOutcome};
