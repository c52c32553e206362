//! Rectification network N and policy network pi: fixed pooling features,
//! a small dense regressor, training, gradient checking and checkpoints.

pub mod checkpoint;
pub mod features;
pub mod model;
pub mod train;

pub use features::{canonical_input, featurize, half_turn_pooled, mirror_pooled, pool, pool_pair, with_scalar, FEATURE_LEN, POOLED_LEN};
pub use model::{grad_check, loss_and_grad, Activation, Head, ModelParams, Role, Sample, DEFAULT_DIMS, OUTPUT_SCALE};
pub use train::{filter_samples, mean_loss, train, train_with_dims, TrainConfig, TrainReport};
