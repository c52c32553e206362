//! Planar active-surface gripper: simulator, estimator, controller, learning and evaluation.

// Negated comparisons reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod control;
pub mod dexterity;
pub mod error;
pub mod estimator;
pub mod geometry;
pub mod harness;
pub mod learning;
pub mod pipeline;
pub mod world;

pub use error::{Error, Result};
