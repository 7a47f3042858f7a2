//! Numeric core: dense matrices, deterministic randomness, and the
//! finite-difference gradient checker used by every other module.

pub mod gradcheck;
pub mod matrix;
pub mod rng;

pub use gradcheck::{finite_diff_grad, max_rel_err};
pub use matrix::{dot, gram, norm, normalize_rows, Matrix, ZERO_NORM_THRESHOLD};
pub use rng::{random_orthogonal, streams, RngStream};
