//! Quaternionic hyperbolic geometry: quaternion matrices, the isometry group
//! of `H^n_ℍ`, the displacement bounds behind the embedded-ball radius, and
//! ball volumes.

pub mod error;
pub mod bounds;
pub mod cli;
pub mod geometry;
pub mod qmatrix;
pub mod quaternion;
pub mod random;
pub mod volume;

pub use error::{Error, Result};
pub use qmatrix::QMatrix;
pub use quaternion::Quaternion;
