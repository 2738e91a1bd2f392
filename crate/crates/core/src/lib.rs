//! Moment bounds, central limit theorems and Berry–Esseen bounds for
//! nonlinear functionals of Gaussian triangular arrays.

pub mod applications;
pub mod berry_esseen;
pub mod clt_harness;
pub mod error;
pub mod gaussian_model;
pub mod hermite;
pub mod moment_bounds;
pub mod stats;
pub mod wick_diagrams;

pub use error::{Error, Result};
