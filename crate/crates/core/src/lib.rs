//! Numerical toolkit for shape-constrained estimation: convex regression,
//! log-concave density estimation, minimax lower-bound families and
//! empirical-process bounds over convex sets.

pub mod densities;
pub mod empirical;
pub mod error;
pub mod estimators;
pub mod experiments;
pub mod geometry;
pub mod lower_bounds;
pub mod points;
pub mod quadrature;
pub mod rng;

pub use error::{Result, ShapeError};
pub use points::PointSet;
