//! Numerical laboratory for symplectic billiards on centrally symmetric,
//! strongly convex tables.

pub mod cli;
pub mod curve;
pub mod dynamics;
pub mod error;
pub mod experiments;
pub mod geometry;
pub mod integrals;
pub mod io;
pub mod normalize;
pub mod quadrature;

pub use curve::{apply_affine, ellipse_curve, Projection, SupportCurve};
pub use error::{Error, Result};
pub use geometry::{AffineMap, PlanePoint};
