//! Analysis of a planar piecewise-affine ocean-convection model: exact zone
//! flows, switching-line classification, half Poincaré maps, crossing limit
//! cycles, and independent numerical verification oracles.

pub mod affine2d;
pub mod error;
pub mod filippov;
pub mod geom;
pub mod poincare;
pub mod simulate;
pub mod welander;

mod roots;

pub use error::{Error, Result};
