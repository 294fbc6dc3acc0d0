//! Mean curvature flow laboratory.
//!
//! Evolves closed polygons and triangle meshes by `∂F/∂t = −Hν` up to their
//! first singular time, evaluates blow-up functionals of the second
//! fundamental form along the way, and numerically checks the Sobolev,
//! Harnack and Gronwall machinery used to bound `|A|`. Shrinking spheres
//! and circles are the exact reference solutions.

// `!(x > 0.0)` is how NaN gets rejected along with the rest.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod cli;
pub mod error;
pub mod flow;
pub mod gronwall;
pub mod linalg;
pub mod manifest;
pub mod monitors;
pub mod oracle;
pub mod quad;
pub mod rescale;
pub mod surface;

pub use error::{Error, Result};
