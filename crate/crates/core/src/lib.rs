//! Secrecy graphs over Poisson legitimate and eavesdropper nodes.
//!
//! Edge rules, closed-form degree laws of the typical node, and Monte Carlo
//! estimators for three variants: plain, sectorized transmission, and
//! eavesdropper neutralization. Geometry, edge rules and closed forms are
//! generic over [`Scalar`]; the aliases below pin them to `f64`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analytics;
pub mod cli;
pub mod error;
pub mod geometry;
pub mod graph;
pub mod montecarlo;
pub mod point_process;
pub mod scalar;
pub mod validation;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type Point = geometry::Point2<f64>;
pub type Model = graph::NetworkModel<f64>;
pub type Densities = analytics::DensityPair<f64>;
pub type Sample = point_process::Realization<f64>;
