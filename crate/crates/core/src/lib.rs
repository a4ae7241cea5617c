//! Site percolation on the Poisson-Voronoi tessellation of the hyperbolic
//! plane.
//!
//! The crate samples marked Poisson processes on the Poincaré disk, builds
//! their Delaunay graphs, runs percolation experiments, simulates the
//! branching exploration used for lower bounds on the critical probability,
//! and classifies pseudo-edges and pseudopaths used for upper bounds.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod delaunay;
pub mod error;
pub mod exploration;
pub mod geometry;
pub mod percolation;
pub mod ppp;
pub mod pseudopath;
pub mod stats;
pub mod voronoi;

pub use error::{Error, Result};
