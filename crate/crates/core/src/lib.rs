//! Numerical laboratory for the Ricci flow on surfaces.
//!
//! On a surface the Ricci flow of a conformal metric `g = u (dx² + dy²)` is the
//! logarithmic fast diffusion equation `∂u/∂t = Δ log u`. This crate provides
//! closed-form solutions of that equation, discrete differential geometry of
//! rotationally symmetric conformal metrics, a time integrator with
//! consistency diagnostics, Hamilton-style point picking and dilation, and the
//! surface-of-revolution embedding used to read off circumference and width.

pub mod acceptance;
pub mod embedding;
pub mod error;
pub mod exact;
pub mod fit;
pub mod flow;
pub mod geometry;
pub mod grid;
pub mod io;
pub mod rescaling;

pub use error::{Error, Result};
pub use exact::{ChartPoint, ExactSolution};
pub use grid::{Chart, ConformalGrid, GridLayout};
