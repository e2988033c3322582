//! Numerical toolkit for the Möbius energy of closed curves.
//!
//! Modules follow the structure of the analyticity argument for critical
//! points: energy, first variation and its Q/R1/R2 decomposition, the Fourier
//! multiplier of the leading part, the truncated bilinear Hilbert transform,
//! Faà di Bruno combinatorics, the majorant engine and a gradient flow.

pub mod bht;
pub mod corpus;
pub mod curve;
pub mod energy;
pub mod error;
pub mod faa;
pub mod flow;
pub mod gradient;
pub mod majorant;
pub mod multiplier;
pub mod quadrature;

pub use curve::{FourierCurve, SampledGrid, SobolevOrder};
pub use error::{Error, Result};

/// Code version embedded in every output file.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
