//! Differential-geometry analysis and simulation of Shannon–Kotel'nikov analog
//! mappings: curve and surface geometry, concrete 3:2 mappings, distortion models,
//! Monte-Carlo channel simulation, constrained parameter optimisation and an
//! experiment runner.

pub mod channel;
pub mod curve;
pub mod distortion;
pub mod error;
pub mod experiment;
pub mod mappings;
pub mod optim;
pub mod quad;
pub mod sim;
pub mod surface;

pub use error::{Error, Result};
