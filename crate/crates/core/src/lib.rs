//! Randomized-neural-network collocation for steady neutron transport.

pub mod basis;
pub mod error;
pub mod geometry;
pub mod quadrature;
pub mod transport;
pub mod assembly;
pub mod sketch;
pub mod solver;
pub mod analysis;
pub mod baseline;
pub mod cli;

pub use basis::{Activation, RandomFeatureBasis};
pub use error::{RannError, Result};
