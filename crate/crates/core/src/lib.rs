//! Moment-based simulation and gradient-based control of linear Gaussian
//! quantum systems, with a linearized cavity-optomechanics model.

pub mod cli;
pub mod control;
pub mod dynamics;
pub mod error;
pub mod fock;
pub mod gaussian;
pub mod optomech;
pub(crate) mod rk4;

pub use error::{Error, Result};
