//! Normalized standing waves of the upper-critical Choquard equation with a
//! focusing local perturbation.

pub mod cli;
pub mod config;
pub mod discretization;
pub mod dynamics;
pub mod error;
pub mod functionals;
pub mod io;
pub mod linalg;
pub mod model;
pub mod quadrature;
pub mod solvers;
pub mod special;
pub mod verify;

pub use error::{Error, Result};
