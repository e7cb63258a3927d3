//! Numerical construction of multiple-end solutions of
//! `Delta u - u + u^p = 0` in the plane by gluing bent bump-lines along
//! Toda trajectories.

pub mod ansatz;
pub mod corrector;
pub mod cutoff;
pub mod dancer;
pub mod error;
pub mod grid;
pub mod linear;
pub mod profile1d;
pub mod quad;
pub mod reduction;
pub mod sparse;
pub mod toda;

pub use error::{Error, Result};
