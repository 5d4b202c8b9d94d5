//! Jet-bundle variational calculus: nested forward-mode differentiation,
//! prolonged and forced Lagrangians, their field equations, a
//! multisymplectic structure check and a structure-preserving integrator
//! for `1+1`-dimensional fields.

pub mod ad;
pub mod checks;
pub mod cli;
pub mod config;
pub mod error;
pub mod fieldeq;
pub mod geometry;
pub mod integrator;
pub mod jet;
pub mod lagrangian;
pub mod oracle;

pub use error::{Error, Result};
