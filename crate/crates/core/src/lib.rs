//! Two-particle Bohmian trajectories for two-slit style devices.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod checks;
pub mod dynamics;
pub mod ensemble;
pub mod error;
pub mod quadrature;
pub mod statistics;
pub mod wavefunction;

pub use error::{Error, Result};
