//! Numerical Livšic theory for Markov interval maps.

pub mod cocycle;
pub mod dynamics;
pub mod experiments;
pub mod error;
pub mod group;
pub mod linalg;
pub mod livsic;
pub mod quadrature;
pub mod regression;
pub mod report;
pub mod scalar;
pub mod towers;

pub use error::{Error, Result};
pub use scalar::Real;
