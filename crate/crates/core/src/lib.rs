//! Coherent qubit collision models with Kirkwood-Dirac energy quasiprobabilities.

pub mod analytic;
pub mod cli;
pub mod collision;
pub mod error;
pub mod kdq;
pub mod linalg;
pub mod model;
pub mod selftest;
pub mod smalltau;

pub use error::{Error, Result};
