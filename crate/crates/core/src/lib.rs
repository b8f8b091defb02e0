//! Hamiltonian-simulation embedding of Maxwell's equations on qubit grids.
//!
//! The crate builds the Hermitian operator of the potential formulation on a
//! power-of-two grid, compresses diagonal material operators into bit-pattern
//! cubes, evolves encoded states, extracts observables and cross-checks the
//! quantum evolution against a classical finite-difference solver.

pub mod compression;
pub mod error;
pub mod evolution;
pub mod fdm;
pub mod grid;
pub mod gridtext;
pub mod harness;
pub mod observables;
pub mod operators;
pub mod sparse;

pub use error::{Error, Result};
