//! Existence, multiplicity and localization certificates for perturbed
//! Hammerstein integral equations, plus a fixed-point solver that exhibits
//! the certified solutions.

pub mod certify;
pub mod cone;
pub mod config;
pub mod eigen;
pub mod error;
pub mod expr;
pub mod functional;
pub mod grid;
pub mod index;
pub mod kernel;
mod linalg;
pub mod problem;
pub mod quad;
pub mod report;
pub mod solver;
mod rng;

pub use error::{Error, Result};
