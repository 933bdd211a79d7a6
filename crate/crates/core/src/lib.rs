//! Numerical toolkit for Lieb–Thirring type eigenvalue sums of non-selfadjoint
//! perturbations of the magnetic Laplacian with constant field.

pub mod assembly;
pub mod conformal;
pub mod config;
pub mod error;
pub mod holo;
pub mod landau;
pub mod linalg;
pub mod lt;
pub mod potential;
pub mod quadrature;
pub mod report;
pub mod schatten;
pub mod spectrum;
pub mod sum;

pub use error::{Error, Result};
