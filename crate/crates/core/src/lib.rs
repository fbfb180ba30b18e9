//! Spectra, eigenfunctions and boundary-induced entanglement of a particle on
//! a half-line or interval coupled to a finite-level system, for every
//! self-adjoint boundary condition.

pub mod entanglement;
pub mod error;
pub mod extension;
pub mod fem;
pub mod halfline;
pub mod linalg;
pub mod roots;
pub mod rotor;
pub mod spectrum;

pub use error::{Error, Result};
