//! Transverse instability of small-amplitude Stokes waves in finite depth.
//!
//! The pipeline runs from the dispersion relation and the resonant transverse
//! wavenumber, through the expansion of the flattened Dirichlet–Neumann operator
//! and the Kato reduction to a 2×2 matrix, to the unstable eigenvalue isola.
//! An independent truncated-operator eigensolver validates the predictions.

pub mod dispersion;
pub mod dno;
pub mod error;
pub mod isola;
pub mod jet;
pub mod kato;
pub mod modealg;
pub mod stokes;
pub mod validator;

pub use error::{Error, Result};
