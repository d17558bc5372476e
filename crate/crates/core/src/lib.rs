//! Eigenvalues and eigenfunctions of linear stochastic Hamiltonian systems with
//! regime switching, computed through blow-up times of Riccati equations.

pub mod coefficients;
pub mod corpus;
pub mod error;
pub mod linalg;
pub mod riccati;
pub mod spectrum;
pub mod stochastic;

pub use error::{Error, Result};
