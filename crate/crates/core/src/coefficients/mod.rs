//! Time-dependent Hamiltonian coefficients, assumption checks and dual coefficients.

pub mod blocks;
pub mod checks;
pub mod dual;
pub mod field;
pub mod piecewise;
pub mod sampling;

pub use blocks::{Blocks, Perturbation};
pub use checks::{
    check_delta_bracket, check_h4, check_monotonicity, check_monotonicity_with_beta, compute_rho_b,
    DeltaReport, H4Report, MonotonicityReport,
};
pub use dual::{dual_blocks_at, dual_transform, dual_transform_with, DualField};
pub use field::{CoefficientField, HamiltonianSpec};
pub use piecewise::{Piece, PiecewisePoly};
