//! Reference systems with known spectra, shared by tests, the acceptance
//! suite and the command-line examples.

use std::f64::consts::PI;

use crate::coefficients::{CoefficientField, HamiltonianSpec, Piece, PiecewisePoly};
use crate::error::Result;
use crate::linalg::Mat;

/// Generator of the symmetric two-state chain with unit switching rates.
pub fn symmetric_two_state() -> Mat {
    Mat::from_row_slice(2, 2, &[-1.0, 1.0, 1.0, -1.0])
}

fn s(x: f64) -> Mat {
    Mat::from_element(1, 1, x)
}

fn linear(t1: f64, a: f64, b: f64) -> PiecewisePoly {
    PiecewisePoly::new(vec![Piece::linear(0.0, t1, s(a), s(b))]).expect("valid linear piece")
}

/// Scalar family `H11 = 1`, `H22 = Hbar22 = -1`, `H33 = H44 = -1`, others zero.
///
/// Each primal and dual link of the blow-up chain has length
/// `pi / (2 sqrt(rho - 1))`, so on `T = pi` the eigenvalues are
/// `1 + ((2m - 1)/2)^2`.
pub fn constant_family(horizon: f64) -> HamiltonianSpec {
    let h = CoefficientField::scalar(horizon, &[((1, 1), 1.0), ((2, 2), -1.0), ((3, 3), -1.0), ((4, 4), -1.0)])
        .expect("valid field");
    let hbar = CoefficientField::scalar(horizon, &[((2, 2), -1.0)]).expect("valid field");
    HamiltonianSpec::new(h, hbar, symmetric_two_state(), 1.0, 0.5, 2.0).expect("valid spec")
}

/// Closed-form eigenvalues of [`constant_family`] on `[0, pi]`.
pub fn constant_family_eigenvalue(m: usize) -> f64 {
    let half = (2 * m - 1) as f64 / 2.0;
    1.0 + half * half
}

/// Blow-up chain link length of [`constant_family`] at `rho > 1`.
pub fn constant_family_link(rho: f64) -> f64 {
    PI / (2.0 * (rho - 1.0).sqrt())
}

/// Scalar family with mildly time-varying coefficients and the structural
/// couplings `H23 = -H33 H13`.
pub fn time_varying_family(horizon: f64) -> HamiltonianSpec {
    let h = CoefficientField::scalar(
        horizon,
        &[
            ((1, 2), 0.1),
            ((2, 2), -1.0),
            ((1, 3), 0.2),
            ((2, 3), 0.2),
            ((3, 3), -1.0),
            ((4, 4), -1.0),
        ],
    )
    .and_then(|f| f.with_block(1, 1, linear(horizon, 1.0, 1.2)))
    .expect("valid field");
    let hbar = CoefficientField::new(1, horizon)
        .and_then(|f| f.with_block(2, 2, linear(horizon, -1.0, -1.1)))
        .expect("valid field");
    HamiltonianSpec::new(h, hbar, symmetric_two_state(), 0.75, 0.5, 2.0).expect("valid spec")
}

/// Two-dimensional spec with all couplings present.
pub fn coupled_two_dim(horizon: f64) -> HamiltonianSpec {
    let m = |v: [f64; 4]| Mat::from_row_slice(2, 2, &v);
    let i2 = Mat::identity(2, 2);
    let h = CoefficientField::constant(
        2,
        horizon,
        &[
            ((1, 1), m([1.2, 0.1, 0.1, 0.9])),
            ((1, 2), m([0.2, 0.05, 0.0, 0.1])),
            ((1, 3), &i2 * 0.2),
            ((1, 4), &i2 * 0.1),
            ((2, 2), m([-1.0, -0.1, -0.1, -1.2])),
            ((2, 3), m([0.1, 0.0, 0.05, 0.1])),
            ((3, 3), -&i2),
            ((4, 4), &i2 * -1.5),
        ],
    )
    .expect("valid field");
    let hbar = CoefficientField::constant(2, horizon, &[((2, 2), -&i2)]).expect("valid field");
    HamiltonianSpec::new(h, hbar, symmetric_two_state(), 0.85, 0.9, 2.0).expect("valid spec")
}

/// Two decoupled scalar systems with `H11 = diag(1, 2)`, `H22 = -I`.
///
/// With `varrho = 1 - rho` the first eigenvalue of component `i` on `[0, T]` is
/// `1 + (pi / 2T)^2 / H11_i`.
pub fn block_diagonal_two_dim(horizon: f64) -> HamiltonianSpec {
    let i2 = Mat::identity(2, 2);
    let h11 = Mat::from_diagonal(&nalgebra::DVector::from_vec(vec![1.0, 2.0]));
    let h = CoefficientField::constant(
        2,
        horizon,
        &[((1, 1), h11), ((2, 2), -&i2), ((3, 3), -&i2), ((4, 4), -&i2)],
    )
    .expect("valid field");
    let hbar = CoefficientField::constant(2, horizon, &[((2, 2), -&i2)]).expect("valid field");
    HamiltonianSpec::new(h, hbar, symmetric_two_state(), 1.0, 0.5, 2.0).expect("valid spec")
}

/// Scalar spec satisfying the growth condition that excludes eigenvalues below `rho_b`.
pub fn weak_coupling_family() -> Result<HamiltonianSpec> {
    let h = CoefficientField::scalar(1.0, &[((1, 1), 0.01), ((1, 2), 0.5), ((3, 3), -1.0), ((4, 4), -1.0)])?
        .with_block(2, 2, linear(1.0, -1.0, -1.01))?;
    let hbar = CoefficientField::scalar(1.0, &[((2, 2), -1.0)])?;
    HamiltonianSpec::new(h, hbar, symmetric_two_state(), 0.009, 0.5, 2.0)
}
