//! Analytic envelopes for the multi-dimensional family and node-wise condition checks.

use super::blowup::RiccatiTrajectory;
use super::problem::weaker_condition_slack;
use super::RiccatiSystem;
use crate::coefficients::sampling::{scan_max, SAMPLES_PER_PIECE};
use crate::coefficients::HamiltonianSpec;
use crate::linalg;

/// Uniform-in-time spectral norm of block (k,l) of `H`.
pub fn sup_norm(spec: &HamiltonianSpec, k: usize, l: usize) -> f64 {
    match spec.h.block(k.min(l), k.max(l)) {
        None => 0.0,
        Some(_) => {
            scan_max(spec.breakpoints(), SAMPLES_PER_PIECE, |t| {
                linalg::spectral_norm(&spec.h.blocks_at(t).get(k, l))
            })
            .value
        }
    }
}

/// Coefficients `(A, B)` of the scalar comparison equation `-k' = A + 2 B k`.
pub fn comparison_coefficients(spec: &HamiltonianSpec, varrho: f64) -> (f64, f64) {
    let w = varrho * varrho / spec.delta;
    let (n13, n14) = (sup_norm(spec, 1, 3), sup_norm(spec, 1, 4));
    let a = sup_norm(spec, 1, 1) + w * (n13 * n13 + n14 * n14);
    let b = sup_norm(spec, 1, 2) + w * (n13 * sup_norm(spec, 2, 3) + n14 * sup_norm(spec, 2, 4));
    (a, b)
}

/// Upper envelope `A/(2B) (exp(2B (T - t)) - 1)` for the multi-dimensional
/// family with `varrho` in `[0, 1]`; `A (T - t)` when `B = 0`.
pub fn closed_form_k1(spec: &HamiltonianSpec, varrho: f64, t: f64) -> f64 {
    let (a, b) = comparison_coefficients(spec, varrho);
    envelope(a, b, spec.horizon() - t)
}

pub(crate) fn envelope(a: f64, b: f64, tau: f64) -> f64 {
    if b == 0.0 {
        a * tau
    } else {
        a / (2.0 * b) * (2.0 * b * tau).exp_m1()
    }
}

/// Whether every node of `traj` satisfies the weaker invertibility condition with
/// constant `c` (smallest eigenvalue of the difference at least `-1e-8`).
pub fn check_weaker_condition(sys: &RiccatiSystem, traj: &RiccatiTrajectory, c: f64) -> bool {
    traj.nodes().all(|(chart, node)| match sys.blocks(node.t, chart) {
        Ok(b) => weaker_condition_slack(&node.k, &b, c) >= -1e-8,
        Err(_) => false,
    })
}
