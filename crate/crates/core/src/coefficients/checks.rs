//! Checkers for the standing assumptions on the coefficients.

use serde::Serialize;

use super::blocks::Blocks;
use super::field::HamiltonianSpec;
use super::sampling::{scan_max, scan_min, SAMPLES_PER_PIECE};
use crate::error::{Error, Result};
use crate::linalg::{self, Mat};

/// Outcome of the monotonicity check for `H + rho * Hbar`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MonotonicityReport {
    pub rho: f64,
    pub beta: f64,
    pub satisfied: bool,
    /// `-beta - max_eigenvalue`; nonnegative iff satisfied.
    pub margin: f64,
    pub worst_t: f64,
    pub max_eigenvalue: f64,
    /// Largest eigenvalue of `-H11 + H13 H33^-1 H31 + H14 H44^-1 H41` over time.
    pub schur_upper: f64,
    /// Largest eigenvalue of `H22 - H23 H33^-1 H32 - H24 H44^-1 H42` over time.
    pub schur_lower: f64,
    pub schur_satisfied: bool,
}

fn combined(spec: &HamiltonianSpec, rho: f64, t: f64) -> Blocks {
    let h = spec.h.blocks_at(t);
    if rho == 0.0 {
        h
    } else {
        h.add_scaled(&spec.hbar.blocks_at(t), rho)
    }
}

fn schur_pair(b: &Blocks) -> (f64, f64) {
    let (Some(i33), Some(i44)) = (b.b33.clone().try_inverse(), b.b44.clone().try_inverse()) else {
        return (f64::INFINITY, f64::INFINITY);
    };
    let h31 = b.b13.transpose();
    let h41 = b.b14.transpose();
    let h32 = b.b23.transpose();
    let h42 = b.b24.transpose();
    let upper = -&b.b11 + &b.b13 * &i33 * h31 + &b.b14 * &i44 * h41;
    let lower = &b.b22 - &b.b23 * &i33 * h32 - &b.b24 * &i44 * h42;
    (linalg::max_eigenvalue(&upper), linalg::max_eigenvalue(&lower))
}

/// Checks that the symmetrized signed matrix stays below `-beta I` uniformly in time,
/// together with the two Schur-complement inequalities.
pub fn check_monotonicity(spec: &HamiltonianSpec, rho: f64) -> MonotonicityReport {
    check_monotonicity_with_beta(spec, rho, spec.beta)
}

pub fn check_monotonicity_with_beta(spec: &HamiltonianSpec, rho: f64, beta: f64) -> MonotonicityReport {
    let bp = spec.breakpoints();
    let top = scan_max(bp, SAMPLES_PER_PIECE, |t| {
        linalg::max_eigenvalue(&combined(spec, rho, t).signed_symmetric())
    });
    let upper = scan_max(bp, SAMPLES_PER_PIECE, |t| schur_pair(&combined(spec, rho, t)).0);
    let lower = scan_max(bp, SAMPLES_PER_PIECE, |t| schur_pair(&combined(spec, rho, t)).1);
    MonotonicityReport {
        rho,
        beta,
        satisfied: top.value <= -beta,
        margin: -beta - top.value,
        worst_t: top.t,
        max_eigenvalue: top.value,
        schur_upper: upper.value,
        schur_lower: lower.value,
        schur_satisfied: upper.value < 0.0 && lower.value < 0.0,
    }
}

/// Structural conditions required by the one-dimensional family.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct H4Report {
    /// `H23 = -H33 H13` and `H24 = -H44 H14` on the sample grid.
    pub identities_hold: bool,
    pub hbar22_negative: bool,
    pub monotonicity: MonotonicityReport,
    pub passed: bool,
    pub first_violation_t: Option<f64>,
    pub violation: Option<String>,
}

pub fn check_h4(spec: &HamiltonianSpec) -> Result<H4Report> {
    if spec.n() != 1 {
        return Err(Error::Dimension(format!("structural check needs n = 1, got {}", spec.n())));
    }
    let mut first: Option<(f64, String)> = None;
    let mut identities_hold = true;
    let mut hbar22_negative = true;
    for t in super::sampling::sample_times(spec.breakpoints(), SAMPLES_PER_PIECE) {
        let b = spec.h.blocks_at(t);
        let hb = spec.hbar.blocks_at(t);
        let (h13, h14, h23, h24, h33, h44) = (
            b.b13[(0, 0)],
            b.b14[(0, 0)],
            b.b23[(0, 0)],
            b.b24[(0, 0)],
            b.b33[(0, 0)],
            b.b44[(0, 0)],
        );
        let tol = |a: f64, c: f64| 1e-10 * (1.0 + a.abs() + c.abs());
        let mut record = |msg: String| {
            if first.is_none() {
                first = Some((t, msg));
            }
        };
        if (h23 + h33 * h13).abs() > tol(h23, h33 * h13) {
            identities_hold = false;
            record(format!("H23 = {h23} but -H33*H13 = {}", -h33 * h13));
        }
        if (h24 + h44 * h14).abs() > tol(h24, h44 * h14) {
            identities_hold = false;
            record(format!("H24 = {h24} but -H44*H14 = {}", -h44 * h14));
        }
        if hb.b22[(0, 0)] >= 0.0 {
            hbar22_negative = false;
            record(format!("Hbar22 = {} is not negative", hb.b22[(0, 0)]));
        }
    }
    let monotonicity = check_monotonicity(spec, 0.0);
    if !monotonicity.satisfied && first.is_none() {
        first = Some((
            monotonicity.worst_t,
            format!("monotonicity margin {}", monotonicity.margin),
        ));
    }
    let passed = identities_hold && hbar22_negative && monotonicity.satisfied;
    Ok(H4Report {
        identities_hold,
        hbar22_negative,
        monotonicity,
        passed,
        first_violation_t: first.as_ref().map(|f| f.0),
        violation: first.map(|f| f.1),
    })
}

/// `H22 - H33 H13^2 - H44 H14^2` for a scalar field at `t`.
pub(crate) fn quadratic_core(spec: &HamiltonianSpec, t: f64) -> f64 {
    let b = spec.h.blocks_at(t);
    let (h13, h14) = (b.b13[(0, 0)], b.b14[(0, 0)]);
    b.b22[(0, 0)] - b.b33[(0, 0)] * h13 * h13 - b.b44[(0, 0)] * h14 * h14
}

/// Threshold ratio `min_t core(t) / max_t Hbar22(t)` below which the one-dimensional
/// family has no eigenvalues under the growth condition.
pub fn compute_rho_b(spec: &HamiltonianSpec) -> Result<f64> {
    if spec.n() != 1 {
        return Err(Error::Dimension(format!("rho_b needs n = 1, got {}", spec.n())));
    }
    let bp = spec.breakpoints();
    let hbar_max = scan_max(bp, SAMPLES_PER_PIECE, |t| spec.hbar.blocks_at(t).b22[(0, 0)]);
    if hbar_max.value >= 0.0 {
        return Err(Error::Assumption(format!(
            "Hbar22 must be negative on [0, T]; reaches {} at t = {}",
            hbar_max.value, hbar_max.t
        )));
    }
    let core_min = scan_min(bp, SAMPLES_PER_PIECE, |t| quadratic_core(spec, t));
    Ok(core_min.value / hbar_max.value)
}

/// Whether `-delta1 I <= H33, H44 <= -delta I` on the sample grid.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DeltaReport {
    pub satisfied: bool,
    /// Smallest distance to either bound; negative when violated.
    pub margin: f64,
    pub worst_t: f64,
}

pub fn check_delta_bracket(spec: &HamiltonianSpec) -> DeltaReport {
    let (d, d1) = (spec.delta, spec.delta1);
    let slack = |m: &Mat| {
        let ev = linalg::sym_eigenvalues(m);
        (-d - ev[ev.len() - 1]).min(ev[0] + d1)
    };
    let worst = scan_min(spec.breakpoints(), SAMPLES_PER_PIECE, |t| {
        let b = spec.h.blocks_at(t);
        slack(&b.b33).min(slack(&b.b44))
    });
    DeltaReport {
        satisfied: worst.value >= 0.0,
        margin: worst.value,
        worst_t: worst.t,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coefficients::field::CoefficientField;
    use crate::coefficients::piecewise::{Piece, PiecewisePoly};

    fn q2() -> Mat {
        Mat::from_row_slice(2, 2, &[-1.0, 1.0, 1.0, -1.0])
    }

    fn scalar_spec(h: &[((usize, usize), f64)], hbar22: f64, beta: f64) -> HamiltonianSpec {
        let hf = CoefficientField::scalar(1.0, h).unwrap();
        let hb = CoefficientField::scalar(1.0, &[((2, 2), hbar22)]).unwrap();
        HamiltonianSpec::new(hf, hb, q2(), beta, 0.5, 2.0).unwrap()
    }

    const DIAG: [((usize, usize), f64); 4] = [((1, 1), 1.0), ((2, 2), -1.0), ((3, 3), -1.0), ((4, 4), -1.0)];

    #[test]
    fn diagonal_case_is_tight_at_beta_one() {
        let r = check_monotonicity(&scalar_spec(&DIAG, -1.0, 1.0), 0.0);
        assert!(r.satisfied);
        assert_eq!(r.margin, 0.0);
        assert!(r.schur_satisfied);
    }

    #[test]
    fn negative_h11_fails() {
        let mut h = DIAG;
        h[0].1 = -1.0;
        let r = check_monotonicity(&scalar_spec(&h, -1.0, 1.0), 0.0);
        assert!(!r.satisfied);
        assert!((r.max_eigenvalue - 1.0).abs() < 1e-15);
    }

    #[test]
    fn perturbation_enters_as_h_plus_rho_hbar() {
        // H22 + 2 * 0.5 = 0 breaks the condition.
        let r = check_monotonicity(&scalar_spec(&DIAG, 0.5, 0.5), 2.0);
        assert!(!r.satisfied);
        assert!((r.max_eigenvalue - 0.0).abs() < 1e-15);
    }

    #[test]
    fn h4_identity_examples() {
        let base = [((1, 1), 1.0), ((2, 2), -3.0), ((3, 3), -1.0), ((4, 4), -1.0), ((1, 3), 1.0)];
        let mut ok = base.to_vec();
        ok.push(((2, 3), 1.0));
        let r = check_h4(&scalar_spec(&ok, -1.0, 0.1)).unwrap();
        assert!(r.identities_hold && r.passed, "{r:?}");

        let mut bad = base.to_vec();
        bad.push(((2, 3), 0.5));
        let r = check_h4(&scalar_spec(&bad, -1.0, 0.1)).unwrap();
        assert!(!r.identities_hold && !r.passed);
        assert_eq!(r.first_violation_t, Some(0.0));
    }

    #[test]
    fn h4_identity_in_time() {
        let lin = |a: f64, b: f64| PiecewisePoly::new(vec![Piece::linear(0.0, 1.0, Mat::from_element(1, 1, a), Mat::from_element(1, 1, b))]).unwrap();
        let h = CoefficientField::scalar(1.0, &[((1, 1), 1.0), ((2, 2), -3.0), ((3, 3), -1.0), ((4, 4), -1.0)])
            .unwrap()
            .with_block(1, 3, lin(0.0, 1.0))
            .unwrap()
            .with_block(2, 3, lin(0.0, 1.0))
            .unwrap();
        let hb = CoefficientField::scalar(1.0, &[((2, 2), -1.0)]).unwrap();
        let spec = HamiltonianSpec::new(h, hb, q2(), 0.1, 0.5, 2.0).unwrap();
        assert!(check_h4(&spec).unwrap().identities_hold);
    }

    #[test]
    fn h4_requires_scalar_state() {
        let h = CoefficientField::new(2, 1.0).unwrap();
        let spec = HamiltonianSpec::new(h.clone(), h, q2(), 1.0, 0.5, 2.0).unwrap();
        assert!(matches!(check_h4(&spec), Err(Error::Dimension(_))));
    }

    #[test]
    fn rho_b_constant_examples() {
        let s = scalar_spec(&[((2, 2), -2.0), ((3, 3), -1.0), ((1, 3), 1.0)], -1.0, 1.0);
        assert!((compute_rho_b(&s).unwrap() - 1.0).abs() < 1e-15);
        let s = scalar_spec(&[((2, 2), -1.0), ((3, 3), -1.0)], -2.0, 1.0);
        assert!((compute_rho_b(&s).unwrap() - 0.5).abs() < 1e-15);
        let s = scalar_spec(&[((2, 2), -1.0)], 0.0, 1.0);
        assert!(matches!(compute_rho_b(&s), Err(Error::Assumption(_))));
    }

    #[test]
    fn rho_b_linear_numerator() {
        // Oracle: the numerator -1 - t is minimal at t = 1, giving (-2)/(-1).
        let h = CoefficientField::new(1, 1.0)
            .unwrap()
            .with_block(
                2,
                2,
                PiecewisePoly::new(vec![Piece::linear(0.0, 1.0, Mat::from_element(1, 1, -1.0), Mat::from_element(1, 1, -2.0))]).unwrap(),
            )
            .unwrap();
        let hb = CoefficientField::scalar(1.0, &[((2, 2), -1.0)]).unwrap();
        let spec = HamiltonianSpec::new(h, hb, q2(), 1.0, 0.5, 2.0).unwrap();
        assert!((compute_rho_b(&spec).unwrap() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn delta_bracket() {
        let s = scalar_spec(&DIAG, -1.0, 1.0);
        let r = check_delta_bracket(&s);
        assert!(r.satisfied);
        assert!((r.margin - 0.5).abs() < 1e-15);
        let s = scalar_spec(&[((3, 3), -3.0), ((4, 4), -1.0)], -1.0, 1.0);
        assert!(!check_delta_bracket(&s).satisfied);
    }
}
