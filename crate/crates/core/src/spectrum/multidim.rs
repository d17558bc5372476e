//! First eigenvalue of the multi-dimensional family, where `varrho = 1 - rho`
//! scales the coupling blocks.

use super::record::{split_schedule, ChainLink, EigenvalueRecord, GainSchedule};
use crate::coefficients::{check_monotonicity, HamiltonianSpec, Perturbation};
use crate::error::{Error, Result};
use crate::linalg::{self, Mat};
use crate::riccati::{blow_up_time_with, BlowUpResult, Chart, IntegrationOptions, RiccatiSystem};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MultiDimOptions {
    pub tol: f64,
    /// Kernel cut relative to the largest norm of the dual solution.
    pub kernel_threshold: f64,
    /// Gluing time between the primal and dual pieces; `T/2` when unset.
    pub split: Option<f64>,
    pub integration: IntegrationOptions,
}

impl Default for MultiDimOptions {
    fn default() -> Self {
        MultiDimOptions {
            tol: 1e-8,
            kernel_threshold: 1e-6,
            split: None,
            integration: IntegrationOptions::default(),
        }
    }
}

/// Blow-up time of the primal equation from `K_T = 0` at `varrho = 1 - rho`.
pub fn scaled_blow_up_time(spec: &HamiltonianSpec, rho: f64, opts: &IntegrationOptions) -> Result<BlowUpResult> {
    let sys = RiccatiSystem::new(spec, Perturbation::Scaled { varrho: 1.0 - rho });
    let n = spec.n();
    blow_up_time_with(&sys, Chart::Primal, spec.horizon(), &Mat::zeros(n, n), opts)
}

/// Bracket `(1, hi)` for the first eigenvalue, doubling `hi - 1` until the
/// blow-up time becomes positive. At `rho = 1` there is no blow-up.
pub fn bracket_first_eigenvalue(spec: &HamiltonianSpec, opts: &IntegrationOptions) -> Result<(f64, f64)> {
    let mut lo = 1.0;
    let mut step = 1.0;
    loop {
        let hi = 1.0 + step;
        if scaled_blow_up_time(spec, hi, opts)?.value > 0.0 {
            return Ok((lo, hi));
        }
        lo = hi;
        step *= 2.0;
        if step > 1e12 {
            return Err(Error::Bracket {
                lo: 1.0,
                hi,
                f_lo: f64::NEG_INFINITY,
                f_hi: f64::NEG_INFINITY,
            });
        }
    }
}

/// Bisection on `rho` for the blow-up time hitting zero, followed by kernel
/// extraction from the dual solution at the origin.
pub fn first_eigenvalue_multidim(
    spec: &HamiltonianSpec,
    bracket: (f64, f64),
    opts: &MultiDimOptions,
) -> Result<EigenvalueRecord> {
    let mono = check_monotonicity(spec, 0.0);
    if !mono.satisfied {
        return Err(Error::Assumption(format!(
            "monotonicity fails at t = {} (margin {})",
            mono.worst_t, mono.margin
        )));
    }
    let f = |rho: f64| scaled_blow_up_time(spec, rho, &opts.integration).map(|r| r.value);
    let (mut lo, mut hi) = bracket;
    let (f_lo, f_hi) = (f(lo)?, f(hi)?);
    if !(lo < hi && f_lo < 0.0 && f_hi > 0.0) {
        return Err(Error::Bracket { lo, hi, f_lo, f_hi });
    }
    while hi - lo > opts.tol {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid)? > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let rho = 0.5 * (lo + hi);
    let perturbation = Perturbation::Scaled { varrho: 1.0 - rho };
    let horizon = spec.horizon();
    let split = opts.split.unwrap_or(0.5 * horizon);
    if !(split > 0.0 && split < horizon) {
        return Err(Error::input("split", format!("must lie in (0, {horizon}), got {split}")));
    }
    let schedule = split_schedule(horizon, split);
    let gains = GainSchedule::build(spec, perturbation, &schedule, &opts.integration)?;
    let scale = gains
        .segments
        .last()
        .unwrap()
        .trajectory
        .nodes()
        .map(|(_, node)| linalg::spectral_norm(&node.k))
        .fold(0.0, f64::max);
    let kernel_basis = kernel(&gains.dual_at_origin()?, scale, opts.kernel_threshold)?;
    let blow = scaled_blow_up_time(spec, rho, &opts.integration)?;
    Ok(EigenvalueRecord {
        m: 1,
        rho,
        perturbation,
        chain: vec![ChainLink {
            t: blow.value,
            family: Chart::Primal,
        }],
        kernel_basis,
        schedule,
        tol: hi - lo,
    })
}

/// Eigenvectors of `k0` whose eigenvalues are below `threshold * scale` in
/// magnitude. The scale is the largest norm of the dual solution on its
/// interval, which stays meaningful when every eigenvalue of `k0` vanishes.
pub fn kernel(k0: &Mat, scale: f64, threshold: f64) -> Result<Vec<Vec<f64>>> {
    let (values, vectors) = linalg::sym_eigen(k0);
    let cut = threshold * scale.max(linalg::spectral_norm(k0));
    let basis: Vec<Vec<f64>> = values
        .iter()
        .enumerate()
        .filter(|(_, v)| v.abs() <= cut)
        .map(|(i, _)| vectors.column(i).iter().copied().collect())
        .collect();
    if basis.is_empty() {
        return Err(Error::Inconsistent(format!(
            "dual solution at zero has no eigenvalue below {cut:.3e} (eigenvalues {values:?})"
        )));
    }
    Ok(basis)
}
