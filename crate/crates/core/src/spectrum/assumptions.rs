//! Growth condition of the one-dimensional family and the empty spectrum below `rho_b`.

use rayon::prelude::*;
use serde::Serialize;

use super::chain::one_dim_preconditions;
use crate::coefficients::sampling::{scan_max, SAMPLES_PER_PIECE};
use crate::coefficients::{compute_rho_b, HamiltonianSpec, Perturbation};
use crate::error::{Error, Result};
use crate::linalg::Mat;
use crate::riccati::{blow_up_time, Chart, RiccatiSystem};

/// The chained inequality `lhs <= mid < rhs` of the growth condition.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct H5Report {
    pub holds: bool,
    /// `4 |H11| |H22 - rho_b Hbar22 - H33 H13^2 - H44 H14^2|`.
    pub lhs: f64,
    /// `|2 H21 + H13^2 + H14^2|^2`.
    pub mid: f64,
    /// `4 / T^2`.
    pub rhs: f64,
    pub rho_b: f64,
}

pub fn check_h5(spec: &HamiltonianSpec) -> Result<H5Report> {
    let rho_b = compute_rho_b(spec)?;
    let bp = spec.breakpoints();
    let sup = |f: &dyn Fn(f64) -> f64| scan_max(bp, SAMPLES_PER_PIECE, |t| f(t).abs()).value;
    let h11 = sup(&|t| spec.h.blocks_at(t).b11[(0, 0)]);
    let quad = sup(&|t| {
        let b = spec.h.blocks_at(t);
        let (h13, h14) = (b.b13[(0, 0)], b.b14[(0, 0)]);
        b.b22[(0, 0)] - rho_b * spec.hbar.blocks_at(t).b22[(0, 0)] - b.b33[(0, 0)] * h13 * h13
            - b.b44[(0, 0)] * h14 * h14
    });
    let linear = sup(&|t| {
        let b = spec.h.blocks_at(t);
        2.0 * b.b12[(0, 0)] + b.b13[(0, 0)].powi(2) + b.b14[(0, 0)].powi(2)
    });
    let horizon = spec.horizon();
    let (lhs, mid, rhs) = (4.0 * h11 * quad, linear * linear, 4.0 / (horizon * horizon));
    Ok(H5Report {
        holds: lhs <= mid && mid < rhs,
        lhs,
        mid,
        rhs,
        rho_b,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NoSpectrumReport {
    pub holds: bool,
    pub rho_b: f64,
    pub samples: usize,
    /// Largest blow-up time seen on the grid (`-inf` when none blew up).
    pub max_blow_up_time: f64,
    pub offending_rho: Option<f64>,
}

/// Samples `rho = rho_b i / samples`, `i = 1..=samples`, and checks that the primal
/// equation from `k_T = 0` exists on all of `[0, T]` for each.
pub fn no_eigenvalue_below_rho_b(spec: &HamiltonianSpec, samples: usize) -> Result<NoSpectrumReport> {
    let h5 = check_h5(spec)?;
    if !h5.holds {
        return Err(Error::Precondition(format!(
            "growth condition fails: {} <= {} < {}",
            h5.lhs, h5.mid, h5.rhs
        )));
    }
    let rho_b = one_dim_preconditions(spec)?;
    if !(rho_b > 0.0) || samples == 0 {
        return Err(Error::Precondition(format!(
            "need rho_b > 0 and at least one sample, got rho_b = {rho_b}, samples = {samples}"
        )));
    }
    let times: Vec<f64> = (1..=samples)
        .into_par_iter()
        .map(|i| {
            let rho = if i == samples { rho_b } else { rho_b * i as f64 / samples as f64 };
            let sys = RiccatiSystem::new(spec, Perturbation::Shifted { rho });
            blow_up_time(&sys, Chart::Primal, spec.horizon(), &Mat::zeros(1, 1)).map(|r| r.value)
        })
        .collect::<Result<_>>()?;
    let offending = times.iter().position(|&t| t >= 0.0);
    Ok(NoSpectrumReport {
        holds: offending.is_none(),
        rho_b,
        samples,
        max_blow_up_time: times.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        offending_rho: offending.map(|i| rho_b * (i + 1) as f64 / samples as f64),
    })
}
