//! Alternating primal/dual blow-up chains of the one-dimensional family and the
//! eigenvalue sequence they certify.

use serde::Serialize;

use super::record::{chain_schedule, ChainLink, EigenvalueRecord};
use crate::coefficients::{check_h4, compute_rho_b, HamiltonianSpec, Perturbation};
use crate::error::{Error, Result};
use crate::riccati::{blow_up_time_with, Chart, IntegrationOptions, RiccatiSystem};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpectrumOptions {
    /// Bisection tolerance in `rho`.
    pub tol: f64,
    pub max_links: usize,
    pub integration: IntegrationOptions,
}

impl Default for SpectrumOptions {
    fn default() -> Self {
        SpectrumOptions {
            tol: 1e-8,
            max_links: 64,
            integration: IntegrationOptions::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BlowUpChain {
    pub rho: f64,
    pub links: Vec<ChainLink>,
    /// A link found no blow-up on its search window, so the chain ended above zero.
    pub truncated: bool,
}

impl BlowUpChain {
    /// Time of link `j` (1-based), or `-inf` when the chain ends before it.
    pub fn link_time(&self, j: usize) -> f64 {
        self.links.get(j - 1).map_or(f64::NEG_INFINITY, |l| l.t)
    }
}

/// Checks the structural conditions of the one-dimensional family and returns `rho_b`.
pub fn one_dim_preconditions(spec: &HamiltonianSpec) -> Result<f64> {
    let h4 = check_h4(spec)?;
    if !h4.passed {
        return Err(Error::Assumption(format!(
            "structural conditions fail at t = {}: {}",
            h4.first_violation_t.unwrap_or(f64::NAN),
            h4.violation.unwrap_or_default()
        )));
    }
    compute_rho_b(spec)
}

/// Blow-up chain at `rho`: primal from `k_T = 0`, then the dual from zero at the
/// first blow-up, and so on, until a link drops to zero or below.
pub fn blowup_chain_1d(spec: &HamiltonianSpec, rho: f64, max_links: usize) -> Result<BlowUpChain> {
    let rho_b = one_dim_preconditions(spec)?;
    if !(rho > rho_b) {
        return Err(Error::Precondition(format!("rho = {rho} must exceed rho_b = {rho_b}")));
    }
    chain_links(spec, rho, max_links, &IntegrationOptions::default())
}

pub(crate) fn chain_links(
    spec: &HamiltonianSpec,
    rho: f64,
    max_links: usize,
    opts: &IntegrationOptions,
) -> Result<BlowUpChain> {
    let sys = RiccatiSystem::new(spec, Perturbation::Shifted { rho });
    let zero = crate::linalg::Mat::zeros(1, 1);
    let mut links = Vec::new();
    let mut terminal = spec.horizon();
    let mut family = Chart::Primal;
    let mut truncated = false;
    while links.len() < max_links {
        let r = blow_up_time_with(&sys, family, terminal, &zero, opts)?;
        if !r.is_blow_up() {
            truncated = true;
            break;
        }
        links.push(ChainLink { t: r.value, family });
        if r.value <= 0.0 {
            break;
        }
        terminal = r.value;
        family = family.other();
    }
    Ok(BlowUpChain { rho, links, truncated })
}

/// Index of the chain link whose zero crossing gives eigenvalue `m`, after
/// skipping primal links already above zero just to the right of `rho_b`.
fn target_link(spec: &HamiltonianSpec, rho_b: f64, m: usize, opts: &SpectrumOptions) -> Result<(usize, f64)> {
    let rho_lo = rho_b + 1e-9 * (1.0 + rho_b.abs());
    let base = chain_links(spec, rho_lo, opts.max_links, &opts.integration)?;
    let offset = base
        .links
        .iter()
        .filter(|l| l.family == Chart::Primal && l.t > 0.0)
        .count();
    let j = 2 * (offset + m) - 1;
    if j > opts.max_links {
        return Err(Error::Budget {
            needed: m,
            budget: opts.max_links,
        });
    }
    Ok((j, rho_lo))
}

/// The `m`-th eigenvalue (1-based) of the one-dimensional family.
pub fn eigenvalue_1d(spec: &HamiltonianSpec, m: usize, opts: &SpectrumOptions) -> Result<EigenvalueRecord> {
    if m == 0 {
        return Err(Error::input("m", "eigenvalue index starts at 1"));
    }
    let rho_b = one_dim_preconditions(spec)?;
    let (j, rho_lo) = target_link(spec, rho_b, m, opts)?;
    let above = |rho: f64| -> Result<bool> {
        Ok(chain_links(spec, rho, j, &opts.integration)?.link_time(j) >= 0.0)
    };

    // Geometric expansion from rho_b + 1; the link tends to T as rho grows.
    let mut lo = rho_lo;
    let mut step = 1.0;
    let mut hi = rho_b + step;
    while !above(hi)? {
        lo = hi;
        step *= 2.0;
        hi = rho_b + step;
        if step > 1e12 {
            return Err(Error::Bracket {
                lo: rho_lo,
                hi,
                f_lo: f64::NEG_INFINITY,
                f_hi: f64::NEG_INFINITY,
            });
        }
    }
    while hi - lo > opts.tol {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if above(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let rho = 0.5 * (lo + hi);
    let chain = chain_links(spec, rho, j, &opts.integration)?;
    if chain.links.len() != j {
        return Err(Error::Inconsistent(format!(
            "chain at rho = {rho} has {} links, expected {j}",
            chain.links.len()
        )));
    }
    Ok(EigenvalueRecord {
        m,
        rho,
        perturbation: Perturbation::Shifted { rho },
        schedule: chain_schedule(spec.horizon(), &chain.links),
        chain: chain.links,
        kernel_basis: vec![vec![1.0]],
        tol: hi - lo,
    })
}

/// Eigenvalues `1..=count`, computed independently in parallel.
pub fn eigenvalues_1d(spec: &HamiltonianSpec, count: usize, opts: &SpectrumOptions) -> Result<Vec<EigenvalueRecord>> {
    use rayon::prelude::*;
    (1..=count).into_par_iter().map(|m| eigenvalue_1d(spec, m, opts)).collect()
}
