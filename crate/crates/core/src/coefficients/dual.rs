//! Coefficients of the dual (Legendre-transformed) system.

use nalgebra::Matrix4;

use super::blocks::{Blocks, Perturbation, UPPER_BLOCKS};
use super::field::{CoefficientField, HamiltonianSpec};
use super::piecewise::{Piece, PiecewisePoly};
use crate::error::{Error, Result};
use crate::linalg::Mat;

/// Exact dual blocks at `t` for the perturbed system.
pub fn dual_blocks_at(spec: &HamiltonianSpec, t: f64, pert: Perturbation) -> Result<Blocks> {
    spec.effective_blocks(t, pert)
        .dual()
        .map_err(|block| Error::Singular { block, t })
}

/// Dual coefficients refitted on the breakpoint grid of the source spec.
///
/// Each piece is a cubic interpolating the exact dual at four Chebyshev–Lobatto
/// nodes, so breakpoint values are exact and the field stays continuous.
#[derive(Clone, Debug)]
pub struct DualField {
    pub field: CoefficientField,
    pub perturbation: Perturbation,
}

impl DualField {
    pub fn evaluate(&self, t: f64) -> Result<Mat> {
        self.field.evaluate(t)
    }

    pub fn blocks_at(&self, t: f64) -> Blocks {
        self.field.blocks_at(t)
    }
}

/// Dual of the multi-dimensional family with weight `varrho`.
pub fn dual_transform(spec: &HamiltonianSpec, varrho: f64) -> Result<DualField> {
    dual_transform_with(spec, Perturbation::Scaled { varrho })
}

pub fn dual_transform_with(spec: &HamiltonianSpec, pert: Perturbation) -> Result<DualField> {
    let n = spec.n();
    let bp = spec.breakpoints();
    // Lobatto nodes for a cubic, in units of the piece length.
    let nodes: [f64; 4] = [0.0, 0.25, 0.75, 1.0];
    let vander = Matrix4::from_fn(|i, k| nodes[i].powi(k as i32));
    let vinv = vander.try_inverse().expect("Vandermonde on distinct nodes");
    let mut per_block: Vec<Vec<Piece>> = vec![Vec::new(); UPPER_BLOCKS.len()];
    for w in bp.windows(2) {
        let (t0, t1) = (w[0], w[1]);
        let h = t1 - t0;
        let samples = nodes
            .iter()
            .map(|&u| dual_blocks_at(spec, if u == 1.0 { t1 } else { t0 + u * h }, pert))
            .collect::<Result<Vec<_>>>()?;
        for (slot, &(k, l)) in UPPER_BLOCKS.iter().enumerate() {
            let vals: Vec<Mat> = samples.iter().map(|b| b.get(k, l)).collect();
            let coeffs = (0..4)
                .map(|p| {
                    let mut c = Mat::zeros(n, n);
                    for (i, v) in vals.iter().enumerate() {
                        c += v * vinv[(p, i)];
                    }
                    let c = c / h.powi(p as i32);
                    if k == l {
                        (&c + c.transpose()) * 0.5
                    } else {
                        c
                    }
                })
                .collect();
            per_block[slot].push(Piece { t0, t1, coeffs });
        }
    }
    let mut field = CoefficientField::new(n, spec.horizon())?;
    for (slot, pieces) in per_block.into_iter().enumerate() {
        let (k, l) = UPPER_BLOCKS[slot];
        field.set_block(k, l, PiecewisePoly::new(pieces)?)?;
    }
    Ok(DualField {
        field,
        perturbation: pert,
    })
}

/// Spec whose `H` is the dual field, with the same chain and constants.
pub fn dual_spec(spec: &HamiltonianSpec, dual: &DualField) -> Result<HamiltonianSpec> {
    let hbar = CoefficientField::new(spec.n(), spec.horizon())?;
    let mut s = HamiltonianSpec::new(dual.field.clone(), hbar, spec.q.clone(), spec.beta, spec.delta, spec.delta1)?;
    s.initial_state = spec.initial_state;
    Ok(s)
}
