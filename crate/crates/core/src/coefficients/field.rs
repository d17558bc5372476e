use log::warn;

use super::blocks::{Blocks, Perturbation, UPPER_BLOCKS};
use super::piecewise::{merge_breakpoints, PiecewisePoly};
use crate::error::{Error, Result};
use crate::linalg::{self, Mat};

/// Time-dependent block-symmetric coefficient matrix on `[0, T]`.
///
/// Only the nine upper blocks are stored; missing blocks are zero. Lower blocks
/// are transposes, so symmetry holds by construction.
#[derive(Clone, Debug, PartialEq)]
pub struct CoefficientField {
    n: usize,
    horizon: f64,
    blocks: Vec<Option<PiecewisePoly>>,
    breakpoints: Vec<f64>,
}

fn slot(k: usize, l: usize) -> Option<usize> {
    UPPER_BLOCKS.iter().position(|&b| b == (k, l))
}

impl CoefficientField {
    /// All-zero field.
    pub fn new(n: usize, horizon: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::input("n", "state dimension must be positive"));
        }
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(Error::input("T", format!("horizon must be positive, got {horizon}")));
        }
        Ok(CoefficientField {
            n,
            horizon,
            blocks: vec![None; UPPER_BLOCKS.len()],
            breakpoints: vec![0.0, horizon],
        })
    }

    /// Field with constant blocks; entries not listed are zero.
    pub fn constant(n: usize, horizon: f64, entries: &[((usize, usize), Mat)]) -> Result<Self> {
        let mut f = CoefficientField::new(n, horizon)?;
        for ((k, l), m) in entries {
            f.set_block(*k, *l, PiecewisePoly::constant(0.0, horizon, m.clone()))?;
        }
        Ok(f)
    }

    /// Scalar (`n = 1`) constant field.
    pub fn scalar(horizon: f64, entries: &[((usize, usize), f64)]) -> Result<Self> {
        let mats: Vec<_> = entries
            .iter()
            .map(|&(kl, v)| (kl, Mat::from_element(1, 1, v)))
            .collect();
        CoefficientField::constant(1, horizon, &mats)
    }

    pub fn with_block(mut self, k: usize, l: usize, poly: PiecewisePoly) -> Result<Self> {
        self.set_block(k, l, poly)?;
        Ok(self)
    }

    /// Sets block (k,l), 1-based. A lower block is stored as the transpose of its
    /// upper partner. Diagonal blocks must have symmetric coefficients.
    pub fn set_block(&mut self, k: usize, l: usize, poly: PiecewisePoly) -> Result<()> {
        let field = format!("block ({k},{l})");
        if !(1..=4).contains(&k) || !(1..=4).contains(&l) {
            return Err(Error::input(field, "block indices must lie in 1..=4"));
        }
        if (k, l) == (3, 4) || (k, l) == (4, 3) {
            return Err(Error::input(field, "blocks (3,4) and (4,3) are structurally zero"));
        }
        if poly.shape() != (self.n, self.n) {
            return Err(Error::Dimension(format!(
                "{field} is {}x{}, expected {n}x{n}",
                poly.shape().0,
                poly.shape().1,
                n = self.n
            )));
        }
        let tol = 1e-12 * (1.0 + self.horizon);
        if (poly.start() - 0.0).abs() > tol || (poly.end() - self.horizon).abs() > tol {
            return Err(Error::input(
                field,
                format!(
                    "pieces cover [{}, {}] but the horizon is [0, {}]",
                    poly.start(),
                    poly.end(),
                    self.horizon
                ),
            ));
        }
        let poly = if k > l { poly.transpose() } else { poly };
        let (k, l) = (k.min(l), k.max(l));
        if k == l {
            for (i, p) in poly.pieces().iter().enumerate() {
                for c in &p.coeffs {
                    if (c - c.transpose()).amax() > 1e-12 * (1.0 + c.amax()) {
                        return Err(Error::input(
                            format!("{field}, piece {i}"),
                            "diagonal block must be symmetric",
                        ));
                    }
                }
            }
        }
        self.blocks[slot(k, l).expect("upper block")] = Some(poly);
        let lists: Vec<Vec<f64>> = self.blocks.iter().flatten().map(|p| p.breakpoints()).collect();
        self.breakpoints = merge_breakpoints(
            lists.iter().map(|v| v.as_slice()).chain([&[0.0, self.horizon][..]]),
        );
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    /// Union of the breakpoints of all blocks, including 0 and T.
    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    /// Stored polynomial for an upper block, `None` when the block is zero.
    pub fn block(&self, k: usize, l: usize) -> Option<&PiecewisePoly> {
        slot(k, l).and_then(|s| self.blocks[s].as_ref())
    }

    /// Block values at `t`. Outside `[0, T]` the end values are held constant,
    /// which lets integrators run past the origin.
    pub fn blocks_at(&self, t: f64) -> Blocks {
        let mut b = Blocks::zeros(self.n);
        for (i, &(k, l)) in UPPER_BLOCKS.iter().enumerate() {
            if let Some(p) = &self.blocks[i] {
                let mut v = p.eval(t);
                if k == l {
                    v = linalg::symmetrize(&v);
                }
                *b.upper_mut(k, l).unwrap() = v;
            }
        }
        b
    }

    /// Assembled 4n×4n matrix at `t ∈ [0, T]`.
    pub fn evaluate(&self, t: f64) -> Result<Mat> {
        if !(0.0..=self.horizon).contains(&t) {
            return Err(Error::Domain {
                t,
                horizon: self.horizon,
            });
        }
        Ok(self.blocks_at(t).assemble())
    }
}

/// Coefficients, perturbation, Markov generator and condition constants.
#[derive(Clone, Debug)]
pub struct HamiltonianSpec {
    pub h: CoefficientField,
    pub hbar: CoefficientField,
    /// Generator of the Markov chain (rates per unit time).
    pub q: Mat,
    pub beta: f64,
    pub delta: f64,
    pub delta1: f64,
    /// Initial chain state, 0-based.
    pub initial_state: usize,
    breakpoints: Vec<f64>,
}

impl HamiltonianSpec {
    pub fn new(
        h: CoefficientField,
        hbar: CoefficientField,
        q: Mat,
        beta: f64,
        delta: f64,
        delta1: f64,
    ) -> Result<Self> {
        if h.n() != hbar.n() {
            return Err(Error::Dimension(format!(
                "H has n = {} but Hbar has n = {}",
                h.n(),
                hbar.n()
            )));
        }
        if h.horizon() != hbar.horizon() {
            return Err(Error::input(
                "hbar_blocks",
                format!("horizon {} differs from H horizon {}", hbar.horizon(), h.horizon()),
            ));
        }
        if !(beta.is_finite() && beta > 0.0) {
            return Err(Error::input("beta", format!("must be positive, got {beta}")));
        }
        if !(delta.is_finite() && delta1.is_finite() && 0.0 < delta && delta < delta1) {
            return Err(Error::input(
                "delta",
                format!("need 0 < delta < delta1, got delta = {delta}, delta1 = {delta1}"),
            ));
        }
        validate_generator(&q)?;
        let breakpoints = merge_breakpoints([h.breakpoints(), hbar.breakpoints()]);
        Ok(HamiltonianSpec {
            h,
            hbar,
            q,
            beta,
            delta,
            delta1,
            initial_state: 0,
            breakpoints,
        })
    }

    pub fn with_initial_state(mut self, state: usize) -> Result<Self> {
        if state >= self.q.nrows() {
            return Err(Error::input(
                "initial_state",
                format!("state {} outside 1..={}", state + 1, self.q.nrows()),
            ));
        }
        self.initial_state = state;
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.h.n()
    }

    pub fn horizon(&self) -> f64 {
        self.h.horizon()
    }

    /// Union of the breakpoints of `H` and `Hbar`.
    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    /// Blocks of the perturbed system at `t`.
    pub fn effective_blocks(&self, t: f64, pert: Perturbation) -> Blocks {
        match pert {
            Perturbation::Scaled { .. } => pert.apply(&self.h.blocks_at(t), &Blocks::zeros(self.n())),
            Perturbation::Shifted { .. } => pert.apply(&self.h.blocks_at(t), &self.hbar.blocks_at(t)),
        }
    }
}

fn validate_generator(q: &Mat) -> Result<()> {
    if q.nrows() == 0 || !q.is_square() {
        return Err(Error::Dimension(format!(
            "generator Q must be square and nonempty, got {}x{}",
            q.nrows(),
            q.ncols()
        )));
    }
    let m = q.nrows();
    for i in 0..m {
        let row = q.row(i);
        if !row.iter().all(|x| x.is_finite()) {
            return Err(Error::input(format!("Q[{}]", i + 1), "non-finite rate"));
        }
        let scale = 1.0 + row.iter().map(|x| x.abs()).sum::<f64>();
        if row.sum().abs() > 1e-12 * scale {
            return Err(Error::input(
                format!("Q[{}]", i + 1),
                format!("row sum is {}, expected 0", row.sum()),
            ));
        }
        for j in 0..m {
            if i == j {
                continue;
            }
            if q[(i, j)] < 0.0 {
                return Err(Error::input(
                    format!("Q[{}][{}]", i + 1, j + 1),
                    "off-diagonal rates must be nonnegative",
                ));
            }
            if q[(i, j)] == 0.0 {
                warn!(
                    "Q[{}][{}] = 0: strictly positive off-diagonal rates are assumed",
                    i + 1,
                    j + 1
                );
            }
        }
    }
    Ok(())
}
