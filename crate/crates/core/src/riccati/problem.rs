//! Right-hand sides and feedback gains of the generalized Riccati system.

use serde::{Deserialize, Serialize};

use crate::coefficients::{Blocks, HamiltonianSpec, Perturbation};
use crate::error::{Error, Result};
use crate::linalg::{self, Mat};

/// Largest condition number accepted for `I - K H33` and `I - K H44`.
pub const MAX_GAIN_CONDITION: f64 = 1e12;

/// Which Riccati equation a matrix belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Chart {
    Primal,
    Dual,
}

impl Chart {
    pub fn other(self) -> Chart {
        match self {
            Chart::Primal => Chart::Dual,
            Chart::Dual => Chart::Primal,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Chart::Primal => "primal",
            Chart::Dual => "dual",
        }
    }
}

impl std::str::FromStr for Chart {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "primal" => Ok(Chart::Primal),
            "dual" => Ok(Chart::Dual),
            other => Err(format!("unknown family '{other}', expected primal or dual")),
        }
    }
}

/// Perturbed Riccati system for one parameter value.
#[derive(Clone, Copy, Debug)]
pub struct RiccatiSystem<'a> {
    pub spec: &'a HamiltonianSpec,
    pub perturbation: Perturbation,
}

/// Feedback gains `z = L x`, `theta = P x` of one chart.
#[derive(Clone, Debug, PartialEq)]
pub struct Gains {
    pub l: Mat,
    pub p: Mat,
}

impl<'a> RiccatiSystem<'a> {
    pub fn new(spec: &'a HamiltonianSpec, perturbation: Perturbation) -> Self {
        RiccatiSystem { spec, perturbation }
    }

    pub fn n(&self) -> usize {
        self.spec.n()
    }

    /// Coefficient blocks of the perturbed system in the given chart.
    pub fn blocks(&self, t: f64, chart: Chart) -> Result<Blocks> {
        let b = self.spec.effective_blocks(t, self.perturbation);
        match chart {
            Chart::Primal => Ok(b),
            Chart::Dual => b.dual().map_err(|block| Error::Singular { block, t }),
        }
    }

    /// The scalar shifted family reduces to closed forms when
    /// `H23 = -H33 H13` and `H24 = -H44 H14`.
    fn reduced(&self, b: &Blocks) -> bool {
        if self.n() != 1 || !matches!(self.perturbation, Perturbation::Shifted { .. }) {
            return false;
        }
        let (h13, h14, h23, h24) = (b.b13[(0, 0)], b.b14[(0, 0)], b.b23[(0, 0)], b.b24[(0, 0)]);
        let (h33, h44) = (b.b33[(0, 0)], b.b44[(0, 0)]);
        let close = |a: f64, c: f64| (a - c).abs() <= 1e-12 * (1.0 + a.abs() + c.abs());
        close(h23, -h33 * h13) && close(h24, -h44 * h14)
    }

    /// Solves `(I - K B33) L = K (B31 + B32 K)` and its `P` analogue.
    pub fn gains(&self, k: &Mat, t: f64, chart: Chart) -> Result<Gains> {
        let primal = self.spec.effective_blocks(t, self.perturbation);
        if self.reduced(&primal) {
            let s = k[(0, 0)];
            return Ok(Gains {
                l: Mat::from_element(1, 1, s * primal.b13[(0, 0)]),
                p: Mat::from_element(1, 1, s * primal.b14[(0, 0)]),
            });
        }
        let b = match chart {
            Chart::Primal => primal,
            Chart::Dual => primal.dual().map_err(|block| Error::Singular { block, t })?,
        };
        general_gains(k, &b, t)
    }

    /// `dK/ds` in backward time `s = T - t`, i.e. `-dK/dt`.
    pub fn rhs(&self, k: &Mat, t: f64, chart: Chart) -> Result<Mat> {
        let primal = self.spec.effective_blocks(t, self.perturbation);
        if self.reduced(&primal) {
            let b = &primal;
            let (h13, h14) = (b.b13[(0, 0)], b.b14[(0, 0)]);
            let linear = 2.0 * b.b12[(0, 0)] + h13 * h13 + h14 * h14;
            let quad = b.b22[(0, 0)] - b.b33[(0, 0)] * h13 * h13 - b.b44[(0, 0)] * h14 * h14;
            let s = k[(0, 0)];
            let v = match chart {
                Chart::Primal => linear * s + b.b11[(0, 0)] + quad * s * s,
                Chart::Dual => -linear * s - b.b11[(0, 0)] * s * s - quad,
            };
            return Ok(Mat::from_element(1, 1, v));
        }
        let b = match chart {
            Chart::Primal => primal,
            Chart::Dual => primal.dual().map_err(|block| Error::Singular { block, t })?,
        };
        general_rhs(k, &b, t)
    }
}

pub(crate) fn general_gains(k: &Mat, b: &Blocks, t: f64) -> Result<Gains> {
    let n = b.n;
    let id = Mat::identity(n, n);
    let solve = |b_diag: &Mat, b_cross: &Mat, b_cross2: &Mat| -> Result<Mat> {
        let a = &id - k * b_diag;
        let (inv, cond) = linalg::inverse_with_cond(&a).ok_or(Error::NearSingular {
            t,
            cond: f64::INFINITY,
        })?;
        if cond > MAX_GAIN_CONDITION {
            return Err(Error::NearSingular { t, cond });
        }
        Ok(inv * k * (b_cross.transpose() + b_cross2.transpose() * k))
    };
    Ok(Gains {
        l: solve(&b.b33, &b.b13, &b.b23)?,
        p: solve(&b.b44, &b.b14, &b.b24)?,
    })
}

/// `K B21 + B12 K + B11 + K B22 K + (K B23 + B13) L + (K B24 + B14) P`, symmetrized.
pub(crate) fn general_rhs(k: &Mat, b: &Blocks, t: f64) -> Result<Mat> {
    let g = general_gains(k, b, t)?;
    let r = k * b.b12.transpose()
        + &b.b12 * k
        + &b.b11
        + k * &b.b22 * k
        + (k * &b.b23 + &b.b13) * g.l
        + (k * &b.b24 + &b.b14) * g.p;
    Ok(linalg::symmetrize(&r))
}

/// Checks `[I - K H33]^T [I - K H33] >= c [H13 + K H23]^T [H13 + K H23]` and the
/// `H44`/`H24` analogue for one matrix; returns the smaller of the two minimal
/// eigenvalues of the differences.
pub fn weaker_condition_slack(k: &Mat, b: &Blocks, c: f64) -> f64 {
    let n = b.n;
    let id = Mat::identity(n, n);
    let side = |b_diag: &Mat, b13: &Mat, b23: &Mat| {
        let left = &id - k * b_diag;
        let right = b13 + k * b23;
        linalg::min_eigenvalue(&(left.transpose() * &left - (right.transpose() * &right) * c))
    };
    side(&b.b33, &b.b13, &b.b23).min(side(&b.b44, &b.b14, &b.b24))
}
