//! Pointwise block values of a Hamiltonian coefficient matrix.

use serde::{Deserialize, Serialize};

use crate::linalg::{self, Mat};

/// Upper-triangular blocks of the 4n×4n coefficient matrix at one time.
///
/// Lower blocks are transposes; blocks (3,4) and (4,3) are zero.
#[derive(Clone, Debug, PartialEq)]
pub struct Blocks {
    pub n: usize,
    pub b11: Mat,
    pub b12: Mat,
    pub b13: Mat,
    pub b14: Mat,
    pub b22: Mat,
    pub b23: Mat,
    pub b24: Mat,
    pub b33: Mat,
    pub b44: Mat,
}

/// Indices of the stored (upper) blocks.
pub const UPPER_BLOCKS: [(usize, usize); 9] = [
    (1, 1),
    (1, 2),
    (1, 3),
    (1, 4),
    (2, 2),
    (2, 3),
    (2, 4),
    (3, 3),
    (4, 4),
];

/// How the perturbation parameter enters the Riccati equation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "pattern", rename_all = "lowercase")]
pub enum Perturbation {
    /// Multi-dimensional family: blocks (1,3),(1,4),(2,2),(2,3),(2,4) and their
    /// transposes are multiplied by `varrho = 1 - rho`.
    Scaled { varrho: f64 },
    /// One-dimensional family: `H22` is replaced by `H22 - rho * Hbar22`.
    Shifted { rho: f64 },
}

impl Perturbation {
    pub fn parameter(&self) -> f64 {
        match *self {
            Perturbation::Scaled { varrho } => varrho,
            Perturbation::Shifted { rho } => rho,
        }
    }

    pub fn with_parameter(&self, p: f64) -> Self {
        match self {
            Perturbation::Scaled { .. } => Perturbation::Scaled { varrho: p },
            Perturbation::Shifted { .. } => Perturbation::Shifted { rho: p },
        }
    }

    pub fn apply(&self, h: &Blocks, hbar: &Blocks) -> Blocks {
        match *self {
            Perturbation::Scaled { varrho } => h.scaled(varrho),
            Perturbation::Shifted { rho } => {
                let mut out = h.clone();
                out.b22 = &h.b22 - &hbar.b22 * rho;
                out
            }
        }
    }
}

impl Blocks {
    pub fn zeros(n: usize) -> Self {
        let z = Mat::zeros(n, n);
        Blocks {
            n,
            b11: z.clone(),
            b12: z.clone(),
            b13: z.clone(),
            b14: z.clone(),
            b22: z.clone(),
            b23: z.clone(),
            b24: z.clone(),
            b33: z.clone(),
            b44: z,
        }
    }

    pub fn upper_mut(&mut self, k: usize, l: usize) -> Option<&mut Mat> {
        Some(match (k, l) {
            (1, 1) => &mut self.b11,
            (1, 2) => &mut self.b12,
            (1, 3) => &mut self.b13,
            (1, 4) => &mut self.b14,
            (2, 2) => &mut self.b22,
            (2, 3) => &mut self.b23,
            (2, 4) => &mut self.b24,
            (3, 3) => &mut self.b33,
            (4, 4) => &mut self.b44,
            _ => return None,
        })
    }

    /// Block (k,l), 1-based, with lower blocks obtained by transposition.
    pub fn get(&self, k: usize, l: usize) -> Mat {
        match (k, l) {
            (3, 4) | (4, 3) => Mat::zeros(self.n, self.n),
            (k, l) if k > l => self.get(l, k).transpose(),
            (1, 1) => self.b11.clone(),
            (1, 2) => self.b12.clone(),
            (1, 3) => self.b13.clone(),
            (1, 4) => self.b14.clone(),
            (2, 2) => self.b22.clone(),
            (2, 3) => self.b23.clone(),
            (2, 4) => self.b24.clone(),
            (3, 3) => self.b33.clone(),
            (4, 4) => self.b44.clone(),
            _ => panic!("block index ({k},{l}) out of range"),
        }
    }

    pub fn assemble(&self) -> Mat {
        let n = self.n;
        let mut m = Mat::zeros(4 * n, 4 * n);
        for k in 1..=4 {
            for l in 1..=4 {
                m.view_mut(((k - 1) * n, (l - 1) * n), (n, n))
                    .copy_from(&self.get(k, l));
            }
        }
        m
    }

    pub fn from_assembled(m: &Mat, n: usize) -> Self {
        let mut b = Blocks::zeros(n);
        for (k, l) in UPPER_BLOCKS {
            *b.upper_mut(k, l).unwrap() = m.view(((k - 1) * n, (l - 1) * n), (n, n)).into_owned();
        }
        b
    }

    pub fn scaled(&self, varrho: f64) -> Self {
        let mut out = self.clone();
        out.b13 *= varrho;
        out.b14 *= varrho;
        out.b22 *= varrho;
        out.b23 *= varrho;
        out.b24 *= varrho;
        out
    }

    pub fn add_scaled(&self, other: &Blocks, s: f64) -> Self {
        Blocks {
            n: self.n,
            b11: &self.b11 + &other.b11 * s,
            b12: &self.b12 + &other.b12 * s,
            b13: &self.b13 + &other.b13 * s,
            b14: &self.b14 + &other.b14 * s,
            b22: &self.b22 + &other.b22 * s,
            b23: &self.b23 + &other.b23 * s,
            b24: &self.b24 + &other.b24 * s,
            b33: &self.b33 + &other.b33 * s,
            b44: &self.b44 + &other.b44 * s,
        }
    }

    /// Coefficients of the dual (Legendre-transformed) system at `varrho = 1`.
    ///
    /// Returns `Err("H33")` or `Err("H44")` when that block is singular.
    pub fn dual(&self) -> Result<Blocks, &'static str> {
        let i33 = self.b33.clone().try_inverse().ok_or("H33")?;
        let i44 = self.b44.clone().try_inverse().ok_or("H44")?;
        if !linalg::is_finite(&i33) {
            return Err("H33");
        }
        if !linalg::is_finite(&i44) {
            return Err("H44");
        }
        let h21 = self.b12.transpose();
        let h31 = self.b13.transpose();
        let h32 = self.b23.transpose();
        let h41 = self.b14.transpose();
        let h42 = self.b24.transpose();
        let a23 = &self.b23 * &i33;
        let a24 = &self.b24 * &i44;
        let a13 = &self.b13 * &i33;
        let a14 = &self.b14 * &i44;
        Ok(Blocks {
            n: self.n,
            b11: linalg::symmetrize(&(&a23 * &h32 + &a24 * &h42 - &self.b22)),
            b12: &a23 * &h31 + &a24 * &h41 - h21,
            b22: linalg::symmetrize(&(&a13 * &h31 + &a14 * &h41 - &self.b11)),
            b13: -a23,
            b14: -a24,
            b23: -a13,
            b24: -a14,
            b33: linalg::symmetrize(&i33),
            b44: linalg::symmetrize(&i44),
        })
    }

    /// Symmetric part of the signed matrix with row-1 blocks negated.
    ///
    /// The row-1 cross terms cancel, leaving `diag(-H11, lower 3x3 block)`.
    pub fn signed_symmetric(&self) -> Mat {
        let mut m = self.assemble();
        let n = self.n;
        m.rows_mut(0, n).neg_mut();
        linalg::symmetrize(&m)
    }
}
