//! Matrix-valued piecewise polynomials in time.

use crate::error::{Error, Result};
use crate::linalg::Mat;

/// One polynomial piece on `[t0, t1]`; `coeffs[k]` multiplies `(t - t0)^k`.
#[derive(Clone, Debug, PartialEq)]
pub struct Piece {
    pub t0: f64,
    pub t1: f64,
    pub coeffs: Vec<Mat>,
}

impl Piece {
    pub fn constant(t0: f64, t1: f64, value: Mat) -> Self {
        Piece {
            t0,
            t1,
            coeffs: vec![value],
        }
    }

    /// Linear piece interpolating `a` at `t0` and `b` at `t1`.
    pub fn linear(t0: f64, t1: f64, a: Mat, b: Mat) -> Self {
        let slope = (&b - &a) / (t1 - t0);
        Piece {
            t0,
            t1,
            coeffs: vec![a, slope],
        }
    }

    pub fn eval(&self, t: f64) -> Mat {
        let s = t - self.t0;
        let mut acc = self.coeffs[self.coeffs.len() - 1].clone();
        for c in self.coeffs.iter().rev().skip(1) {
            acc *= s;
            acc += c;
        }
        acc
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }
}

/// Continuous piecewise polynomial covering `[start, end]` without gaps.
#[derive(Clone, Debug, PartialEq)]
pub struct PiecewisePoly {
    rows: usize,
    cols: usize,
    pieces: Vec<Piece>,
}

const CONTINUITY_TOL: f64 = 1e-9;

impl PiecewisePoly {
    pub fn new(pieces: Vec<Piece>) -> Result<Self> {
        let first = pieces
            .first()
            .ok_or_else(|| Error::input("pieces", "at least one piece is required"))?;
        let (rows, cols) = first
            .coeffs
            .first()
            .map(|c| c.shape())
            .ok_or_else(|| Error::input("pieces[0].coeffs", "empty coefficient list"))?;
        for (i, p) in pieces.iter().enumerate() {
            if !(p.t0.is_finite() && p.t1.is_finite() && p.t1 > p.t0) {
                return Err(Error::input(
                    format!("pieces[{i}]"),
                    format!("invalid interval [{}, {}]", p.t0, p.t1),
                ));
            }
            if p.coeffs.is_empty() {
                return Err(Error::input(format!("pieces[{i}].coeffs"), "empty coefficient list"));
            }
            for (k, c) in p.coeffs.iter().enumerate() {
                if c.shape() != (rows, cols) {
                    return Err(Error::Dimension(format!(
                        "pieces[{i}].coeffs[{k}] is {}x{}, expected {rows}x{cols}",
                        c.nrows(),
                        c.ncols()
                    )));
                }
                if !c.iter().all(|x| x.is_finite()) {
                    return Err(Error::input(
                        format!("pieces[{i}].coeffs[{k}]"),
                        "non-finite coefficient",
                    ));
                }
            }
            if i > 0 {
                let prev = &pieces[i - 1];
                if (p.t0 - prev.t1).abs() > 1e-12 * (1.0 + p.t0.abs()) {
                    return Err(Error::input(
                        format!("pieces[{i}].t0"),
                        format!("gap or overlap: previous piece ends at {}", prev.t1),
                    ));
                }
                let left = prev.eval(prev.t1);
                let right = p.eval(p.t0);
                let scale = 1.0 + left.amax().max(right.amax());
                if (&left - &right).amax() > CONTINUITY_TOL * scale {
                    return Err(Error::input(
                        format!("pieces[{i}]"),
                        format!("discontinuous at t = {}", p.t0),
                    ));
                }
            }
        }
        Ok(PiecewisePoly { rows, cols, pieces })
    }

    pub fn constant(t0: f64, t1: f64, value: Mat) -> Self {
        PiecewisePoly {
            rows: value.nrows(),
            cols: value.ncols(),
            pieces: vec![Piece::constant(t0, t1, value)],
        }
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn start(&self) -> f64 {
        self.pieces[0].t0
    }

    pub fn end(&self) -> f64 {
        self.pieces[self.pieces.len() - 1].t1
    }

    pub fn pieces(&self) -> &[Piece] {
        &self.pieces
    }

    pub fn breakpoints(&self) -> Vec<f64> {
        let mut out: Vec<f64> = self.pieces.iter().map(|p| p.t0).collect();
        out.push(self.end());
        out
    }

    /// Evaluates at `t`, extending by the end values outside the covered interval.
    pub fn eval(&self, t: f64) -> Mat {
        let t = t.clamp(self.start(), self.end());
        let idx = self.pieces.partition_point(|p| p.t1 < t);
        self.pieces[idx.min(self.pieces.len() - 1)].eval(t)
    }

    pub fn transpose(&self) -> Self {
        PiecewisePoly {
            rows: self.cols,
            cols: self.rows,
            pieces: self
                .pieces
                .iter()
                .map(|p| Piece {
                    t0: p.t0,
                    t1: p.t1,
                    coeffs: p.coeffs.iter().map(|c| c.transpose()).collect(),
                })
                .collect(),
        }
    }
}

/// Sorted union of breakpoint lists, merging values closer than `1e-12` relative.
pub fn merge_breakpoints<'a>(lists: impl IntoIterator<Item = &'a [f64]>) -> Vec<f64> {
    let mut all: Vec<f64> = lists.into_iter().flatten().copied().collect();
    all.sort_by(|a, b| a.total_cmp(b));
    let mut out: Vec<f64> = Vec::with_capacity(all.len());
    for t in all {
        match out.last() {
            Some(&last) if (t - last).abs() <= 1e-12 * (1.0 + t.abs()) => {}
            _ => out.push(t),
        }
    }
    out
}
