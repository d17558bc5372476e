//! Small dense linear-algebra helpers shared by the solvers.

use nalgebra::DMatrix;

pub type Mat = DMatrix<f64>;

pub fn symmetrize(m: &Mat) -> Mat {
    (m + m.transpose()) * 0.5
}

/// Eigenvalues of a symmetric matrix in ascending order.
pub fn sym_eigenvalues(m: &Mat) -> Vec<f64> {
    if m.nrows() == 1 {
        return vec![m[(0, 0)]];
    }
    let mut ev: Vec<f64> = symmetrize(m).symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(|a, b| a.total_cmp(b));
    ev
}

/// Eigenpairs of a symmetric matrix, sorted by ascending eigenvalue.
pub fn sym_eigen(m: &Mat) -> (Vec<f64>, Mat) {
    let eig = symmetrize(m).symmetric_eigen();
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let n = m.nrows();
    let mut vecs = Mat::zeros(n, n);
    for (j, &i) in order.iter().enumerate() {
        vecs.set_column(j, &eig.eigenvectors.column(i));
    }
    (order.iter().map(|&i| eig.eigenvalues[i]).collect(), vecs)
}

pub fn min_eigenvalue(m: &Mat) -> f64 {
    sym_eigenvalues(m)[0]
}

pub fn max_eigenvalue(m: &Mat) -> f64 {
    *sym_eigenvalues(m).last().unwrap()
}

/// Spectral norm. Exact for symmetric input via eigenvalues, SVD otherwise.
pub fn spectral_norm(m: &Mat) -> f64 {
    if m.nrows() == 1 && m.ncols() == 1 {
        return m[(0, 0)].abs();
    }
    if m.is_square() && (m - m.transpose()).amax() <= 1e-14 * (1.0 + m.amax()) {
        let ev = sym_eigenvalues(m);
        return ev[0].abs().max(ev[ev.len() - 1].abs());
    }
    m.singular_values().max()
}

/// Smallest eigenvalue in absolute value of a symmetric matrix.
pub fn min_abs_eigenvalue(m: &Mat) -> f64 {
    sym_eigenvalues(m)
        .into_iter()
        .map(f64::abs)
        .fold(f64::INFINITY, f64::min)
}

pub fn one_norm(m: &Mat) -> f64 {
    (0..m.ncols())
        .map(|j| m.column(j).iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Inverse together with the 1-norm condition number; `None` when singular.
pub fn inverse_with_cond(m: &Mat) -> Option<(Mat, f64)> {
    let inv = m.clone().try_inverse()?;
    if !inv.iter().all(|x| x.is_finite()) {
        return None;
    }
    let cond = one_norm(m) * one_norm(&inv);
    Some((inv, cond))
}

pub fn is_finite(m: &Mat) -> bool {
    m.iter().all(|x| x.is_finite())
}

/// Neumaier-compensated running sum.
#[derive(Clone, Copy, Debug, Default)]
pub struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.carry
    }
}
