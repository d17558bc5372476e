//! Jump counts and compensated jump-martingale increments on a time grid.

use super::markov::MarkovChainPath;
use crate::error::{Error, Result};
use crate::linalg::Mat;

/// Per-step increments aligned to `grid`; entry `i` covers `(grid[i], grid[i + 1]]`.
#[derive(Clone, Debug, PartialEq)]
pub struct CompensatedJumpIncrements {
    pub grid: Vec<f64>,
    pub dv: Vec<u32>,
    /// Jump rate `-q_aa` of the state at the start of the step.
    pub r: Vec<f64>,
    /// Exact compensator `int r_s ds` over the step.
    pub compensator: Vec<f64>,
    pub dv_tilde: Vec<f64>,
}

impl CompensatedJumpIncrements {
    /// Value of the compensated martingale at the last grid time.
    pub fn terminal(&self) -> f64 {
        let mut s = crate::linalg::CompensatedSum::default();
        for d in &self.dv_tilde {
            s.add(*d);
        }
        s.value()
    }
}

/// `int_a^b r(alpha_s) ds` with `r = -q_aa`, exact for the piecewise-constant path.
pub fn compensator(path: &MarkovChainPath, q: &Mat, a: f64, b: f64) -> f64 {
    let rate = |s: usize| -q[(s, s)];
    let mut total = 0.0;
    let mut t = a;
    let mut i = path.jump_times.partition_point(|&s| s <= a);
    while i < path.jump_times.len() && path.jump_times[i] < b {
        total += rate(path.states[i]) * (path.jump_times[i] - t);
        t = path.jump_times[i];
        i += 1;
    }
    total + rate(path.states[i]) * (b - t)
}

/// Bins jumps into grid steps. Several jumps may land in one step.
pub fn compensated_increments(path: &MarkovChainPath, q: &Mat, grid: &[f64]) -> Result<CompensatedJumpIncrements> {
    if grid.len() < 2 || grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::input("grid", "need an increasing grid with at least two points"));
    }
    if grid[0] > 0.0 || *grid.last().unwrap() < path.horizon {
        return Err(Error::input(
            "grid",
            format!("grid [{}, {}] does not cover [0, {}]", grid[0], grid.last().unwrap(), path.horizon),
        ));
    }
    let steps = grid.len() - 1;
    let mut out = CompensatedJumpIncrements {
        grid: grid.to_vec(),
        dv: vec![0; steps],
        r: Vec::with_capacity(steps),
        compensator: Vec::with_capacity(steps),
        dv_tilde: Vec::with_capacity(steps),
    };
    for &tj in &path.jump_times {
        let i = grid.partition_point(|&g| g < tj).saturating_sub(1).min(steps - 1);
        out.dv[i] += 1;
    }
    for i in 0..steps {
        let s = path.state_at(grid[i]);
        out.r.push(-q[(s, s)]);
        let c = compensator(path, q, grid[i], grid[i + 1]);
        out.compensator.push(c);
        out.dv_tilde.push(out.dv[i] as f64 - c);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q() -> Mat {
        Mat::from_row_slice(2, 2, &[-1.0, 1.0, 1.0, -1.0])
    }

    fn grid(n: usize) -> Vec<f64> {
        (0..=n).map(|i| i as f64 / n as f64).collect()
    }

    #[test]
    fn no_jumps_gives_pure_drift() {
        let p = MarkovChainPath {
            horizon: 1.0,
            jump_times: vec![],
            states: vec![0],
        };
        let inc = compensated_increments(&p, &q(), &grid(10)).unwrap();
        assert!((inc.terminal() + 1.0).abs() < 1e-14);
    }

    #[test]
    fn one_jump_cancels_compensator() {
        let p = MarkovChainPath {
            horizon: 1.0,
            jump_times: vec![0.5],
            states: vec![0, 1],
        };
        let inc = compensated_increments(&p, &q(), &grid(7)).unwrap();
        assert_eq!(inc.dv.iter().sum::<u32>(), 1);
        assert!(inc.terminal().abs() < 1e-14);
    }

    #[test]
    fn coarse_grid_collects_several_jumps() {
        let p = MarkovChainPath {
            horizon: 1.0,
            jump_times: vec![0.1, 0.2, 0.3],
            states: vec![0, 1, 0, 1],
        };
        let inc = compensated_increments(&p, &q(), &grid(2)).unwrap();
        assert_eq!(inc.dv, vec![3, 0]);
    }

    #[test]
    fn compensator_uses_state_dependent_rates() {
        let q = Mat::from_row_slice(2, 2, &[-2.0, 2.0, 1.0, -1.0]);
        let p = MarkovChainPath {
            horizon: 1.0,
            jump_times: vec![0.25],
            states: vec![0, 1],
        };
        assert!((compensator(&p, &q, 0.0, 1.0) - (0.5 + 0.75)).abs() < 1e-15);
        assert!((compensator(&p, &q, 0.5, 1.0) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn grid_must_cover_horizon() {
        let p = MarkovChainPath {
            horizon: 2.0,
            jump_times: vec![],
            states: vec![0],
        };
        assert!(compensated_increments(&p, &q(), &grid(4)).is_err());
    }
}
