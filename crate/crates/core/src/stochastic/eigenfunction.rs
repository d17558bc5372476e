//! Monte Carlo construction of eigenfunctions from a gain schedule.
//!
//! On each schedule interval the chart state `(x_c, y_c)` solves the closed-loop
//! forward equation with `z_c = L x_c-`, `theta_c = P x_c-`, while `y_c` follows
//! its own backward-equation dynamics. The gap `y_c - K x_c` is therefore a pure
//! discretization residual. At interval boundaries the state is handed over by
//! swapping `(x, y)`, which is exact.

use nalgebra::DVector;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use super::markov::{path_rng, sample_chain, MarkovChainPath};
use crate::coefficients::HamiltonianSpec;
use crate::error::{Error, Result};
use crate::linalg::{CompensatedSum, Mat};
use crate::riccati::Chart;
use crate::spectrum::{EigenvalueRecord, GainSchedule};

type Vector = DVector<f64>;

#[derive(Clone, Debug, PartialEq)]
pub struct SimulationOptions {
    pub n_paths: usize,
    pub seed: u64,
    /// Target step; the grid uses `ceil(T / dt)` equal steps plus the schedule boundaries.
    pub dt: f64,
    /// Number of leading paths whose full node values are kept.
    pub keep_paths: usize,
    /// Start vector in the chart of the interval at time zero; defaults to the
    /// first kernel vector of the record.
    pub start: Option<Vec<f64>>,
}

impl Default for SimulationOptions {
    fn default() -> Self {
        SimulationOptions {
            n_paths: 1000,
            seed: 0,
            dt: 0.0,
            keep_paths: 0,
            start: None,
        }
    }
}

/// Coefficients of one node in the chart of one schedule interval.
#[derive(Clone, Debug)]
struct ChartCoefficients {
    chart: Chart,
    k: Mat,
    /// Drift, diffusion and jump matrices of the closed-loop forward equation.
    drift: Mat,
    diffusion: Mat,
    jump: Mat,
    /// `y` drift is `-(y_x x + b12 y)`.
    y_x: Mat,
    b12: Mat,
    l: Mat,
    p: Mat,
    /// Primal `z = z_x x_c + z_y y_c` and `theta = t_x x_c + t_y y_c`.
    z_x: Mat,
    z_y: Mat,
    t_x: Mat,
    t_y: Mat,
}

/// Precomputed grid and coefficients shared by all paths.
#[derive(Clone, Debug)]
pub struct SimulationPlan {
    pub grid: Vec<f64>,
    /// Schedule interval used on step `i` (from `grid[i]` to `grid[i + 1]`).
    pub step_segment: Vec<usize>,
    /// Coefficients at the start of each step.
    start: Vec<ChartCoefficients>,
    /// Riccati value at the end of each step, in that step's chart.
    end_k: Vec<Mat>,
    /// Coefficients at the final time for recording `z`, `theta`.
    terminal: ChartCoefficients,
    q: Mat,
    initial_state: usize,
    horizon: f64,
    n: usize,
}

fn coefficients(schedule: &GainSchedule, seg: usize, t: f64) -> Result<ChartCoefficients> {
    let chart = schedule.segments[seg].interval.chart;
    let (k, g) = schedule.gains_at(seg, t)?;
    let b = schedule.system.blocks(t, chart)?;
    let drift = b.b12.transpose() + &b.b22 * &k + &b.b23 * &g.l + &b.b24 * &g.p;
    let diffusion = b.b13.transpose() + b.b23.transpose() * &k + &b.b33 * &g.l;
    let jump = b.b14.transpose() + b.b24.transpose() * &k + &b.b44 * &g.p;
    let y_x = &b.b11 + &b.b13 * &g.l + &b.b14 * &g.p;
    let n = k.nrows();
    let (z_x, z_y, t_x, t_y) = match chart {
        Chart::Primal => (g.l.clone(), Mat::zeros(n, n), g.p.clone(), Mat::zeros(n, n)),
        Chart::Dual => {
            // Recover primal z, theta from z~ = H31 x + H32 y + H33 z with x = y~, y = x~.
            let h = schedule.system.blocks(t, Chart::Primal)?;
            let h33i = h.b33.clone().try_inverse().ok_or(Error::Singular { block: "H33", t })?;
            let h44i = h.b44.clone().try_inverse().ok_or(Error::Singular { block: "H44", t })?;
            (
                &h33i * (&g.l - h.b23.transpose()),
                -&h33i * h.b13.transpose(),
                &h44i * (&g.p - h.b24.transpose()),
                -&h44i * h.b14.transpose(),
            )
        }
    };
    Ok(ChartCoefficients {
        chart,
        k,
        drift,
        diffusion,
        jump,
        y_x,
        b12: b.b12.clone(),
        l: g.l,
        p: g.p,
        z_x,
        z_y,
        t_x,
        t_y,
    })
}

impl SimulationPlan {
    pub fn new(spec: &HamiltonianSpec, schedule: &GainSchedule, dt: f64) -> Result<Self> {
        let horizon = spec.horizon();
        if !(dt > 0.0 && dt <= horizon) {
            return Err(Error::input("dt", format!("must lie in (0, {horizon}], got {dt}")));
        }
        if schedule.segments.last().map(|s| s.interval.t_lo) != Some(0.0)
            || schedule.segments.first().map(|s| s.interval.t_hi) != Some(horizon)
        {
            return Err(Error::Schedule("schedule does not cover [0, T]".into()));
        }
        let steps = (horizon / dt - 1e-9).ceil().max(1.0) as usize;
        let mut grid: Vec<f64> = (0..=steps).map(|i| horizon * i as f64 / steps as f64).collect();
        let h = horizon / steps as f64;
        for seg in &schedule.segments[..schedule.segments.len() - 1] {
            let b = seg.interval.t_lo;
            let i = grid.partition_point(|&g| g < b);
            if (grid[i] - b).abs() <= 1e-9 * h {
                grid[i] = b;
            } else if i > 0 && (b - grid[i - 1]).abs() <= 1e-9 * h {
                grid[i - 1] = b;
            } else {
                grid.insert(i, b);
            }
        }
        let mut step_segment = Vec::with_capacity(grid.len() - 1);
        let mut start = Vec::with_capacity(grid.len() - 1);
        let mut end_k = Vec::with_capacity(grid.len() - 1);
        for w in grid.windows(2) {
            let seg = schedule.segment_index(0.5 * (w[0] + w[1]));
            step_segment.push(seg);
            start.push(coefficients(schedule, seg, w[0])?);
            end_k.push(schedule.gains_at(seg, w[1])?.0);
        }
        let terminal = coefficients(schedule, *step_segment.last().unwrap(), horizon)?;
        if terminal.chart != Chart::Primal {
            return Err(Error::Schedule("schedule must end in the primal chart at T".into()));
        }
        Ok(SimulationPlan {
            grid,
            step_segment,
            start,
            end_k,
            terminal,
            q: spec.q.clone(),
            initial_state: spec.initial_state,
            horizon,
            n: spec.n(),
        })
    }

    pub fn steps(&self) -> usize {
        self.grid.len() - 1
    }
}

/// Residual summary of one path.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PathResiduals {
    pub path_id: u64,
    pub x0_norm: f64,
    pub y_t_norm: f64,
    pub sup_x_norm: f64,
    /// Largest `|y_c - K x_c|` over the nodes, in the chart of each interval.
    pub decouple_resid: f64,
}

/// Node values of one simulated path in primal variables.
#[derive(Clone, Debug, PartialEq)]
pub struct EigenfunctionPath {
    pub path_id: u64,
    pub times: Vec<f64>,
    pub states: Vec<usize>,
    /// Schedule interval that supplied the gains at each node.
    pub segments: Vec<usize>,
    pub charts: Vec<Chart>,
    pub x: Vec<Vector>,
    pub y: Vec<Vector>,
    pub z: Vec<Vector>,
    pub theta: Vec<Vector>,
    /// Primal `(x, y)` on both sides of every chart change.
    pub handoffs: Vec<Handoff>,
    pub residuals: PathResiduals,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Handoff {
    pub t: f64,
    pub before: (Vector, Vector),
    pub after: (Vector, Vector),
}

struct Recorder {
    keep: bool,
    path: EigenfunctionPath,
}

impl Recorder {
    fn push(&mut self, t: f64, state: usize, seg: usize, c: &ChartCoefficients, xc: &Vector, yc: &Vector) {
        if !self.keep {
            return;
        }
        let (x, y) = to_primal(c.chart, xc, yc);
        let p = &mut self.path;
        p.times.push(t);
        p.states.push(state);
        p.segments.push(seg);
        p.charts.push(c.chart);
        p.z.push(&c.z_x * xc + &c.z_y * yc);
        p.theta.push(&c.t_x * xc + &c.t_y * yc);
        p.x.push(x);
        p.y.push(y);
    }
}

fn to_primal(chart: Chart, xc: &Vector, yc: &Vector) -> (Vector, Vector) {
    match chart {
        Chart::Primal => (xc.clone(), yc.clone()),
        Chart::Dual => (yc.clone(), xc.clone()),
    }
}

/// One Euler–Maruyama substep of length `h` with Brownian increment `db` and
/// compensator `comp = int r ds`.
fn euler(c: &ChartCoefficients, xc: &Vector, yc: &Vector, h: f64, db: f64, comp: f64) -> (Vector, Vector) {
    let jx = &c.jump * xc;
    let px = &c.p * xc;
    let x = xc + (&c.drift * xc) * h + (&c.diffusion * xc) * db - &jx * comp;
    let y = yc - (&c.y_x * xc + &c.b12 * yc) * h + (&c.l * xc) * db - &px * comp;
    (x, y)
}

/// Simulates path `path_id` of the plan from the chart start vector `start`.
pub fn simulate_path(plan: &SimulationPlan, start: &Vector, seed: u64, path_id: u64, keep: bool) -> Result<EigenfunctionPath> {
    let mut rng = path_rng(seed, path_id);
    let chain = sample_chain(&plan.q, plan.initial_state, plan.horizon, &mut rng)?;
    simulate_with_chain(plan, start, &chain, &mut rng, path_id, keep)
}

fn simulate_with_chain<R: Rng>(
    plan: &SimulationPlan,
    start: &Vector,
    chain: &MarkovChainPath,
    rng: &mut R,
    path_id: u64,
    keep: bool,
) -> Result<EigenfunctionPath> {
    let n = plan.n;
    let first = &plan.start[0];
    // Dual start: x~ = v, y~ = 0 so that the primal x vanishes at zero.
    // Primal start: x = v, y = K x.
    let (mut xc, mut yc) = match first.chart {
        Chart::Dual => (start.clone(), Vector::zeros(n)),
        Chart::Primal => (start.clone(), &first.k * start),
    };
    let mut rec = Recorder {
        keep,
        path: EigenfunctionPath {
            path_id,
            times: Vec::new(),
            states: Vec::new(),
            segments: Vec::new(),
            charts: Vec::new(),
            x: Vec::new(),
            y: Vec::new(),
            z: Vec::new(),
            theta: Vec::new(),
            handoffs: Vec::new(),
            residuals: PathResiduals {
                path_id,
                x0_norm: 0.0,
                y_t_norm: 0.0,
                sup_x_norm: 0.0,
                decouple_resid: 0.0,
            },
        },
    };
    let x0 = to_primal(first.chart, &xc, &yc).0;
    let mut sup_x = x0.norm();
    let mut decouple = (&yc - &first.k * &xc).norm();
    rec.push(0.0, chain.state_at(0.0), plan.step_segment[0], first, &xc, &yc);
    let mut jump_idx = 0;

    for i in 0..plan.steps() {
        let c = &plan.start[i];
        if i > 0 && plan.start[i - 1].chart != c.chart {
            std::mem::swap(&mut xc, &mut yc);
        }
        let (t0, t1) = (plan.grid[i], plan.grid[i + 1]);
        let mut t = t0;
        loop {
            let next_jump = chain.jump_times.get(jump_idx).copied().filter(|&tj| tj <= t1);
            let t_end = next_jump.unwrap_or(t1);
            let h = t_end - t;
            if h > 0.0 {
                let db = h.sqrt() * rng.sample::<f64, _>(StandardNormal);
                let comp = super::increments::compensator(chain, &plan.q, t, t_end);
                let (x, y) = euler(c, &xc, &yc, h, db, comp);
                xc = x;
                yc = y;
            }
            t = t_end;
            match next_jump {
                Some(_) => {
                    // The jump integrands use the pre-jump state.
                    let jx = &c.jump * &xc;
                    let px = &c.p * &xc;
                    xc += jx;
                    yc += px;
                    jump_idx += 1;
                }
                None => break,
            }
        }
        if !(xc.iter().chain(yc.iter()).all(|v| v.is_finite())) {
            return Err(Error::Numerical {
                t: t1,
                reason: format!("path {path_id} diverged"),
            });
        }
        let k_end = &plan.end_k[i];
        decouple = decouple.max((&yc - k_end * &xc).norm());
        let (x, _) = to_primal(c.chart, &xc, &yc);
        sup_x = sup_x.max(x.norm());
        if i + 1 < plan.steps() {
            let next = &plan.start[i + 1];
            if next.chart == c.chart {
                rec.push(t1, chain.state_at(t1), plan.step_segment[i + 1], next, &xc, &yc);
            } else {
                let (sx, sy) = (yc.clone(), xc.clone());
                if rec.keep {
                    rec.path.handoffs.push(Handoff {
                        t: t1,
                        before: to_primal(c.chart, &xc, &yc),
                        after: to_primal(next.chart, &sx, &sy),
                    });
                }
                rec.push(t1, chain.state_at(t1), plan.step_segment[i + 1], next, &sx, &sy);
            }
        } else {
            rec.push(t1, chain.state_at(t1), plan.step_segment[i], &plan.terminal, &xc, &yc);
        }
    }
    rec.path.residuals = PathResiduals {
        path_id,
        x0_norm: x0.norm(),
        y_t_norm: yc.norm(),
        sup_x_norm: sup_x,
        decouple_resid: decouple,
    };
    Ok(rec.path)
}

/// Aggregate Monte Carlo residuals.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ResidualReport {
    pub paths: usize,
    /// Largest `|x_0|`; zero for an exact start.
    pub x0: f64,
    pub y_t_mean: f64,
    pub y_t_se: f64,
    /// Mean of `sup_t |x_t|`.
    pub nontriviality: f64,
    /// `y_t_mean / nontriviality`; zero for the trivial solution.
    pub terminal_ratio: f64,
    pub decouple_max: f64,
}

pub fn residual_report(paths: &[PathResiduals]) -> ResidualReport {
    let n = paths.len();
    let (mut sy, mut syy, mut sx) = (CompensatedSum::default(), CompensatedSum::default(), CompensatedSum::default());
    let (mut x0, mut dec) = (0.0f64, 0.0f64);
    for p in paths {
        sy.add(p.y_t_norm);
        syy.add(p.y_t_norm * p.y_t_norm);
        sx.add(p.sup_x_norm);
        x0 = x0.max(p.x0_norm);
        dec = dec.max(p.decouple_resid);
    }
    let nf = n.max(1) as f64;
    let mean = sy.value() / nf;
    let var = if n > 1 {
        ((syy.value() - nf * mean * mean) / (nf - 1.0)).max(0.0)
    } else {
        0.0
    };
    let sup = sx.value() / nf;
    ResidualReport {
        paths: n,
        x0,
        y_t_mean: mean,
        y_t_se: (var / nf).sqrt(),
        nontriviality: sup,
        terminal_ratio: if sup > 0.0 { mean / sup } else { 0.0 },
        decouple_max: dec,
    }
}

/// Simulated paths (the first `keep_paths`) and the aggregate report.
#[derive(Clone, Debug)]
pub struct Simulation {
    pub kept: Vec<EigenfunctionPath>,
    pub residuals: Vec<PathResiduals>,
    pub report: ResidualReport,
    pub grid_steps: usize,
}

pub fn simulate_eigenfunction(
    record: &EigenvalueRecord,
    spec: &HamiltonianSpec,
    opts: &SimulationOptions,
) -> Result<Simulation> {
    if opts.n_paths == 0 {
        return Err(Error::input("paths", "need at least one path"));
    }
    let schedule = GainSchedule::for_record(spec, record)?;
    let dt = if opts.dt > 0.0 { opts.dt } else { spec.horizon() / 4096.0 };
    let plan = SimulationPlan::new(spec, &schedule, dt)?;
    let start = match &opts.start {
        Some(v) => v.clone(),
        None => record
            .kernel_basis
            .first()
            .cloned()
            .ok_or_else(|| Error::Schedule("record has no kernel vector".into()))?,
    };
    if start.len() != spec.n() {
        return Err(Error::Dimension(format!("start vector has {} entries, expected {}", start.len(), spec.n())));
    }
    let start = Vector::from_vec(start);
    let paths: Vec<EigenfunctionPath> = (0..opts.n_paths as u64)
        .into_par_iter()
        .map(|id| simulate_path(&plan, &start, opts.seed, id, (id as usize) < opts.keep_paths))
        .collect::<Result<_>>()?;
    let residuals: Vec<PathResiduals> = paths.iter().map(|p| p.residuals).collect();
    let report = residual_report(&residuals);
    let kept = paths.into_iter().filter(|p| !p.times.is_empty()).collect();
    Ok(Simulation {
        kept,
        residuals,
        report,
        grid_steps: plan.steps(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trivial_paths_have_zero_residuals() {
        let r = residual_report(&[PathResiduals {
            path_id: 0,
            x0_norm: 0.0,
            y_t_norm: 0.0,
            sup_x_norm: 0.0,
            decouple_resid: 0.0,
        }]);
        assert_eq!((r.x0, r.y_t_mean, r.nontriviality, r.terminal_ratio, r.decouple_max), (0.0, 0.0, 0.0, 0.0, 0.0));
    }

    #[test]
    fn report_statistics() {
        let mk = |id, y| PathResiduals {
            path_id: id,
            x0_norm: 0.0,
            y_t_norm: y,
            sup_x_norm: 2.0,
            decouple_resid: y / 10.0,
        };
        let r = residual_report(&[mk(0, 1.0), mk(1, 3.0)]);
        assert_eq!(r.y_t_mean, 2.0);
        assert!((r.y_t_se - 1.0).abs() < 1e-15);
        assert_eq!(r.terminal_ratio, 1.0);
        assert_eq!(r.decouple_max, 0.3);
    }
}
