//! Backward integration with chart switching and blow-up localization.
//!
//! A trajectory is integrated in its own chart (primal `K` or dual `K~`). Once
//! `|K|` is large and `K^-1` is well conditioned, integration continues with the
//! inverse in the other chart. Blow-up of the original chart then shows up as an
//! eigenvalue of the inverse crossing zero, which is located by regula falsi on
//! a single step. If switching is impossible, blow-up is declared at the norm cap
//! or on step-size underflow and located by extrapolating `1/|K|`.

use serde::Serialize;

use super::integrator::{dopri_step, hermite, step_factor, Tolerances};
use super::problem::{Chart, Gains, RiccatiSystem};
use crate::error::{Error, Result};
use crate::linalg::{self, Mat};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IntegrationOptions {
    pub tol: Tolerances,
    /// Largest step as a fraction of the integration span.
    pub max_step_fraction: f64,
    /// Norm above which integration moves to the inverse.
    pub switch_threshold: f64,
    /// Norm at which blow-up is declared when switching is not possible.
    pub norm_cap: f64,
    /// Step-size floor as a fraction of the horizon.
    pub min_step_fraction: f64,
    /// Width of the final blow-up bracket as a fraction of the horizon.
    pub locate_fraction: f64,
    pub switch_charts: bool,
    pub max_steps: usize,
}

impl Default for IntegrationOptions {
    fn default() -> Self {
        IntegrationOptions {
            tol: Tolerances::default(),
            max_step_fraction: 0.125,
            switch_threshold: 1e4,
            norm_cap: 1e8,
            min_step_fraction: 1e-13,
            locate_fraction: 1e-13,
            switch_charts: true,
            max_steps: 1_000_000,
        }
    }
}

/// One accepted node; `dk` is `dK/dt` in the node's chart.
#[derive(Clone, Debug)]
pub struct Node {
    pub t: f64,
    pub k: Mat,
    pub dk: Mat,
    pub gains: Gains,
}

/// Consecutive nodes integrated in one chart, in decreasing time.
#[derive(Clone, Debug)]
pub struct Segment {
    pub chart: Chart,
    pub nodes: Vec<Node>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum StopReason {
    ReachedStop,
    BlowUp,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Localization {
    /// No blow-up on the window.
    None,
    /// Zero crossing of an eigenvalue of the inverse.
    ChartCrossing,
    /// Linear extrapolation of `1/|K|` after hitting the cap or the step floor.
    Extrapolation,
}

/// Backward solution with dense output.
#[derive(Clone, Debug)]
pub struct RiccatiTrajectory {
    pub family: Chart,
    pub parameter: f64,
    pub segments: Vec<Segment>,
    pub stop_reason: StopReason,
}

/// Blow-up time of a trajectory, or `NEG_INFINITY` when none occurs on the window.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BlowUpResult {
    pub value: f64,
    pub bracket: (f64, f64),
    pub norm_at_stop: f64,
    pub parameter: f64,
    pub localization: Localization,
}

impl BlowUpResult {
    pub fn is_blow_up(&self) -> bool {
        self.value.is_finite()
    }
}

impl RiccatiTrajectory {
    pub fn nodes(&self) -> impl Iterator<Item = (Chart, &Node)> {
        self.segments
            .iter()
            .flat_map(|s| s.nodes.iter().map(move |n| (s.chart, n)))
    }

    pub fn start_t(&self) -> f64 {
        self.segments[0].nodes[0].t
    }

    pub fn end_t(&self) -> f64 {
        self.last().1.t
    }

    pub fn last(&self) -> (Chart, &Node) {
        let s = self.segments.last().unwrap();
        (s.chart, s.nodes.last().unwrap())
    }

    /// Dense output in whichever chart covers `t`.
    pub fn value_at(&self, t: f64) -> Option<(Chart, Mat)> {
        for seg in &self.segments {
            let nodes = &seg.nodes;
            let (hi, lo) = (nodes[0].t, nodes[nodes.len() - 1].t);
            if t > hi || t < lo {
                continue;
            }
            if nodes.len() == 1 {
                return Some((seg.chart, nodes[0].k.clone()));
            }
            let i = nodes.partition_point(|n| n.t > t).clamp(1, nodes.len() - 1);
            let (a, b) = (&nodes[i - 1], &nodes[i]);
            let v = hermite(a.t, &a.k, &a.dk, b.t, &b.k, &b.dk, t);
            return Some((seg.chart, linalg::symmetrize(&v)));
        }
        None
    }

    /// Dense output converted to the given chart (inverting when needed).
    pub fn value_in_chart(&self, t: f64, chart: Chart) -> Option<Mat> {
        let (c, k) = self.value_at(t)?;
        to_chart(c, k, chart)
    }

    /// Value at `t` from one Runge–Kutta step off the preceding node. The step is
    /// shorter than an accepted one, so it carries the integration accuracy that
    /// the cubic interpolant lacks.
    pub fn refined_value(&self, sys: &RiccatiSystem, t: f64, tol: Tolerances) -> Result<Option<(Chart, Mat)>> {
        for seg in &self.segments {
            let nodes = &seg.nodes;
            if t > nodes[0].t || t < nodes[nodes.len() - 1].t {
                continue;
            }
            let i = nodes.partition_point(|n| n.t > t);
            let start = &nodes[i.saturating_sub(1).min(nodes.len() - 1)];
            if start.t == t || i == 0 {
                return Ok(Some((seg.chart, nodes[i.min(nodes.len() - 1)].k.clone())));
            }
            let chart = seg.chart;
            let mut f = |tt: f64, kk: &Mat| sys.rhs(kk, tt, chart).map(|r| -r);
            let step = dopri_step(&mut f, start.t, &start.k, &start.dk, t - start.t, tol)?;
            return Ok(Some((chart, linalg::symmetrize(&step.y))));
        }
        Ok(None)
    }

    pub fn refined_value_in_chart(
        &self,
        sys: &RiccatiSystem,
        t: f64,
        chart: Chart,
        tol: Tolerances,
    ) -> Result<Option<Mat>> {
        Ok(self.refined_value(sys, t, tol)?.and_then(|(c, k)| to_chart(c, k, chart)))
    }
}

fn to_chart(from: Chart, k: Mat, to: Chart) -> Option<Mat> {
    if from == to {
        Some(k)
    } else {
        k.try_inverse().map(|m| linalg::symmetrize(&m))
    }
}

fn neg_count(k: &Mat) -> usize {
    linalg::sym_eigenvalues(k).iter().filter(|&&x| x < 0.0).count()
}

fn is_symmetric(k: &Mat) -> bool {
    k.is_square() && (k - k.transpose()).amax() <= 1e-12 * (1.0 + k.amax())
}

fn extrapolate(nodes: &[Node], t_fallback: f64) -> (f64, f64) {
    let len = nodes.len();
    let last = &nodes[len - 1];
    if len < 2 {
        return (t_fallback, linalg::spectral_norm(&last.k));
    }
    let prev = &nodes[len - 2];
    let (ua, ub) = (
        1.0 / linalg::spectral_norm(&prev.k),
        1.0 / linalg::spectral_norm(&last.k),
    );
    let slope = (ua - ub) / (prev.t - last.t);
    let t_star = if slope > 0.0 { last.t - ub / slope } else { last.t };
    (t_star.min(last.t), 1.0 / ub)
}

/// Integrates `K` backward from `(terminal_t, terminal_k)` in the chart `family`
/// down to `stop_t`, stopping at the first blow-up of that chart.
pub fn integrate_backward(
    sys: &RiccatiSystem,
    terminal_k: &Mat,
    terminal_t: f64,
    stop_t: f64,
    family: Chart,
    opts: &IntegrationOptions,
) -> Result<(RiccatiTrajectory, BlowUpResult)> {
    let n = sys.n();
    if terminal_k.shape() != (n, n) {
        return Err(Error::Dimension(format!(
            "terminal matrix is {}x{}, expected {n}x{n}",
            terminal_k.nrows(),
            terminal_k.ncols()
        )));
    }
    if !is_symmetric(terminal_k) {
        return Err(Error::input("terminal_k", "terminal matrix must be symmetric"));
    }
    if !(stop_t < terminal_t) {
        return Err(Error::Precondition(format!(
            "stop time {stop_t} must precede terminal time {terminal_t}"
        )));
    }
    let horizon = sys.spec.horizon();
    let parameter = sys.perturbation.parameter();
    let span = terminal_t - stop_t;
    let h_max = span * opts.max_step_fraction;
    let h_min = opts.min_step_fraction * horizon;
    let locate_tol = (opts.locate_fraction * horizon).max(4.0 * f64::EPSILON * terminal_t.abs().max(stop_t.abs()));
    let breaks: Vec<f64> = sys
        .spec
        .breakpoints()
        .iter()
        .copied()
        .filter(|&b| b > stop_t && b < terminal_t)
        .collect();

    let mut chart = family;
    let mut t = terminal_t;
    let mut k = linalg::symmetrize(terminal_k);
    let deriv = |t: f64, k: &Mat, chart: Chart| -> Result<Mat> {
        let r = sys.rhs(k, t, chart)?;
        if !linalg::is_finite(&r) {
            return Err(Error::Numerical {
                t,
                reason: "non-finite right-hand side".into(),
            });
        }
        Ok(-r)
    };
    let make_node = |t: f64, k: Mat, dk: Mat, chart: Chart| -> Result<Node> {
        let gains = sys.gains(&k, t, chart)?;
        Ok(Node { t, k, dk, gains })
    };
    let mut dk = deriv(t, &k, chart)?;
    let mut segments = vec![Segment {
        chart,
        nodes: vec![make_node(t, k.clone(), dk.clone(), chart)?],
    }];
    let mut h = (span * 1e-3).min(h_max);
    let finish = |segments: Vec<Segment>, reason: StopReason, result: BlowUpResult| -> Result<(RiccatiTrajectory, BlowUpResult)> {
        Ok((
            RiccatiTrajectory {
                family,
                parameter,
                segments,
                stop_reason: reason,
            },
            result,
        ))
    };

    for _ in 0..opts.max_steps {
        if t <= stop_t {
            let norm = linalg::spectral_norm(&k);
            return finish(
                segments,
                StopReason::ReachedStop,
                BlowUpResult {
                    value: f64::NEG_INFINITY,
                    bracket: (stop_t, stop_t),
                    norm_at_stop: if chart == family { norm } else { 1.0 / linalg::min_abs_eigenvalue(&k) },
                    parameter,
                    localization: Localization::None,
                },
            );
        }
        // Land exactly on breakpoints and on the stop time.
        let barrier = breaks
            .iter()
            .rev()
            .copied()
            .find(|&b| b < t - 1e-15 * (1.0 + t.abs()))
            .unwrap_or(stop_t)
            .max(stop_t);
        let mut h_try = h.min(h_max);
        let mut t_new = t - h_try;
        if t_new <= barrier + 1e-14 * (1.0 + barrier.abs()) {
            t_new = barrier;
            h_try = t - barrier;
        }
        let mut f = |tt: f64, kk: &Mat| deriv(tt, kk, chart);
        let step = match dopri_step(&mut f, t, &k, &dk, -h_try, opts.tol) {
            Ok(s) if linalg::is_finite(&s.y) => Some(s),
            Ok(_) => None,
            Err(Error::NearSingular { .. }) | Err(Error::Numerical { .. }) => None,
            Err(e) => return Err(e),
        };
        let accepted = match step {
            Some(s) if s.err <= 1.0 => s,
            other => {
                let factor = other.map_or(0.2, |s| step_factor(s.err).min(0.9));
                h = h_try * factor;
                if h < h_min {
                    if chart != family {
                        return Err(Error::Numerical {
                            t,
                            reason: format!("step size underflow in the {} chart", chart.as_str()),
                        });
                    }
                    let nodes = &segments.last().unwrap().nodes;
                    let (t_star, norm) = extrapolate(nodes, t);
                    return finish(
                        segments,
                        StopReason::BlowUp,
                        BlowUpResult {
                            value: t_star,
                            bracket: (t_star, t),
                            norm_at_stop: norm,
                            parameter,
                            localization: Localization::Extrapolation,
                        },
                    );
                }
                continue;
            }
        };
        let k_new = linalg::symmetrize(&accepted.y);
        let dk_new = linalg::symmetrize(&accepted.dy);

        if chart != family {
            let (p_old, p_new) = (neg_count(&k), neg_count(&k_new));
            if p_old != p_new {
                let idx = if p_new > p_old { p_old } else { p_old - 1 };
                let eig_at = |kk: &Mat| linalg::sym_eigenvalues(kk)[idx];
                let mut probe = |hh: f64| -> Result<(f64, Mat, Mat)> {
                    let s = dopri_step(&mut f, t, &k, &dk, -hh, opts.tol)?;
                    let kk = linalg::symmetrize(&s.y);
                    Ok((eig_at(&kk), kk, linalg::symmetrize(&s.dy)))
                };
                let (mut a, mut fa) = (0.0, eig_at(&k));
                let (mut b, mut fb) = (h_try, eig_at(&k_new));
                let mut side = 0i8;
                let mut last = (k_new.clone(), dk_new.clone());
                for _ in 0..200 {
                    if (b - a).abs() <= locate_tol {
                        break;
                    }
                    let mut c = b - fb * (b - a) / (fb - fa);
                    if !(c > a && c < b) {
                        c = 0.5 * (a + b);
                    }
                    let (fc, kc, dc) = probe(c)?;
                    if fc == 0.0 {
                        a = c;
                        b = c;
                        last = (kc, dc);
                        break;
                    }
                    if (fc < 0.0) == (fb < 0.0) {
                        b = c;
                        fb = fc;
                        last = (kc, dc);
                        if side == 1 {
                            fa *= 0.5;
                        }
                        side = 1;
                    } else {
                        a = c;
                        fa = fc;
                        if side == -1 {
                            fb *= 0.5;
                        }
                        side = -1;
                    }
                }
                let value = t - 0.5 * (a + b);
                let norm = 1.0 / linalg::min_abs_eigenvalue(&k);
                let crossing_t = t - b;
                let node = make_node(crossing_t, last.0, last.1, chart);
                if let Ok(node) = node {
                    segments.last_mut().unwrap().nodes.push(node);
                }
                return finish(
                    segments,
                    StopReason::BlowUp,
                    BlowUpResult {
                        value,
                        bracket: (t - b, t - a),
                        norm_at_stop: norm,
                        parameter,
                        localization: Localization::ChartCrossing,
                    },
                );
            }
        }

        t = t_new;
        k = k_new;
        dk = dk_new;
        segments
            .last_mut()
            .unwrap()
            .nodes
            .push(make_node(t, k.clone(), dk.clone(), chart)?);
        h = h_try * step_factor(accepted.err);

        let norm = linalg::spectral_norm(&k);
        if opts.switch_charts && norm > opts.switch_threshold {
            if let Some((inv, _)) = linalg::inverse_with_cond(&k) {
                let inv = linalg::symmetrize(&inv);
                if linalg::spectral_norm(&inv) < opts.switch_threshold {
                    chart = chart.other();
                    k = inv;
                    dk = deriv(t, &k, chart)?;
                    segments.push(Segment {
                        chart,
                        nodes: vec![make_node(t, k.clone(), dk.clone(), chart)?],
                    });
                    continue;
                }
            }
        }
        if norm > opts.norm_cap {
            if chart != family {
                return Err(Error::Numerical {
                    t,
                    reason: format!(
                        "inverse chart norm {norm:.3e} exceeds the cap and cannot switch back"
                    ),
                });
            }
            let (t_star, norm) = extrapolate(&segments.last().unwrap().nodes, t);
            return finish(
                segments,
                StopReason::BlowUp,
                BlowUpResult {
                    value: t_star,
                    bracket: (t_star, t),
                    norm_at_stop: norm,
                    parameter,
                    localization: Localization::Extrapolation,
                },
            );
        }
    }
    Err(Error::Numerical {
        t,
        reason: format!("step budget of {} exhausted", opts.max_steps),
    })
}

/// Blow-up time of the `family` chart started from `terminal_k` at `terminal_t`,
/// searched on `[-2T, terminal_t]`.
pub fn blow_up_time(
    sys: &RiccatiSystem,
    family: Chart,
    terminal_t: f64,
    terminal_k: &Mat,
) -> Result<BlowUpResult> {
    blow_up_time_with(sys, family, terminal_t, terminal_k, &IntegrationOptions::default())
}

pub fn blow_up_time_with(
    sys: &RiccatiSystem,
    family: Chart,
    terminal_t: f64,
    terminal_k: &Mat,
    opts: &IntegrationOptions,
) -> Result<BlowUpResult> {
    let horizon = sys.spec.horizon();
    if !(terminal_t > 0.0 && terminal_t <= horizon) {
        return Err(Error::Precondition(format!(
            "terminal time {terminal_t} outside (0, {horizon}]"
        )));
    }
    integrate_backward(sys, terminal_k, terminal_t, -2.0 * horizon, family, opts).map(|(_, b)| b)
}
