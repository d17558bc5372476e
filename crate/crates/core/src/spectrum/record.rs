//! Eigenvalue records and the piecewise gain schedules that realize their
//! eigenfunctions.

use serde::{Deserialize, Serialize};

use crate::coefficients::{HamiltonianSpec, Perturbation};
use crate::error::{Error, Result};
use crate::linalg::{self, Mat};
use crate::riccati::{integrate_backward, Chart, Gains, IntegrationOptions, RiccatiSystem, RiccatiTrajectory};

/// One blow-up time of the alternating chain and the equation that blew up.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainLink {
    pub t: f64,
    pub family: Chart,
}

/// Subinterval `[t_lo, t_hi]` on which the gains of `chart` are used.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScheduleInterval {
    pub t_lo: f64,
    pub t_hi: f64,
    pub chart: Chart,
}

/// A located eigenvalue with the data needed to rebuild its eigenfunction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EigenvalueRecord {
    pub m: usize,
    pub rho: f64,
    pub perturbation: Perturbation,
    /// Blow-up times in decreasing order; the last one sits at the origin.
    pub chain: Vec<ChainLink>,
    /// Orthonormal basis of the kernel of the dual solution at time zero.
    pub kernel_basis: Vec<Vec<f64>>,
    /// Intervals ordered from the terminal time down to zero.
    pub schedule: Vec<ScheduleInterval>,
    /// Width of the final bisection bracket in `rho`.
    pub tol: f64,
}

/// Splits `[0, T]` at the midpoints between consecutive chain links. The piece
/// around a primal blow-up uses the dual equation and vice versa, so neither
/// chart is evaluated near its singularity.
pub fn chain_schedule(horizon: f64, chain: &[ChainLink]) -> Vec<ScheduleInterval> {
    let mut times = vec![horizon];
    times.extend(chain.iter().map(|l| l.t));
    let mut cuts: Vec<f64> = times.windows(2).map(|w| 0.5 * (w[0] + w[1])).filter(|&c| c > 0.0).collect();
    cuts.push(0.0);
    let mut out = Vec::with_capacity(cuts.len());
    let mut hi = horizon;
    for (j, &lo) in cuts.iter().enumerate() {
        let chart = if j % 2 == 0 { Chart::Primal } else { Chart::Dual };
        out.push(ScheduleInterval { t_lo: lo, t_hi: hi, chart });
        hi = lo;
    }
    out
}

/// Primal on `[split, T]`, dual on `[0, split]`.
pub fn split_schedule(horizon: f64, split: f64) -> Vec<ScheduleInterval> {
    vec![
        ScheduleInterval { t_lo: split, t_hi: horizon, chart: Chart::Primal },
        ScheduleInterval { t_lo: 0.0, t_hi: split, chart: Chart::Dual },
    ]
}

/// Riccati solution on one schedule interval.
#[derive(Clone, Debug)]
pub struct ScheduledSegment {
    pub interval: ScheduleInterval,
    pub trajectory: RiccatiTrajectory,
}

/// Gains on all of `[0, T]`, glued from the scheduled intervals.
#[derive(Clone, Debug)]
pub struct GainSchedule<'a> {
    pub system: RiccatiSystem<'a>,
    pub segments: Vec<ScheduledSegment>,
    opts: IntegrationOptions,
}

impl<'a> GainSchedule<'a> {
    pub fn for_record(spec: &'a HamiltonianSpec, record: &EigenvalueRecord) -> Result<Self> {
        Self::build(spec, record.perturbation, &record.schedule, &IntegrationOptions::default())
    }

    /// Integrates backward from `K_T = 0`, inverting at each interval boundary.
    pub fn build(
        spec: &'a HamiltonianSpec,
        perturbation: Perturbation,
        intervals: &[ScheduleInterval],
        opts: &IntegrationOptions,
    ) -> Result<Self> {
        validate(spec.horizon(), intervals)?;
        let system = RiccatiSystem::new(spec, perturbation);
        let opts = IntegrationOptions {
            switch_charts: false,
            ..*opts
        };
        let n = spec.n();
        let mut segments: Vec<ScheduledSegment> = Vec::with_capacity(intervals.len());
        let mut terminal = Mat::zeros(n, n);
        for (j, iv) in intervals.iter().enumerate() {
            if j > 0 {
                let prev = &segments[j - 1];
                let (chart, node) = prev.trajectory.last();
                terminal = if chart == iv.chart {
                    node.k.clone()
                } else {
                    let (inv, _) = linalg::inverse_with_cond(&node.k).ok_or_else(|| {
                        Error::Schedule(format!("singular Riccati value at the boundary t = {}", iv.t_hi))
                    })?;
                    linalg::symmetrize(&inv)
                };
            }
            let (trajectory, blow) = integrate_backward(&system, &terminal, iv.t_hi, iv.t_lo, iv.chart, &opts)
                .map_err(|e| Error::Schedule(format!("interval [{}, {}]: {e}", iv.t_lo, iv.t_hi)))?;
            if blow.is_blow_up() {
                return Err(Error::Schedule(format!(
                    "{} gains blow up at t = {} inside [{}, {}]",
                    iv.chart.as_str(),
                    blow.value,
                    iv.t_lo,
                    iv.t_hi
                )));
            }
            segments.push(ScheduledSegment { interval: *iv, trajectory });
        }
        Ok(GainSchedule { system, segments, opts })
    }

    /// Index of the interval used at `t`; boundaries belong to the earlier (lower) interval.
    pub fn segment_index(&self, t: f64) -> usize {
        self.segments
            .iter()
            .position(|s| t >= s.interval.t_lo && t <= s.interval.t_hi)
            .map(|i| {
                if i + 1 < self.segments.len() && t == self.segments[i].interval.t_lo {
                    i + 1
                } else {
                    i
                }
            })
            .unwrap_or(if t < 0.0 { self.segments.len() - 1 } else { 0 })
    }

    /// Riccati value and gains of interval `idx` at `t`.
    pub fn gains_at(&self, idx: usize, t: f64) -> Result<(Mat, Gains)> {
        let seg = &self.segments[idx];
        let t = t.clamp(seg.interval.t_lo, seg.interval.t_hi);
        let k = seg
            .trajectory
            .refined_value_in_chart(&self.system, t, seg.interval.chart, self.opts.tol)?
            .ok_or_else(|| Error::Schedule(format!("no gain value at t = {t}")))?;
        let gains = self.system.gains(&k, t, seg.interval.chart)?;
        Ok((k, gains))
    }

    /// Dual Riccati value at time zero.
    pub fn dual_at_origin(&self) -> Result<Mat> {
        let last = self.segments.last().unwrap();
        let (chart, node) = last.trajectory.last();
        match chart {
            Chart::Dual => Ok(node.k.clone()),
            Chart::Primal => Err(Error::Schedule("schedule does not end in the dual chart".into())),
        }
    }
}

fn validate(horizon: f64, intervals: &[ScheduleInterval]) -> Result<()> {
    let first = intervals
        .first()
        .ok_or_else(|| Error::Schedule("empty schedule".into()))?;
    if first.t_hi != horizon || first.chart != Chart::Primal {
        return Err(Error::Schedule(format!(
            "schedule must start with a primal interval ending at T = {horizon}"
        )));
    }
    for w in intervals.windows(2) {
        if w[0].t_lo != w[1].t_hi {
            return Err(Error::Schedule(format!(
                "gap between {} and {}",
                w[1].t_hi, w[0].t_lo
            )));
        }
    }
    for iv in intervals {
        if !(iv.t_lo < iv.t_hi) {
            return Err(Error::Schedule(format!("empty interval [{}, {}]", iv.t_lo, iv.t_hi)));
        }
    }
    if intervals.last().unwrap().t_lo != 0.0 {
        return Err(Error::Schedule("schedule does not reach t = 0".into()));
    }
    Ok(())
}
