//! Dormand–Prince 5(4) stepping for matrix-valued ODEs, with cubic Hermite dense output.

use crate::error::Result;
use crate::linalg::Mat;

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// Difference between the 5th and embedded 4th order weights.
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

/// Step-size control settings.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tolerances {
    pub rtol: f64,
    pub atol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            rtol: 1e-9,
            atol: 1e-12,
        }
    }
}

/// One trial step: the 5th-order solution, its derivative (FSAL) and the
/// scaled error norm (accept when `err <= 1`).
pub struct Step {
    pub y: Mat,
    pub dy: Mat,
    pub err: f64,
}

/// Advances `dy/dt = f(t, y)` from `(t, y)` with derivative `dy` by `h` (may be negative).
pub fn dopri_step<F>(f: &mut F, t: f64, y: &Mat, dy: &Mat, h: f64, tol: Tolerances) -> Result<Step>
where
    F: FnMut(f64, &Mat) -> Result<Mat>,
{
    let k1 = dy;
    let k2 = f(t + C2 * h, &(y + k1 * (h * A21)))?;
    let k3 = f(t + C3 * h, &(y + (k1 * A31 + &k2 * A32) * h))?;
    let k4 = f(t + C4 * h, &(y + (k1 * A41 + &k2 * A42 + &k3 * A43) * h))?;
    let k5 = f(
        t + C5 * h,
        &(y + (k1 * A51 + &k2 * A52 + &k3 * A53 + &k4 * A54) * h),
    )?;
    let k6 = f(
        t + h,
        &(y + (k1 * A61 + &k2 * A62 + &k3 * A63 + &k4 * A64 + &k5 * A65) * h),
    )?;
    let y_new = y + (k1 * B1 + &k3 * B3 + &k4 * B4 + &k5 * B5 + &k6 * B6) * h;
    let k7 = f(t + h, &y_new)?;
    let e = (k1 * E1 + &k3 * E3 + &k4 * E4 + &k5 * E5 + &k6 * E6 + &k7 * E7) * h;
    let mut acc = 0.0;
    for ((ei, yi), zi) in e.iter().zip(y.iter()).zip(y_new.iter()) {
        let sc = tol.atol + tol.rtol * yi.abs().max(zi.abs());
        acc += (ei / sc).powi(2);
    }
    let err = (acc / e.len() as f64).sqrt();
    Ok(Step {
        y: y_new,
        dy: k7,
        err: if err.is_finite() { err } else { f64::INFINITY },
    })
}

/// Step-size factor from the error norm of a 5(4) pair.
pub fn step_factor(err: f64) -> f64 {
    if err == 0.0 {
        return 5.0;
    }
    (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
}

/// Cubic Hermite interpolation between `(t0, y0, d0)` and `(t1, y1, d1)`.
pub fn hermite(t0: f64, y0: &Mat, d0: &Mat, t1: f64, y1: &Mat, d1: &Mat, t: f64) -> Mat {
    let h = t1 - t0;
    let s = (t - t0) / h;
    let s2 = s * s;
    let s3 = s2 * s;
    let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
    let h10 = s3 - 2.0 * s2 + s;
    let h01 = -2.0 * s3 + 3.0 * s2;
    let h11 = s3 - s2;
    y0 * h00 + d0 * (h10 * h) + y1 * h01 + d1 * (h11 * h)
}
