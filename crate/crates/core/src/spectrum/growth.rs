//! Power-law fit of the eigenvalue sequence.

use serde::Serialize;

use super::record::EigenvalueRecord;
use crate::error::{Error, Result};

const EXPONENT_RANGE: (f64, f64) = (0.25, 6.0);
const SHIFT_RANGE: (f64, f64) = (-1.0, 0.99);

/// `rho_m ~ offset + scale * (m - shift)^exponent`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GrowthFit {
    pub exponent: f64,
    pub scale: f64,
    pub offset: f64,
    pub shift: f64,
    pub r2: f64,
    /// Exponent of the fit with the shift pinned at zero.
    pub unshifted_exponent: f64,
    pub count: usize,
}

pub fn growth_order_fit(records: &[EigenvalueRecord]) -> Result<GrowthFit> {
    for w in records.windows(2) {
        if w[1].m != w[0].m + 1 {
            return Err(Error::input("records", format!("indices {} and {} are not consecutive", w[0].m, w[1].m)));
        }
    }
    let m: Vec<f64> = records.iter().map(|r| r.m as f64).collect();
    let rho: Vec<f64> = records.iter().map(|r| r.rho).collect();
    fit_power_law(&m, &rho)
}

/// Variable projection: for fixed `(shift, exponent)` the offset and scale follow
/// from linear least squares, and the two nonlinear parameters are searched on a
/// grid followed by golden-section refinement.
pub fn fit_power_law(m: &[f64], rho: &[f64]) -> Result<GrowthFit> {
    if m.len() != rho.len() {
        return Err(Error::Dimension(format!("{} indices for {} values", m.len(), rho.len())));
    }
    if m.len() < 5 {
        return Err(Error::input("records", format!("need at least 5 values, got {}", m.len())));
    }
    if m.iter().any(|&x| x < 1.0) {
        return Err(Error::input("records", "indices start at 1"));
    }
    if rho.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::input("records", "eigenvalues must be strictly increasing"));
    }
    let mean = rho.iter().sum::<f64>() / rho.len() as f64;
    let sst: f64 = rho.iter().map(|r| (r - mean).powi(2)).sum();

    let (shift, exponent) = minimize_2d(|c, s| linear_part(m, rho, c, s).2);
    let (offset, scale, sse) = linear_part(m, rho, shift, exponent);
    let unshifted_exponent = golden(EXPONENT_RANGE, 48, |s| linear_part(m, rho, 0.0, s).2);
    Ok(GrowthFit {
        exponent,
        scale,
        offset,
        shift,
        r2: 1.0 - sse / sst,
        unshifted_exponent,
        count: m.len(),
    })
}

/// Least-squares `(offset, scale, sse)` of `rho ~ offset + scale * (m - c)^s`.
fn linear_part(m: &[f64], rho: &[f64], c: f64, s: f64) -> (f64, f64, f64) {
    let u: Vec<f64> = m.iter().map(|&x| (x - c).powf(s)).collect();
    let k = u.len() as f64;
    let (mu, mr) = (u.iter().sum::<f64>() / k, rho.iter().sum::<f64>() / k);
    let (mut suu, mut sur) = (0.0, 0.0);
    for (a, b) in u.iter().zip(rho) {
        suu += (a - mu) * (a - mu);
        sur += (a - mu) * (b - mr);
    }
    let scale = if suu > 0.0 { sur / suu } else { 0.0 };
    let offset = mr - scale * mu;
    let sse = u.iter().zip(rho).map(|(a, b)| (b - offset - scale * a).powi(2)).sum();
    (offset, scale, sse)
}

/// Grid search over `a`, each point with its profile over `s` minimized, then a
/// golden-section refinement of `a` around the best grid point.
fn minimize_2d(f: impl Fn(f64, f64) -> f64) -> (f64, f64) {
    let profile = |c: f64| {
        let s = golden(EXPONENT_RANGE, 48, |s| f(c, s));
        (f(c, s), s)
    };
    let cells = 40;
    let width = (SHIFT_RANGE.1 - SHIFT_RANGE.0) / cells as f64;
    let grid: Vec<f64> = (0..=cells).map(|i| SHIFT_RANGE.0 + width * i as f64).collect();
    let best = grid
        .iter()
        .map(|&c| (profile(c).0, c))
        .min_by(|a, b| a.0.total_cmp(&b.0))
        .unwrap()
        .1;
    let lo = (best - width).max(SHIFT_RANGE.0);
    let hi = (best + width).min(SHIFT_RANGE.1);
    let c = golden_min((lo, hi), |c| profile(c).0);
    let c = if profile(c).0 <= profile(best).0 { c } else { best };
    (c, profile(c).1)
}

/// Coarse grid followed by golden-section search between the neighbours of the best point.
fn golden(range: (f64, f64), points: usize, f: impl Fn(f64) -> f64) -> f64 {
    let step = (range.1 - range.0) / points as f64;
    let best = (0..=points)
        .map(|i| range.0 + step * i as f64)
        .min_by(|a, b| f(*a).total_cmp(&f(*b)))
        .unwrap();
    let x = golden_min(((best - step).max(range.0), (best + step).min(range.1)), &f);
    if f(x) <= f(best) {
        x
    } else {
        best
    }
}

fn golden_min((mut a, mut b): (f64, f64), f: impl Fn(f64) -> f64) -> f64 {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..80 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ms(k: usize) -> Vec<f64> {
        (1..=k).map(|m| m as f64).collect()
    }

    #[test]
    fn closed_form_sequence_has_exponent_two() {
        let m = ms(10);
        let rho: Vec<f64> = m.iter().map(|&x| 1.0 + ((2.0 * x - 1.0) / 2.0).powi(2)).collect();
        let fit = fit_power_law(&m, &rho).unwrap();
        assert!((fit.exponent - 2.0).abs() < 0.02, "{fit:?}");
        assert!(fit.r2 > 0.999999);
    }

    #[test]
    fn linear_sequence_has_exponent_one() {
        let m = ms(10);
        let fit = fit_power_law(&m, &m).unwrap();
        assert!((fit.exponent - 1.0).abs() < 0.02, "{fit:?}");
    }

    #[test]
    fn pure_power_recovers_parameters() {
        let m = ms(8);
        let rho: Vec<f64> = m.iter().map(|&x| 2.0 + 0.5 * (x + 0.3).powf(2.5)).collect();
        let fit = fit_power_law(&m, &rho).unwrap();
        assert!((fit.exponent - 2.5).abs() < 1e-3, "{fit:?}");
        assert!((fit.shift + 0.3).abs() < 1e-2, "{fit:?}");
    }

    #[test]
    fn rejects_bad_input() {
        let m = ms(5);
        assert!(fit_power_law(&m[..4], &m[..4]).is_err());
        let mut rho = m.clone();
        rho[3] = 0.0;
        assert!(matches!(fit_power_law(&m, &rho), Err(Error::Input { .. })));
    }
}
