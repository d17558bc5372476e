//! Dense sampling with local refinement, used to check conditions "uniformly in t".

/// Samples per polynomial piece when scanning a scalar function of time.
pub const SAMPLES_PER_PIECE: usize = 1024;

/// Location and value of an extremum found by [`scan_max`] or [`scan_min`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Extremum {
    pub t: f64,
    pub value: f64,
}

/// Sample points: every breakpoint plus `per_piece - 1` interior points per piece.
pub fn sample_times(breakpoints: &[f64], per_piece: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(breakpoints.len() * per_piece);
    for w in breakpoints.windows(2) {
        let (a, b) = (w[0], w[1]);
        for i in 0..per_piece {
            out.push(a + (b - a) * i as f64 / per_piece as f64);
        }
    }
    if let Some(&last) = breakpoints.last() {
        out.push(last);
    }
    out
}

/// Maximizes `f` over the span of `breakpoints`: dense scan, then golden-section
/// refinement between the neighbours of the best sample.
pub fn scan_max(breakpoints: &[f64], per_piece: usize, f: impl Fn(f64) -> f64) -> Extremum {
    let ts = sample_times(breakpoints, per_piece);
    let mut best = 0;
    let mut best_v = f64::NEG_INFINITY;
    let mut values = Vec::with_capacity(ts.len());
    for (i, &t) in ts.iter().enumerate() {
        let v = f(t);
        values.push(v);
        if v > best_v || (v.is_nan() && !best_v.is_nan()) {
            best_v = v;
            best = i;
        }
    }
    if best_v.is_nan() || ts.len() < 3 {
        return Extremum {
            t: ts[best],
            value: best_v,
        };
    }
    let lo = ts[best.saturating_sub(1)];
    let hi = ts[(best + 1).min(ts.len() - 1)];
    let refined = golden_max(&f, lo, hi, 60);
    if refined.value > best_v {
        refined
    } else {
        Extremum {
            t: ts[best],
            value: best_v,
        }
    }
}

pub fn scan_min(breakpoints: &[f64], per_piece: usize, f: impl Fn(f64) -> f64) -> Extremum {
    let e = scan_max(breakpoints, per_piece, |t| -f(t));
    Extremum {
        t: e.t,
        value: -e.value,
    }
}

fn golden_max(f: &impl Fn(f64) -> f64, mut a: f64, mut b: f64, iters: usize) -> Extremum {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..iters {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    if fc >= fd {
        Extremum { t: c, value: fc }
    } else {
        Extremum { t: d, value: fd }
    }
}
