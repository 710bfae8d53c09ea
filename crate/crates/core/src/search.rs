//! One-dimensional global maximization on a window: dense grid scan, then
//! golden-section refinement of every promising local maximum.

const GOLDEN: f64 = 0.618_033_988_749_894_9;
/// Refinement stops once the bracket is narrower than this.
pub const REFINE_TOLERANCE: f64 = 1e-10;
/// Refined maxima within this of the best are treated as ties.
const TIE_TOLERANCE: f64 = 1e-12;
/// Half-width of the final three-point parabolic step.
const POLISH_STEP: f64 = 1e-5;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Maximum {
    pub t: f64,
    pub value: f64,
}

fn golden_section(f: &impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> Maximum {
    let (lo, hi) = (a, b);
    let mut c = b - GOLDEN * (b - a);
    let mut d = a + GOLDEN * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > REFINE_TOLERANCE {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - GOLDEN * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + GOLDEN * (b - a);
            fd = f(d);
        }
    }
    let t = 0.5 * (a + b);
    polish(f, Maximum { t, value: f(t) }, lo, hi)
}

/// Comparing values pins a smooth maximum only to about `sqrt(eps)`; one
/// parabolic step through `t ± POLISH_STEP` recovers the remaining digits.
fn polish(f: &impl Fn(f64) -> f64, m: Maximum, lo: f64, hi: f64) -> Maximum {
    let h = POLISH_STEP;
    if m.t - h < lo || m.t + h > hi {
        return m;
    }
    let (fm, fp) = (f(m.t - h), f(m.t + h));
    let curvature = fp - 2.0 * m.value + fm;
    if curvature >= 0.0 || curvature.is_nan() {
        return m;
    }
    let shift = h * (fm - fp) / (2.0 * curvature);
    if shift.abs() >= h {
        return m;
    }
    let t = m.t + shift;
    let value = f(t);
    if value >= m.value - 4.0 * f64::EPSILON * m.value.abs() {
        Maximum { t, value }
    } else {
        m
    }
}

/// Maximizes `f` over `[lo, hi]` (or `(lo, hi]` when `open_lo`) using
/// `grid` equal intervals. Ties go to the smallest `t`.
pub fn maximize(f: impl Fn(f64) -> f64, lo: f64, hi: f64, grid: usize, open_lo: bool) -> Maximum {
    debug_assert!(hi > lo && grid >= 2);
    let h = (hi - lo) / grid as f64;
    let ts: Vec<f64> = (0..=grid).map(|i| lo + h * i as f64).collect();
    let vals: Vec<f64> = ts.iter().map(|&t| f(t)).collect();
    let first = usize::from(open_lo);

    let best_grid = vals[first..].iter().copied().fold(f64::NEG_INFINITY, f64::max);
    // keep peaks that could overtake the best one after refinement
    let threshold = best_grid - 0.25 * best_grid.abs() - 1e-300;

    let mut best = Maximum {
        t: ts[first],
        value: vals[first],
    };
    let mut consider = |cand: Maximum| {
        // candidates within two grid cells belong to the same peak
        let same_peak = (cand.t - best.t).abs() <= 2.0 * h;
        let better = if same_peak {
            cand.value > best.value
        } else {
            cand.value > best.value + TIE_TOLERANCE
                || ((cand.value - best.value).abs() <= TIE_TOLERANCE && cand.t < best.t)
        };
        if better {
            best = cand;
        }
    };
    for i in first..=grid {
        let left = if i > first { vals[i - 1] } else { f64::NEG_INFINITY };
        let right = if i < grid { vals[i + 1] } else { f64::NEG_INFINITY };
        if vals[i] < left || vals[i] < right || vals[i] < threshold {
            continue;
        }
        consider(Maximum { t: ts[i], value: vals[i] });
        let a = if i > first { ts[i - 1] } else { ts[i] };
        let b = if i < grid { ts[i + 1] } else { ts[i] };
        if b > a {
            let r = golden_section(&f, a, b);
            if r.t > lo || !open_lo {
                consider(r);
            }
        }
    }
    best
}
