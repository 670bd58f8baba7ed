//! One-dimensional minimization helpers.

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Golden-section search for a unimodal `f` on `[lo, hi]`, followed by a
/// bisection towards `lo` so that flat minima resolve to their left end.
/// Returns `(x, f(x))` with `x` within `tol` of the smallest minimizer.
pub fn golden_section_min(mut f: impl FnMut(f64) -> f64, lo: f64, hi: f64, tol: f64) -> (f64, f64) {
    debug_assert!(lo <= hi && tol > 0.0);
    let (mut a, mut b) = (lo, hi);
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > tol {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    let mut best = (0.5 * (a + b), f(0.5 * (a + b)));
    for x in [lo, hi] {
        let fx = f(x);
        if fx < best.1 || (fx == best.1 && x < best.0) {
            best = (x, fx);
        }
    }
    leftmost_within(&mut f, lo, best, tol)
}

/// Smallest `x` in `[lo, best.0]` with `f(x)` not above the best value plus a
/// relative tie tolerance, found by bisection on the convex level set.
fn leftmost_within(f: &mut impl FnMut(f64) -> f64, lo: f64, best: (f64, f64), tol: f64) -> (f64, f64) {
    let level = best.1 + 1e-12 * best.1.abs().max(1.0);
    let f_lo = f(lo);
    if f_lo <= level {
        return (lo, f_lo);
    }
    let (mut out, mut inside) = (lo, best);
    while inside.0 - out > 0.5 * tol {
        let mid = 0.5 * (out + inside.0);
        let fm = f(mid);
        if fm <= level {
            inside = (mid, fm);
        } else {
            out = mid;
        }
    }
    inside
}
