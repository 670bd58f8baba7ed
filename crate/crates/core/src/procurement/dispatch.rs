use super::MarketSpec;
use crate::metrics::WelfareCurve;

/// Real-time decision after wind is observed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RealTimeSolution {
    /// Reserved traditional packets actually used.
    pub x1: f64,
    /// Balancing packets bought.
    pub x2: f64,
    /// `k_b x2 - gamma k_t (P_t - x1) + W_c(x1 + x2 + P_v)`.
    pub cost: f64,
    /// Multiplier of `x1 <= P_t`: value of one more reserved packet.
    pub dual: f64,
}

/// Solves
/// `min k_b x2 - gamma k_t (p_t - x1) + W_c(x1 + x2 + p_v)`
/// over `0 <= x1 <= p_t`, `x2 >= 0`.
///
/// With `y = x1 + x2 + p_v` the problem is one-dimensional: reserved packets
/// cost `gamma k_t` each (forgone credit) up to `p_t`, then balancing packets
/// cost `k_b`. The objective is piecewise linear in `y`, so its minimum sits
/// at `p_v`, at `p_v + p_t` or at a kink of the welfare curve. Ties go to the
/// smallest `y`.
pub fn real_time_dispatch(
    p_t: f64,
    p_v: f64,
    k_b: f64,
    spec: &MarketSpec,
    curve: &WelfareCurve,
) -> RealTimeSolution {
    let c1 = spec.gamma * spec.k_t;
    let z = match curve.cap_point() {
        Some(c) if p_v < c => scan_minimizer(p_t, p_v, k_b, c1, curve) - p_v,
        _ => {
            // convex from here on: walk the slopes instead of the kinks
            let full = p_v + p_t;
            let reserve_stop = first_flat_enough(curve, p_v, c1);
            if reserve_stop < full {
                reserve_stop - p_v
            } else {
                p_t + (first_flat_enough(curve, full, k_b) - full)
            }
        }
    };
    solution_at(z, p_t, p_v, k_b, c1, curve)
}

fn phi(z: f64, p_t: f64, p_v: f64, k_b: f64, c1: f64, curve: &WelfareCurve) -> f64 {
    c1 * z.min(p_t) + k_b * (z - p_t).max(0.0) + curve.eval(p_v + z)
}

/// `z` is the total purchase `x1 + x2`. Values within rounding of `p_t` are
/// taken as exactly `p_t` so the binding case keeps its multiplier.
fn solution_at(z: f64, p_t: f64, p_v: f64, k_b: f64, c1: f64, curve: &WelfareCurve) -> RealTimeSolution {
    let z = if (z - p_t).abs() <= 1e-12 * (1.0 + p_v.abs() + p_t) {
        p_t
    } else {
        z.max(0.0)
    };
    let x1 = z.min(p_t);
    let x2 = (z - p_t).max(0.0);
    let dual = if x2 > 0.0 {
        k_b - c1
    } else if x1 == p_t {
        let d = -curve.right_slope(p_v + z);
        (d.min(k_b) - c1).max(0.0)
    } else {
        0.0
    };
    RealTimeSolution {
        x1,
        x2,
        cost: phi(z, p_t, p_v, k_b, c1, curve) - c1 * p_t,
        dual,
    }
}

/// Smallest `y >= from` where the curve falls no faster than `price`, on the
/// convex part of the curve.
fn first_flat_enough(curve: &WelfareCurve, from: f64, price: f64) -> f64 {
    if curve.right_slope(from) >= -price {
        return from;
    }
    let n = curve.n();
    let v = curve.samples();
    // integer kinks above `from`; the right slope at N is the tail slope >= 0
    let mut lo = (from.floor().max(0.0) as usize + 1).max(1);
    let mut hi = n;
    if lo >= hi {
        return hi.max(lo) as f64;
    }
    while lo < hi {
        let mid = (lo + hi) / 2;
        if v[mid] - v[mid - 1] >= -price {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    lo as f64
}

/// Evaluates every kink and both ends of the reserve segment. Also covers the
/// non-convex capped stretch far below one packet.
pub(crate) fn scan_minimizer(p_t: f64, p_v: f64, k_b: f64, c1: f64, curve: &WelfareCurve) -> f64 {
    let f = |y: f64| phi(y - p_v, p_t, p_v, k_b, c1, curve);
    let cap = curve.cap_point().filter(|&c| c > p_v);
    let first_int = (p_v.floor().max(0.0) as usize + 1).max(1);
    let candidates = || {
        [p_v, p_v + p_t]
            .into_iter()
            .chain(cap)
            .chain((first_int..=curve.n()).map(|k| k as f64))
    };
    let best = candidates().map(f).fold(f64::INFINITY, f64::min);
    let level = best + 1e-12 * best.abs().max(1.0);
    candidates()
        .filter(|&y| f(y) <= level)
        .fold(f64::INFINITY, f64::min)
}

/// Reference solution by exhaustive kink evaluation.
#[cfg(test)]
pub(crate) fn real_time_dispatch_scan(
    p_t: f64,
    p_v: f64,
    k_b: f64,
    spec: &MarketSpec,
    curve: &WelfareCurve,
) -> RealTimeSolution {
    let c1 = spec.gamma * spec.k_t;
    solution_at(scan_minimizer(p_t, p_v, k_b, c1, curve) - p_v, p_t, p_v, k_b, c1, curve)
}
