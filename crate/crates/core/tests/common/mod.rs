#![allow(dead_code)]

use pdlc::metrics::{welfare_continuous, WelfareConfig, WelfareCurve};
use pdlc::procurement::{day_ahead_objective, MarketSpec, SaConfig};
use pdlc::queue::QueueModel;
use pdlc::wind::{Quadrature, WindSpec};

pub const RATE: f64 = 1.0 / 600.0;

/// Sixty appliances with ten-minute duty cycles, one-minute packets, and a
/// welfare curve that keeps the excess-capacity price.
pub fn desk_curve() -> WelfareCurve {
    let model = QueueModel::new(60, 60.0, RATE, RATE).unwrap();
    let cfg = WelfareConfig::new(10.0, 0.0, 5.0, 2.0 * RATE, 1e6).unwrap();
    welfare_continuous(&model, &cfg).unwrap()
}

pub fn desk_market() -> MarketSpec {
    MarketSpec::with_default_balancing(1.0, 0.05, 0.9).unwrap()
}

pub const DESK_CV: f64 = 0.2;

pub fn desk_sa(seed: u64) -> SaConfig {
    SaConfig {
        max_iter: 100_000,
        alpha0: 30.0,
        alpha0_r: Some(150.0),
        step_offset: 1000.0,
        window: 5000,
        seed,
        ..SaConfig::default()
    }
}

/// Day-ahead objective minimized on a 1, 0.1, 0.01 packet grid cascade, each
/// level centred on the previous optimum.
pub fn grid_optimum(spec: &MarketSpec, cv: f64, curve: &WelfareCurve, quad: &Quadrature) -> (f64, f64, f64) {
    let n = curve.n() as f64;
    let j = |p_t: f64, p_r: f64| day_ahead_objective(p_t, &WindSpec::correlated(p_r, cv).unwrap(), spec, curve, quad);
    let mut best = (0.0, 0.0, f64::INFINITY);
    let coarse = n as usize;
    for a in 0..=coarse {
        for b in 1..=coarse {
            let v = j(a as f64, b as f64);
            if v < best.2 {
                best = (a as f64, b as f64, v);
            }
        }
    }
    for step in [0.1, 0.01] {
        let (c_t, c_r) = (best.0, best.1);
        for a in -10..=10 {
            for b in -10..=10 {
                let (p_t, p_r) = (c_t + a as f64 * step, c_r + b as f64 * step);
                if p_t < 0.0 || p_r < 0.1 {
                    continue;
                }
                let v = j(p_t, p_r);
                if v < best.2 {
                    best = (p_t, p_r, v);
                }
            }
        }
    }
    best
}

/// Standard deviation of the `P_r` iterates over the last `frac` of a trace.
pub fn tail_std_pr(trace: &[(f64, f64)], frac: f64) -> f64 {
    let n = trace.len();
    let tail = &trace[n - ((n as f64 * frac) as usize).max(1)..];
    let mean = tail.iter().map(|p| p.1).sum::<f64>() / tail.len() as f64;
    (tail.iter().map(|p| (p.1 - mean).powi(2)).sum::<f64>() / tail.len() as f64).sqrt()
}

pub fn total_variation(a: &[f64], b: &[f64]) -> f64 {
    0.5 * a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>()
}
