//! Energy and welfare metrics of a packet reservation `m`, their integer
//! minimizers, and the piecewise-linear extension of the welfare curve to real
//! packet counts.

use rayon::prelude::*;

use crate::error::{check, finite, PdlcError, Result};
use crate::queue::{steady_state, QueueModel, QueueSolution};

/// Disutility `g(dT) = g_quad dT^2 + g_lin dT`, excess penalty `h Ex` and the
/// idle drift rate `kappa` that converts waiting time into temperature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WelfareConfig {
    pub g_quad: f64,
    pub g_lin: f64,
    pub h_price: f64,
    pub kappa: f64,
    /// Ceiling for the extrapolated welfare below one packet ($).
    pub w_cap: f64,
}

impl WelfareConfig {
    pub fn new(g_quad: f64, g_lin: f64, h_price: f64, kappa: f64, w_cap: f64) -> Result<Self> {
        check(finite(g_quad, "g_quad")? >= 0.0, "g_quad", "must be non-negative")?;
        check(finite(g_lin, "g_lin")? >= 0.0, "g_lin", "must be non-negative")?;
        check(finite(h_price, "h_price")? >= 0.0, "h_price", "must be non-negative")?;
        check(finite(kappa, "kappa")? > 0.0, "kappa", "must be positive")?;
        check(finite(w_cap, "w_cap")? > 0.0, "w_cap", "must be positive")?;
        Ok(Self {
            g_quad,
            g_lin,
            h_price,
            kappa,
            w_cap,
        })
    }

    /// Same configuration with the excess-capacity term dropped.
    pub fn waiting_only(&self) -> Self {
        Self {
            h_price: 0.0,
            ..*self
        }
    }

    pub fn disutility(&self, delta_t: f64) -> f64 {
        self.g_quad * delta_t * delta_t + self.g_lin * delta_t
    }

    fn cost(&self, sol: &QueueSolution) -> f64 {
        self.disutility(self.kappa * sol.w_extra) + self.h_price * sol.excess
    }
}

/// Relative prices of unused and missing packets in the energy metric.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyWeights {
    pub excess: f64,
    pub deficiency: f64,
}

impl Default for EnergyWeights {
    fn default() -> Self {
        Self {
            excess: 1.0,
            deficiency: 1.0,
        }
    }
}

fn solve(model: &QueueModel, m: usize) -> Result<QueueSolution> {
    steady_state(&model.with_servers(m)?)
}

/// `E(m) = Ex(m) + De(m)`.
pub fn energy_metric(model: &QueueModel, m: usize) -> Result<f64> {
    energy_metric_weighted(model, m, EnergyWeights::default())
}

pub fn energy_metric_weighted(model: &QueueModel, m: usize, weights: EnergyWeights) -> Result<f64> {
    let sol = solve(model, m)?;
    Ok(weights.excess * sol.excess + weights.deficiency * sol.deficiency)
}

pub fn welfare_metric(model: &QueueModel, m: usize, cfg: &WelfareConfig) -> Result<f64> {
    Ok(cfg.cost(&solve(model, m)?))
}

/// Scans `m = 1, 2, ...` and stops at the first increase. Valid for the convex
/// metrics here; near-equal values count as ties and keep the smaller `m`.
fn scan_convex(n: usize, mut metric: impl FnMut(usize) -> Result<f64>) -> Result<usize> {
    let tol = |v: f64| 1e-12 * v.abs().max(1.0);
    let mut best = (1, metric(1)?);
    let mut prev = best.1;
    for m in 2..=n {
        let value = metric(m)?;
        if value < best.1 - tol(best.1) {
            best = (m, value);
        }
        if value > prev + tol(prev) {
            break;
        }
        prev = value;
    }
    Ok(best.0)
}

pub fn optimize_m_energy(model: &QueueModel) -> Result<usize> {
    scan_convex(model.n_appliances, |m| energy_metric(model, m))
}

pub fn optimize_m_welfare(model: &QueueModel, cfg: &WelfareConfig) -> Result<usize> {
    scan_convex(model.n_appliances, |m| welfare_metric(model, m, cfg))
}

/// Welfare as a function of a real packet count.
///
/// Piecewise-linear through the integer samples `W(1..=N)`. Below one packet
/// the first segment is extended and clamped at the cap; above `N` every
/// extra packet is idle capacity, so the curve rises with the excess price
/// (flat when the excess term is excluded).
#[derive(Debug, Clone, PartialEq)]
pub struct WelfareCurve {
    values: Vec<f64>,
    head_slope: f64,
    tail_slope: f64,
    cap: f64,
}

impl WelfareCurve {
    pub fn from_samples(values: Vec<f64>, tail_slope: f64, cap: f64) -> Result<Self> {
        check(!values.is_empty(), "values", "need at least one sample")?;
        check(
            values.iter().all(|v| v.is_finite()),
            "values",
            "samples must be finite",
        )?;
        check(finite(tail_slope, "tail_slope")? >= 0.0, "tail_slope", "must be non-negative")?;
        let top = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        check(
            cap > top,
            "w_cap",
            format!("cap {cap} must exceed every attainable welfare value (max {top})"),
        )?;
        for k in 1..values.len().saturating_sub(1) {
            let second = values[k + 1] - 2.0 * values[k] + values[k - 1];
            let tol = 1e-9 + 1e-12 * values[k - 1].abs();
            if second < -tol {
                return Err(PdlcError::NonConvexWelfare {
                    at: k + 1,
                    second_diff: second,
                });
            }
        }
        let n = values.len();
        if n >= 2 {
            let last = values[n - 1] - values[n - 2];
            if last > tail_slope + 1e-9 + 1e-12 * values[n - 1].abs() {
                return Err(PdlcError::NonConvexWelfare {
                    at: n,
                    second_diff: tail_slope - last,
                });
            }
        }
        let head_slope = if n >= 2 { values[1] - values[0] } else { 0.0 };
        Ok(Self {
            values,
            head_slope,
            tail_slope,
            cap,
        })
    }

    /// Number of appliances, the last interpolation node.
    pub fn n(&self) -> usize {
        self.values.len()
    }

    pub fn samples(&self) -> &[f64] {
        &self.values
    }

    pub fn cap(&self) -> f64 {
        self.cap
    }

    pub fn tail_slope(&self) -> f64 {
        self.tail_slope
    }

    /// Packet count below which the extrapolation sits on the cap.
    pub fn cap_point(&self) -> Option<f64> {
        (self.head_slope < 0.0).then(|| 1.0 + (self.cap - self.values[0]) / self.head_slope)
    }

    pub fn eval(&self, y: f64) -> f64 {
        let n = self.values.len();
        if y >= n as f64 {
            return self.values[n - 1] + self.tail_slope * (y - n as f64);
        }
        if y < 1.0 {
            return (self.values[0] + self.head_slope * (y - 1.0)).min(self.cap);
        }
        let k = y.floor() as usize; // 1 <= k < n
        let frac = y - k as f64;
        self.values[k - 1] * (1.0 - frac) + self.values[k] * frac
    }

    /// Slope of the segment to the right of `y`.
    pub fn right_slope(&self, y: f64) -> f64 {
        let n = self.values.len();
        if y >= n as f64 {
            return self.tail_slope;
        }
        if y < 1.0 {
            return match self.cap_point() {
                Some(c) if y < c => 0.0,
                _ => self.head_slope,
            };
        }
        let k = y.floor() as usize;
        self.values[k] - self.values[k - 1]
    }

    /// Slope of the segment to the left of `y`.
    pub fn left_slope(&self, y: f64) -> f64 {
        let n = self.values.len();
        if y > n as f64 {
            return self.tail_slope;
        }
        if y <= 1.0 {
            return match self.cap_point() {
                Some(c) if y <= c => 0.0,
                _ => self.head_slope,
            };
        }
        let k = y.ceil() as usize; // 2 <= k <= n
        self.values[k - 1] - self.values[k - 2]
    }

    /// Kinks of the curve in increasing order.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut points: Vec<f64> = self.cap_point().into_iter().collect();
        points.extend((1..=self.values.len()).map(|k| k as f64));
        points
    }

    /// Smallest minimizer over the reals.
    pub fn argmin(&self) -> f64 {
        let mut best = (1.0, self.values[0]);
        for (k, &v) in self.values.iter().enumerate() {
            if v < best.1 {
                best = ((k + 1) as f64, v);
            }
        }
        best.0
    }
}

/// Welfare curve of a queue model. The tail slope beyond `N` is the excess
/// price, since each further packet adds one unit of idle capacity.
pub fn welfare_continuous(model: &QueueModel, cfg: &WelfareConfig) -> Result<WelfareCurve> {
    let values = (1..=model.n_appliances)
        .into_par_iter()
        .map(|m| welfare_metric(model, m, cfg))
        .collect::<Result<Vec<_>>>()?;
    WelfareCurve::from_samples(values, cfg.h_price, cfg.w_cap)
}
