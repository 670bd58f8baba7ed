//! Steady state of the binary-information closed queue.
//!
//! `N` appliances cycle between idle and requesting. Idle appliances request
//! at rate `lambda`; each of the `min(x, m)` served appliances leaves at the
//! effective rate `nu = (1 - exp(-mu delta)) / delta`, the per-interval
//! departure probability spread over the packet length. The stationary
//! distribution is a product form in `r = lambda / nu`.

use rayon::prelude::*;

use crate::error::{check, finite, PdlcError, Result};

const MAX_POPULATION: usize = 1_000_000;

/// Population and rates of the closed network, without the server count.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QueueModel {
    pub n_appliances: usize,
    /// Packet length (s).
    pub delta: f64,
    /// Idle-to-request rate (1/s).
    pub lambda: f64,
    /// Duty-on completion rate (1/s).
    pub mu: f64,
}

impl QueueModel {
    pub fn new(n_appliances: usize, delta: f64, lambda: f64, mu: f64) -> Result<Self> {
        check(n_appliances >= 1, "n_appliances", "must be at least 1")?;
        if n_appliances > MAX_POPULATION {
            return Err(PdlcError::PopulationTooLarge(n_appliances));
        }
        check(finite(delta, "delta")? > 0.0, "delta", "must be positive")?;
        check(finite(lambda, "lambda")? > 0.0, "lambda", "must be positive")?;
        check(finite(mu, "mu")? > 0.0, "mu", "must be positive")?;
        Ok(Self {
            n_appliances,
            delta,
            lambda,
            mu,
        })
    }

    pub fn with_servers(&self, m_servers: usize) -> Result<QueueParams> {
        QueueParams::new(self.n_appliances, m_servers, self.delta, self.lambda, self.mu)
    }

    /// Per-server departure rate of the packetized process.
    pub fn service_rate(&self) -> f64 {
        effective_service_rate(self.mu, self.delta)
    }

    pub fn ratio(&self) -> f64 {
        packet_ratio(self.lambda, self.mu, self.delta)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QueueParams {
    pub n_appliances: usize,
    pub m_servers: usize,
    pub delta: f64,
    pub lambda: f64,
    pub mu: f64,
}

impl QueueParams {
    pub fn new(
        n_appliances: usize,
        m_servers: usize,
        delta: f64,
        lambda: f64,
        mu: f64,
    ) -> Result<Self> {
        let model = QueueModel::new(n_appliances, delta, lambda, mu)?;
        check(
            (1..=n_appliances).contains(&m_servers),
            "m_servers",
            format!("must lie in [1, {n_appliances}], got {m_servers}"),
        )?;
        Ok(Self {
            n_appliances,
            m_servers,
            delta: model.delta,
            lambda: model.lambda,
            mu: model.mu,
        })
    }

    pub fn model(&self) -> QueueModel {
        QueueModel {
            n_appliances: self.n_appliances,
            delta: self.delta,
            lambda: self.lambda,
            mu: self.mu,
        }
    }

    pub fn service_rate(&self) -> f64 {
        effective_service_rate(self.mu, self.delta)
    }
}

/// `(1 - exp(-mu delta)) / delta`, evaluated without cancellation for small `mu delta`.
pub fn effective_service_rate(mu: f64, delta: f64) -> f64 {
    -(-mu * delta).exp_m1() / delta
}

/// `r = lambda delta / (1 - exp(-mu delta))`; tends to `lambda / mu` as `delta -> 0`.
pub fn packet_ratio(lambda: f64, mu: f64, delta: f64) -> f64 {
    lambda / effective_service_rate(mu, delta)
}

#[derive(Debug, Clone, PartialEq)]
pub struct QueueSolution {
    /// Distribution of the number of requesting appliances, `x = 0..=N`.
    pub p: Vec<f64>,
    /// Distribution of the number served, `n = 0..=m`; the mass at `m` aggregates the tail.
    pub p_served: Vec<f64>,
    pub q_mean: f64,
    /// Effective arrival rate `lambda (N - Q)` (1/s).
    pub lambda_ave: f64,
    /// Mean sojourn from request to final departure (s).
    pub s_time: f64,
    /// Extra time over the uncontrolled on time, `S - 1/mu` (s).
    pub w_extra: f64,
    pub var_served: f64,
    pub excess: f64,
    pub deficiency: f64,
    /// Completed duty cycles per second, `nu (m - Ex)`.
    pub throughput: f64,
}

pub fn steady_state(params: &QueueParams) -> Result<QueueSolution> {
    let n = params.n_appliances;
    let m = params.m_servers;
    let r = packet_ratio(params.lambda, params.mu, params.delta);
    let ln_r = r.ln();

    // log weights by the birth-death ratio p(x+1)/p(x) = (N - x) r / min(x + 1, m)
    let mut logw = Vec::with_capacity(n + 1);
    logw.push(0.0);
    for x in 0..n {
        let next = logw[x] + ((n - x) as f64).ln() + ln_r - (((x + 1).min(m)) as f64).ln();
        logw.push(next);
    }
    let peak = logw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut p: Vec<f64> = logw.iter().map(|lw| (lw - peak).exp()).collect();
    let total: f64 = p.iter().sum();
    p.iter_mut().for_each(|v| *v /= total);

    let mut p_served = vec![0.0; m + 1];
    for (x, px) in p.iter().enumerate() {
        p_served[x.min(m)] += px;
    }

    let q_mean: f64 = p.iter().enumerate().map(|(x, px)| x as f64 * px).sum();
    let excess: f64 = p[..m]
        .iter()
        .enumerate()
        .map(|(x, px)| (m - x) as f64 * px)
        .sum();
    let deficiency: f64 = p[m + 1..]
        .iter()
        .enumerate()
        .map(|(k, px)| (k + 1) as f64 * px)
        .sum();
    let served_mean: f64 = p_served.iter().enumerate().map(|(k, pk)| k as f64 * pk).sum();
    let var_served: f64 = p_served
        .iter()
        .enumerate()
        .map(|(k, pk)| (k as f64 - served_mean).powi(2) * pk)
        .sum();

    let lambda_ave = params.lambda * (n as f64 - q_mean);
    let s_time = q_mean / lambda_ave;
    let mut w_extra = s_time - 1.0 / params.mu;
    if w_extra < 0.0 && w_extra > -1e-9 {
        w_extra = 0.0;
    }
    Ok(QueueSolution {
        p,
        p_served,
        q_mean,
        lambda_ave,
        s_time,
        w_extra,
        var_served,
        excess,
        deficiency,
        throughput: params.service_rate() * (m as f64 - excess),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TradeoffRow {
    pub m: usize,
    pub delta: f64,
    pub var_served: f64,
    pub w_extra: f64,
}

/// Steady-state variance and extra waiting time over an `(m, delta)` grid,
/// rows ordered with `m` outer and `delta` inner.
pub fn tradeoff_sweep(
    base: &QueueModel,
    m_grid: &[usize],
    delta_grid: &[f64],
) -> Result<Vec<TradeoffRow>> {
    check(!m_grid.is_empty(), "m_grid", "must not be empty")?;
    check(!delta_grid.is_empty(), "delta_grid", "must not be empty")?;
    let points: Vec<(usize, f64)> = m_grid
        .iter()
        .flat_map(|&m| delta_grid.iter().map(move |&d| (m, d)))
        .collect();
    points
        .par_iter()
        .map(|&(m, delta)| {
            let qp = QueueParams::new(base.n_appliances, m, delta, base.lambda, base.mu)?;
            let sol = steady_state(&qp)?;
            Ok(TradeoffRow {
                m,
                delta,
                var_served: sol.var_served,
                w_extra: sol.w_extra,
            })
        })
        .collect()
}
