//! Day-ahead and real-time energy procurement for a building operator that
//! buys traditional packets, reserves wind, and settles shortfalls at a
//! random balancing price.

mod dispatch;
mod sa;
mod single;
mod sweep;

use rand::Rng;

use crate::error::{check, finite, Result};
use crate::metrics::WelfareCurve;
use crate::wind::{score_function, Quadrature, WindSpec};

pub use dispatch::{real_time_dispatch, RealTimeSolution};
pub use sa::{sa_algorithm1, sa_algorithm2, sa_algorithm3, Algorithm, SaConfig};
pub use single::{single_market_joint, single_market_objective, SingleMarketSolution};
pub use sweep::{contract_sweep, ContractCell};

/// Prices of the two markets. The balancing price is discrete.
#[derive(Debug, Clone, PartialEq)]
pub struct MarketSpec {
    pub k_t: f64,
    pub k_r: f64,
    pub gamma: f64,
    balancing: Vec<(f64, f64)>,
}

impl MarketSpec {
    /// `balancing` holds `(k_b, probability)` atoms.
    pub fn new(k_t: f64, k_r: f64, gamma: f64, balancing: Vec<(f64, f64)>) -> Result<Self> {
        check(finite(k_t, "k_t")? > 0.0, "k_t", "must be positive")?;
        check(finite(k_r, "k_r")? >= 0.0, "k_r", "must be non-negative")?;
        check(
            (0.0..1.0).contains(&finite(gamma, "gamma")?),
            "gamma",
            "must lie in [0, 1)",
        )?;
        check(!balancing.is_empty(), "balancing", "need at least one price")?;
        let mut total = 0.0;
        for &(k_b, p) in &balancing {
            check(
                finite(k_b, "k_b")? > k_t,
                "k_b",
                format!("balancing price {k_b} must exceed k_t = {k_t}"),
            )?;
            check(finite(p, "probability")? > 0.0, "probability", "must be positive")?;
            total += p;
        }
        check(
            (total - 1.0).abs() < 1e-9,
            "probability",
            format!("balancing probabilities sum to {total}, not 1"),
        )?;
        Ok(Self {
            k_t,
            k_r,
            gamma,
            balancing,
        })
    }

    /// Balancing price `1.5 k_t` or `2.5 k_t` with equal odds.
    pub fn with_default_balancing(k_t: f64, k_r: f64, gamma: f64) -> Result<Self> {
        Self::new(k_t, k_r, gamma, vec![(1.5 * k_t, 0.5), (2.5 * k_t, 0.5)])
    }

    /// Wind reservation must be cheaper than traditional energy.
    pub fn check_contract(&self) -> Result<()> {
        check(
            self.k_r < self.k_t,
            "k_r",
            format!("k_r = {} must be below k_t = {}", self.k_r, self.k_t),
        )
    }

    pub fn balancing(&self) -> &[(f64, f64)] {
        &self.balancing
    }

    pub fn with_k_r(&self, k_r: f64) -> Result<Self> {
        Self::new(self.k_t, k_r, self.gamma, self.balancing.clone())
    }

    pub fn sample_k_b(&self, rng: &mut impl Rng) -> f64 {
        let u: f64 = rng.gen();
        let mut acc = 0.0;
        for &(k_b, p) in &self.balancing {
            acc += p;
            if u < acc {
                return k_b;
            }
        }
        self.balancing[self.balancing.len() - 1].0
    }
}

/// Output of the stochastic-approximation procedures.
#[derive(Debug, Clone, PartialEq)]
pub struct ProcurementResult {
    pub p_t_star: f64,
    pub p_r_star: f64,
    /// Day-ahead objective at the returned point, by quadrature.
    pub cost: f64,
    /// `(P_t, P_r)` after every iteration.
    pub trace: Vec<(f64, f64)>,
    pub rt_solve_count: u64,
    pub outer_iterations: usize,
    pub phase1_iterations: usize,
    pub converged: bool,
}

/// Log-density derivative of the wind output with respect to its mean.
pub(crate) fn wind_score(wind: &WindSpec, p_v: f64) -> f64 {
    match wind.cv() {
        Some(cv) => score_function(p_v, wind.p_r, cv),
        None => (p_v - wind.p_r) / (wind.sigma() * wind.sigma()),
    }
}

/// `E[R]` over wind and balancing price.
pub fn expected_recourse(
    p_t: f64,
    wind: &WindSpec,
    spec: &MarketSpec,
    curve: &WelfareCurve,
    quad: &Quadrature,
) -> f64 {
    spec.balancing
        .iter()
        .map(|&(k_b, p)| {
            p * quad.expect(wind.p_r, wind.sigma(), |v| {
                real_time_dispatch(p_t, v, k_b, spec, curve).cost
            })
        })
        .sum()
}

/// Day-ahead objective `k_t P_t + k_r P_r + E[R]`.
pub fn day_ahead_objective(
    p_t: f64,
    wind: &WindSpec,
    spec: &MarketSpec,
    curve: &WelfareCurve,
    quad: &Quadrature,
) -> f64 {
    spec.k_t * p_t + spec.k_r * wind.p_r + expected_recourse(p_t, wind, spec, curve, quad)
}

/// `(1 - gamma) k_t - E[mu*]`: the derivative of the day-ahead objective in
/// `P_t`. Nondecreasing in `P_t`, zero at the optimum.
pub fn day_ahead_pt_condition(
    p_t: f64,
    spec: &MarketSpec,
    wind: &WindSpec,
    curve: &WelfareCurve,
    quad: &Quadrature,
) -> f64 {
    let mean_dual: f64 = spec
        .balancing
        .iter()
        .map(|&(k_b, p)| {
            p * quad.expect(wind.p_r, wind.sigma(), |v| {
                real_time_dispatch(p_t, v, k_b, spec, curve).dual
            })
        })
        .sum();
    (1.0 - spec.gamma) * spec.k_t - mean_dual
}

/// `k_r + E[R f]`: the derivative of the day-ahead objective in `P_r`,
/// expressed through the score of the wind density.
pub fn day_ahead_pr_gradient(
    p_t: f64,
    wind: &WindSpec,
    spec: &MarketSpec,
    curve: &WelfareCurve,
    quad: &Quadrature,
) -> f64 {
    let e: f64 = spec
        .balancing
        .iter()
        .map(|&(k_b, p)| p * pr_integral(p_t, k_b, wind, spec, curve, quad))
        .sum();
    spec.k_r + e
}

/// `E_{P_v}[R f]` for one balancing price.
pub(crate) fn pr_integral(
    p_t: f64,
    k_b: f64,
    wind: &WindSpec,
    spec: &MarketSpec,
    curve: &WelfareCurve,
    quad: &Quadrature,
) -> f64 {
    if wind.sigma() == 0.0 {
        return 0.0;
    }
    quad.expect(wind.p_r, wind.sigma(), |v| {
        real_time_dispatch(p_t, v, k_b, spec, curve).cost * wind_score(wind, v)
    })
}
