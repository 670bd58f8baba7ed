use super::MarketSpec;
use crate::error::{check, finite, Result};
use crate::metrics::WelfareCurve;
use crate::optimize::golden_section_min;
use crate::wind::{expected_welfare, Quadrature};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SingleMarketSolution {
    pub p_t: f64,
    pub p_r: f64,
    pub cost: f64,
    /// Objective evaluations made by the outer search over `P_r`.
    pub outer_evaluations: usize,
}

/// Day-ahead cost without a real-time market:
/// `k_t P_t + k_r P_r + E[W_c(P_t + P_v)]`, `P_v ~ N(P_r, (cv P_r)^2)`.
pub fn single_market_objective(
    p_t: f64,
    p_r: f64,
    spec: &MarketSpec,
    cv: f64,
    curve: &WelfareCurve,
    quad: &Quadrature,
) -> f64 {
    spec.k_t * p_t + spec.k_r * p_r + expected_welfare(p_r, p_t, cv * p_r, curve, quad)
}

/// Jointly convex minimization by a golden-section search over `P_r` of the
/// profile `min_{P_t} J(P_t, P_r)`, each search to 1e-4.
///
/// The two decisions are near substitutes, so alternating one-dimensional
/// searches creep along a narrow valley and stop early. The profile of a
/// jointly convex function is convex, so the nested search has no such issue.
pub fn single_market_joint(
    spec: &MarketSpec,
    cv: f64,
    curve: &WelfareCurve,
    quad: &Quadrature,
) -> Result<SingleMarketSolution> {
    check(finite(cv, "cv")? >= 0.0, "cv", "must be non-negative")?;
    let n = curve.n() as f64;
    let hi = n + 6.0 * cv * n;
    let objective = |p_t: f64, p_r: f64| single_market_objective(p_t, p_r, spec, cv, curve, quad);
    let best_pt = |p_r: f64| golden_section_min(|x| objective(x, p_r), 0.0, hi, 1e-4);
    let mut outer_evaluations = 0;
    let (p_r, _) = golden_section_min(
        |p_r| {
            outer_evaluations += 1;
            best_pt(p_r).1
        },
        0.0,
        hi,
        1e-4,
    );
    let (p_t, cost) = best_pt(p_r);
    Ok(SingleMarketSolution {
        p_t,
        p_r,
        cost,
        outer_evaluations,
    })
}
