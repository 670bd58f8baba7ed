use rayon::prelude::*;

use super::{Algorithm, MarketSpec, ProcurementResult, SaConfig};
use crate::error::{check, Result};
use crate::metrics::WelfareCurve;
use crate::wind::WindSpec;

/// One `(cv, k_r)` cell. Failures are kept so the rest of the table survives.
#[derive(Debug)]
pub struct ContractCell {
    pub cv: f64,
    pub k_r: f64,
    pub outcome: Result<ProcurementResult>,
}

/// Optimal contracts over a `cv` by `k_r` grid, rows ordered by `cv` then `k_r`.
/// Every cell uses the same seed.
pub fn contract_sweep(
    spec: &MarketSpec,
    curve: &WelfareCurve,
    cv_grid: &[f64],
    k_r_grid: &[f64],
    cfg: &SaConfig,
    algorithm: Algorithm,
) -> Result<Vec<ContractCell>> {
    check(!cv_grid.is_empty(), "cv_grid", "must not be empty")?;
    check(!k_r_grid.is_empty(), "k_r_grid", "must not be empty")?;
    let cells: Vec<(f64, f64)> = cv_grid
        .iter()
        .flat_map(|&cv| k_r_grid.iter().map(move |&k_r| (cv, k_r)))
        .collect();
    Ok(cells
        .into_par_iter()
        .map(|(cv, k_r)| {
            let outcome = spec.with_k_r(k_r).and_then(|market| {
                let wind = WindSpec::correlated(0.5 * curve.n() as f64, cv)?;
                algorithm.run(&market, &wind, curve, cfg)
            });
            ContractCell { cv, k_r, outcome }
        })
        .collect())
}
