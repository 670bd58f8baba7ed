//! Gaussian wind output, expectations over it, and the score of its density
//! with respect to the reserved mean.

use std::f64::consts::{PI, SQRT_2};
use std::num::NonZeroUsize;

use gauss_quad::hermite::GaussHermite;
use gauss_quad::legendre::GaussLegendre;

use crate::error::{check, finite, Result};
use crate::metrics::WelfareCurve;
use crate::optimize::golden_section_min;

/// Wind packets `P_v ~ N(p_r, sigma^2)`. In the correlated model the standard
/// deviation is `cv * p_r`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindSpec {
    pub p_r: f64,
    sigma: f64,
    cv: Option<f64>,
}

impl WindSpec {
    pub fn independent(p_r: f64, sigma: f64) -> Result<Self> {
        check(finite(p_r, "p_r")? >= 0.0, "p_r", "must be non-negative")?;
        check(finite(sigma, "sigma")? >= 0.0, "sigma", "must be non-negative")?;
        Ok(Self { p_r, sigma, cv: None })
    }

    pub fn correlated(p_r: f64, cv: f64) -> Result<Self> {
        check(finite(p_r, "p_r")? >= 0.0, "p_r", "must be non-negative")?;
        check(finite(cv, "cv")? >= 0.0, "cv", "must be non-negative")?;
        Ok(Self {
            p_r,
            sigma: cv * p_r,
            cv: Some(cv),
        })
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn cv(&self) -> Option<f64> {
        self.cv
    }

    pub fn is_correlated(&self) -> bool {
        self.cv.is_some()
    }

    /// Same model with a different mean; sigma follows the mean when correlated.
    pub fn with_mean(&self, p_r: f64) -> Result<Self> {
        match self.cv {
            Some(cv) => Self::correlated(p_r, cv),
            None => Self::independent(p_r, self.sigma),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    GaussHermite,
    /// 8-point Gauss–Legendre panels on `[-9, 9]` standard deviations.
    CompositeLegendre,
}

/// A rule for `E[f(Z)]` with `Z` standard normal, stored as `(z_i, w_i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Quadrature {
    scheme: Scheme,
    nodes: usize,
    points: Vec<(f64, f64)>,
}

const PANEL_NODES: usize = 8;
const TRUNCATION: f64 = 9.0;

impl Quadrature {
    pub fn new(scheme: Scheme, nodes: usize) -> Result<Self> {
        check(nodes >= 8, "nodes", "need at least 8 quadrature nodes")?;
        let points = match scheme {
            Scheme::GaussHermite => {
                let rule = GaussHermite::new(NonZeroUsize::new(nodes).expect("nodes >= 8"));
                let norm = PI.sqrt();
                rule.iter().map(|(x, w)| (SQRT_2 * x, w / norm)).collect()
            }
            Scheme::CompositeLegendre => {
                let rule = GaussLegendre::new(NonZeroUsize::new(PANEL_NODES).expect("nonzero"));
                let panels = nodes.div_ceil(PANEL_NODES);
                let width = 2.0 * TRUNCATION / panels as f64;
                let density = |z: f64| (-0.5 * z * z).exp() / (2.0 * PI).sqrt();
                let mut pts = Vec::with_capacity(panels * PANEL_NODES);
                for k in 0..panels {
                    let mid = -TRUNCATION + (k as f64 + 0.5) * width;
                    for (x, w) in rule.iter() {
                        let z = mid + 0.5 * width * x;
                        pts.push((z, 0.5 * width * w * density(z)));
                    }
                }
                pts
            }
        };
        Ok(Self {
            scheme,
            nodes,
            points,
        })
    }

    pub fn gauss_hermite(nodes: usize) -> Result<Self> {
        Self::new(Scheme::GaussHermite, nodes)
    }

    pub fn composite(nodes: usize) -> Result<Self> {
        Self::new(Scheme::CompositeLegendre, nodes)
    }

    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    pub fn nodes(&self) -> usize {
        self.nodes
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    /// `E[f(mean + sigma Z)]`.
    pub fn expect(&self, mean: f64, sigma: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
        if sigma == 0.0 {
            return f(mean);
        }
        self.points
            .iter()
            .map(|&(z, w)| w * f(mean + sigma * z))
            .sum()
    }
}

impl Default for Quadrature {
    fn default() -> Self {
        Self::gauss_hermite(64).expect("64 nodes is valid")
    }
}

/// `E[W_c(p_t + P_v)]` with `P_v ~ N(p_r, sigma^2)`.
pub fn expected_welfare(p_r: f64, p_t: f64, sigma: f64, curve: &WelfareCurve, quad: &Quadrature) -> f64 {
    quad.expect(p_r + p_t, sigma, |y| curve.eval(y))
}

/// Cheapest traditional purchase `P_t` in `[0, N + 6 sigma]` for a given wind
/// distribution, at unit price `k_t`.
pub fn optimal_pt_given_wind(
    p_r: f64,
    sigma: f64,
    curve: &WelfareCurve,
    k_t: f64,
    quad: &Quadrature,
) -> f64 {
    let hi = curve.n() as f64 + 6.0 * sigma;
    let objective = |p_t: f64| k_t * p_t + expected_welfare(p_r, p_t, sigma, curve, quad);
    golden_section_min(objective, 0.0, hi, 1e-4).0
}

/// Optimal expected welfare `F(p_r, sigma)` when traditional energy is free.
#[allow(non_snake_case)]
pub fn optimal_cost_F(p_r: f64, sigma: f64, curve: &WelfareCurve, quad: &Quadrature) -> f64 {
    let p_t = optimal_pt_given_wind(p_r, sigma, curve, 0.0, quad);
    expected_welfare(p_r, p_t, sigma, curve, quad)
}

/// Derivative of `ln N(p_v; p_r, (cv p_r)^2)` with respect to `p_r`.
pub fn score_function(p_v: f64, p_r: f64, cv: f64) -> f64 {
    (p_v * (p_v - p_r) / (cv * cv * p_r * p_r) - 1.0) / p_r
}
