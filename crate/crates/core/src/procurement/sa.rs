use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::{day_ahead_objective, pr_integral, real_time_dispatch, wind_score, MarketSpec, ProcurementResult};
use crate::error::{check, finite, PdlcError, Result};
use crate::metrics::WelfareCurve;
use crate::wind::{Quadrature, Scheme, WindSpec};

/// Smallest admissible wind reservation; the score is singular at zero.
const P_R_FLOOR: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Algorithm {
    /// Alternating blocks: `P_t` by sampled duals, `P_r` by quadrature.
    Alternating = 1,
    /// Joint single-sample updates of both decisions.
    Simultaneous = 2,
    /// Joint updates until `P_t` settles, then alternating blocks.
    Hybrid = 3,
}

impl Algorithm {
    pub fn from_index(index: u8) -> Option<Self> {
        match index {
            1 => Some(Self::Alternating),
            2 => Some(Self::Simultaneous),
            3 => Some(Self::Hybrid),
            _ => None,
        }
    }

    pub fn run(
        self,
        spec: &MarketSpec,
        wind: &WindSpec,
        curve: &WelfareCurve,
        cfg: &SaConfig,
    ) -> Result<ProcurementResult> {
        match self {
            Self::Alternating => sa_algorithm1(spec, wind, curve, cfg),
            Self::Simultaneous => sa_algorithm2(spec, wind, curve, cfg),
            Self::Hybrid => sa_algorithm3(spec, wind, curve, cfg),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SaConfig {
    /// Iterations per block (and total iterations of the joint scheme).
    pub max_iter: usize,
    /// Step size `alpha0 / (i + step_offset)`.
    pub alpha0: f64,
    /// Separate scale for `P_r` steps; `None` uses `alpha0`.
    pub alpha0_r: Option<f64>,
    pub step_offset: f64,
    /// Convergence threshold in packets.
    pub epsilon: f64,
    pub inner_nodes: usize,
    pub inner_scheme: Scheme,
    pub seed: u64,
    /// Cap on alternating outer iterations.
    pub max_outer: usize,
    /// Lag for the `P_t` stabilization test of the hybrid scheme.
    pub window: usize,
    /// Initial `(P_t, P_r)`; `None` starts at `(0, N / 2)`.
    pub start: Option<(f64, f64)>,
}

impl Default for SaConfig {
    fn default() -> Self {
        Self {
            max_iter: 2000,
            alpha0: 5.0,
            alpha0_r: None,
            step_offset: 0.0,
            epsilon: 0.05,
            inner_nodes: 64,
            inner_scheme: Scheme::GaussHermite,
            seed: 0,
            max_outer: 20,
            window: 50,
            start: None,
        }
    }
}

impl SaConfig {
    pub fn validate(&self) -> Result<()> {
        check(self.max_iter >= 1, "max_iter", "must be at least 1")?;
        check(finite(self.alpha0, "alpha0")? > 0.0, "alpha0", "must be positive")?;
        if let Some(a) = self.alpha0_r {
            check(finite(a, "alpha0_r")? > 0.0, "alpha0_r", "must be positive")?;
        }
        check(finite(self.step_offset, "step_offset")? >= 0.0, "step_offset", "must be non-negative")?;
        check(finite(self.epsilon, "epsilon")? > 0.0, "epsilon", "must be positive")?;
        check(self.max_outer >= 1, "max_outer", "must be at least 1")?;
        check(self.window >= 1, "window", "must be at least 1")?;
        Quadrature::new(self.inner_scheme, self.inner_nodes)?;
        if let Some((p_t, p_r)) = self.start {
            check(finite(p_t, "start")? >= 0.0, "start", "must be non-negative")?;
            check(finite(p_r, "start")? >= 0.0, "start", "must be non-negative")?;
        }
        Ok(())
    }

    fn step(&self, i: usize) -> f64 {
        self.alpha0 / (i as f64 + self.step_offset)
    }

    fn step_r(&self, i: usize) -> f64 {
        self.alpha0_r.unwrap_or(self.alpha0) / (i as f64 + self.step_offset)
    }
}

/// Shared state of one stochastic-approximation run.
struct Run<'a> {
    spec: &'a MarketSpec,
    wind: &'a WindSpec,
    curve: &'a WelfareCurve,
    cfg: &'a SaConfig,
    quad: Quadrature,
    p_max: f64,
    p_t: f64,
    p_r: f64,
    trace: Vec<(f64, f64)>,
    rt_solves: u64,
}

impl<'a> Run<'a> {
    fn new(spec: &'a MarketSpec, wind: &'a WindSpec, curve: &'a WelfareCurve, cfg: &'a SaConfig) -> Result<Self> {
        cfg.validate()?;
        let n = curve.n() as f64;
        let sigma_max = match wind.cv() {
            Some(cv) => cv * n,
            None => wind.sigma(),
        };
        let p_max = n + 6.0 * sigma_max;
        let (p_t, p_r) = cfg.start.unwrap_or((0.0, 0.5 * n));
        Ok(Self {
            spec,
            wind,
            curve,
            cfg,
            quad: Quadrature::new(cfg.inner_scheme, cfg.inner_nodes)?,
            p_max,
            p_t: p_t.min(p_max),
            p_r: p_r.clamp(P_R_FLOOR, p_max),
            trace: Vec::new(),
            rt_solves: 0,
        })
    }

    fn wind_at(&self, p_r: f64) -> WindSpec {
        self.wind.with_mean(p_r).expect("projected mean is valid")
    }

    fn sample_wind(&self, rng: &mut ChaCha8Rng) -> (WindSpec, f64) {
        let wind = self.wind_at(self.p_r);
        let z: f64 = rng.sample(StandardNormal);
        let p_v = wind.p_r + wind.sigma() * z;
        (wind, p_v)
    }

    fn project_t(&self, x: f64) -> f64 {
        x.clamp(0.0, self.p_max)
    }

    fn project_r(&self, x: f64) -> f64 {
        x.clamp(P_R_FLOOR, self.p_max)
    }

    /// One joint single-sample update.
    fn joint_step(&mut self, i: usize, rng: &mut ChaCha8Rng) {
        let k_b = self.spec.sample_k_b(rng);
        let (wind, p_v) = self.sample_wind(rng);
        let sol = real_time_dispatch(self.p_t, p_v, k_b, self.spec, self.curve);
        self.rt_solves += 1;
        let score = if wind.sigma() > 0.0 { wind_score(&wind, p_v) } else { 0.0 };
        let g_t = (1.0 - self.spec.gamma) * self.spec.k_t - sol.dual;
        let g_r = self.spec.k_r + sol.cost * score;
        self.p_t = self.project_t(self.p_t - self.cfg.step(i) * g_t);
        self.p_r = self.project_r(self.p_r - self.cfg.step_r(i) * g_r);
        self.trace.push((self.p_t, self.p_r));
    }

    /// `M` updates of `P_t` with `P_r` fixed.
    fn p_t_block(&mut self) {
        let mut rng = block_rng(self.cfg.seed, 1);
        for i in 1..=self.cfg.max_iter {
            let k_b = self.spec.sample_k_b(&mut rng);
            let (_, p_v) = self.sample_wind(&mut rng);
            let sol = real_time_dispatch(self.p_t, p_v, k_b, self.spec, self.curve);
            self.rt_solves += 1;
            let g = (1.0 - self.spec.gamma) * self.spec.k_t - sol.dual;
            self.p_t = self.project_t(self.p_t - self.cfg.step(i) * g);
            self.trace.push((self.p_t, self.p_r));
        }
    }

    /// `M` updates of `P_r` with `P_t` fixed; the wind expectation is taken
    /// by quadrature, the balancing price is sampled.
    fn p_r_block(&mut self) {
        let mut rng = block_rng(self.cfg.seed, 2);
        let per_solve = self.quad.points().len() as u64;
        for i in 1..=self.cfg.max_iter {
            let k_b = self.spec.sample_k_b(&mut rng);
            let wind = self.wind_at(self.p_r);
            let g = self.spec.k_r + pr_integral(self.p_t, k_b, &wind, self.spec, self.curve, &self.quad);
            self.rt_solves += if wind.sigma() > 0.0 { per_solve } else { 0 };
            self.p_r = self.project_r(self.p_r - self.cfg.step_r(i) * g);
            self.trace.push((self.p_t, self.p_r));
        }
    }

    /// Alternating blocks until both decisions move less than epsilon.
    fn alternate(&mut self) -> (usize, bool) {
        for outer in 1..=self.cfg.max_outer {
            let before = (self.p_t, self.p_r);
            self.p_t_block();
            self.p_r_block();
            if (self.p_t - before.0).abs() < self.cfg.epsilon && (self.p_r - before.1).abs() < self.cfg.epsilon {
                return (outer, true);
            }
        }
        (self.cfg.max_outer, false)
    }

    fn finish(self, outer_iterations: usize, phase1_iterations: usize, converged: bool) -> Result<ProcurementResult> {
        let wind = self.wind_at(self.p_r);
        let cost = day_ahead_objective(self.p_t, &wind, self.spec, self.curve, &self.quad);
        let result = ProcurementResult {
            p_t_star: self.p_t,
            p_r_star: self.p_r,
            cost,
            trace: self.trace,
            rt_solve_count: self.rt_solves,
            outer_iterations,
            phase1_iterations,
            converged,
        };
        if outer_iterations > 0 && !converged {
            return Err(PdlcError::NotConverged {
                outer: outer_iterations,
                result: Box::new(result),
            });
        }
        Ok(result)
    }
}

/// Every block of a given kind replays the same random stream, so successive
/// outer iterations differ only through the fixed decision.
fn block_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Alternating stochastic approximation. `rt_solve_count` grows by
/// `M (1 + nodes)` per outer iteration.
pub fn sa_algorithm1(
    spec: &MarketSpec,
    wind: &WindSpec,
    curve: &WelfareCurve,
    cfg: &SaConfig,
) -> Result<ProcurementResult> {
    let mut run = Run::new(spec, wind, curve, cfg)?;
    let (outer, converged) = run.alternate();
    run.finish(outer, 0, converged)
}

/// Simultaneous single-sample updates for exactly `M` iterations. The result
/// is the last iterate; it is never marked converged.
pub fn sa_algorithm2(
    spec: &MarketSpec,
    wind: &WindSpec,
    curve: &WelfareCurve,
    cfg: &SaConfig,
) -> Result<ProcurementResult> {
    let mut run = Run::new(spec, wind, curve, cfg)?;
    let mut rng = block_rng(cfg.seed, 0);
    for i in 1..=cfg.max_iter {
        run.joint_step(i, &mut rng);
    }
    run.finish(0, cfg.max_iter, false)
}

/// Simultaneous updates until `|P_t^i - P_t^{i - window}| < epsilon` (at most
/// `M` iterations), then alternating blocks from that point.
pub fn sa_algorithm3(
    spec: &MarketSpec,
    wind: &WindSpec,
    curve: &WelfareCurve,
    cfg: &SaConfig,
) -> Result<ProcurementResult> {
    let mut run = Run::new(spec, wind, curve, cfg)?;
    let mut rng = block_rng(cfg.seed, 0);
    let mut phase1 = 0;
    for i in 1..=cfg.max_iter {
        run.joint_step(i, &mut rng);
        phase1 = i;
        if i > cfg.window && (run.trace[i - 1].0 - run.trace[i - 1 - cfg.window].0).abs() < cfg.epsilon {
            break;
        }
    }
    let (outer, converged) = run.alternate();
    run.finish(outer, phase1, converged)
}
