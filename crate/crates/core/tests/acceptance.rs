//! Acceptance suite. Prints one PASS/FAIL line per criterion (runtime limits
//! included) and exits non-zero if any criterion fails.

mod common;

use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::*;
use pdlc::metrics::{energy_metric, optimize_m_welfare, welfare_metric, WelfareConfig, WelfareCurve};
use pdlc::procurement::{
    contract_sweep, real_time_dispatch, sa_algorithm1, sa_algorithm2, sa_algorithm3, Algorithm, MarketSpec, SaConfig,
};
use pdlc::queue::{effective_service_rate, steady_state, tradeoff_sweep, QueueModel, QueueParams};
use pdlc::sim::{simulate_binary, simulate_full_info, Horizon, SimConfig, Timing};
use pdlc::thermal::{find_feasible_delta, min_packets, ApplianceState, OccupantPrefs, ThermalParams};
use pdlc::wind::{optimal_cost_F, score_function, Quadrature};

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: String) -> Verdict {
    Verdict { pass, detail }
}

/// Stationary vector of the explicit generator, by a dense linear solve.
fn generator_stationary(qp: &QueueParams) -> Vec<f64> {
    let n = qp.n_appliances;
    let nu = effective_service_rate(qp.mu, qp.delta);
    let mut q = DMatrix::<f64>::zeros(n + 1, n + 1);
    for x in 0..=n {
        if x < n {
            q[(x, x + 1)] = (n - x) as f64 * qp.lambda;
        }
        if x > 0 {
            q[(x, x - 1)] = x.min(qp.m_servers) as f64 * nu;
        }
        let out: f64 = (0..=n).filter(|&y| y != x).map(|y| q[(x, y)]).sum();
        q[(x, x)] = -out;
    }
    // pi Q = 0 with sum(pi) = 1: transpose and replace one balance row
    let mut a = q.transpose();
    for j in 0..=n {
        a[(n, j)] = 1.0;
    }
    let mut b = DVector::<f64>::zeros(n + 1);
    b[n] = 1.0;
    a.lu().solve(&b).expect("generator is irreducible").iter().copied().collect()
}

fn c1() -> Verdict {
    let mut worst: f64 = 0.0;
    let mut cases = 0;
    for n in 1..=6 {
        for m in 1..=n {
            for delta in [1.0, 60.0, 600.0] {
                for ratio in [0.2, 1.0, 5.0] {
                    let mu = RATE;
                    let qp = QueueParams::new(n, m, delta, ratio * mu, mu).unwrap();
                    let exact = generator_stationary(&qp);
                    let sol = steady_state(&qp).unwrap();
                    for (a, b) in sol.p.iter().zip(&exact) {
                        worst = worst.max((a - b).abs());
                    }
                    cases += 1;
                }
            }
        }
    }
    verdict(worst < 1e-10, format!("{cases} cases, max |p - p_generator| = {worst:.2e} (limit 1e-10)"))
}

fn c2() -> Verdict {
    let qp = QueueParams::new(20, 10, 60.0, RATE, RATE).unwrap();
    let exact = steady_state(&qp).unwrap();
    let rep = simulate_binary(&qp, &SimConfig::new(Horizon::Events(1_000_000), 2024)).unwrap();
    let tv = total_variation(&rep.empirical_p, &exact.p);
    let z = (rep.empirical_w - exact.w_extra).abs() / rep.w_std_err;
    let pass = tv < 0.01 && z <= 3.0;
    // context: the same chain with continuous service, and shorter packets
    let cont = simulate_binary(
        &qp,
        &SimConfig {
            timing: Timing::Continuous,
            ..SimConfig::new(Horizon::Events(1_000_000), 2024)
        },
    )
    .unwrap();
    let tv_cont = total_variation(&cont.empirical_p, &exact.p);
    let short = QueueParams::new(20, 10, 6.0, RATE, RATE).unwrap();
    let short_rep = simulate_binary(&short, &SimConfig::new(Horizon::Events(1_000_000), 2024)).unwrap();
    let tv_short = total_variation(&short_rep.empirical_p, &steady_state(&short).unwrap().p);
    verdict(
        pass,
        format!(
            "slotted TV = {tv:.4} (limit 0.01), W = {:.2} s vs analytic {:.2} s ({z:.1} SE, limit 3); \
             continuous-service TV = {tv_cont:.4}, slotted TV at delta = 6 s: {tv_short:.4}",
            rep.empirical_w, exact.w_extra
        ),
    )
}

fn c3() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (mut flow, mut chain, mut energy): (f64, f64, f64) = (0.0, 0.0, 0.0);
    for _ in 0..200 {
        let n = rng.gen_range(1..=200);
        let m = rng.gen_range(1..=n);
        let delta = rng.gen_range(1.0..600.0);
        let lambda = 1.0 / rng.gen_range(60.0..3600.0);
        let mu = 1.0 / rng.gen_range(60.0..3600.0);
        let qp = QueueParams::new(n, m, delta, lambda, mu).unwrap();
        let s = steady_state(&qp).unwrap();
        let nu = effective_service_rate(mu, delta);
        let (n, m) = (n as f64, m as f64);
        flow = flow.max((lambda * (n - s.q_mean) - nu * (m - s.excess)).abs() / lambda.max(nu));
        chain = chain
            .max((s.deficiency - (s.q_mean - m + s.excess)).abs())
            .max((s.q_mean - (n - nu / lambda * (m - s.excess))).abs());
        let rho = lambda / nu;
        let e = energy_metric(&qp.model(), qp.m_servers).unwrap();
        energy = energy.max((e - ((1.0 + 2.0 * rho) * s.q_mean + m - 2.0 * rho * n)).abs());
    }
    let worst = flow.max(chain).max(energy);
    verdict(
        worst < 1e-9,
        format!("200 draws: flow balance {flow:.1e}, De/Q chain {chain:.1e}, energy identity {energy:.1e} (limit 1e-9)"),
    )
}

fn c4() -> Verdict {
    let model = QueueModel::new(20, 60.0, RATE, RATE).unwrap();
    let m_grid: Vec<usize> = (1..=10).map(|k| 2 * k).collect();
    let delta_grid: Vec<f64> = (1..=10).map(|k| 60.0 * k as f64).collect();
    let rows = tradeoff_sweep(&model, &m_grid, &delta_grid).unwrap();
    let mut violations = 0;
    let mut worst: f64 = 0.0;
    for chunk in rows.chunks(delta_grid.len()) {
        for pair in chunk.windows(2) {
            let dv = pair[1].var_served - pair[0].var_served;
            let dw = pair[0].w_extra - pair[1].w_extra;
            for d in [dv, dw] {
                if d > 1e-9 {
                    violations += 1;
                    worst = worst.max(d);
                }
            }
        }
    }
    verdict(
        violations == 0,
        format!("{} rows, {violations} violations of Var down / W up in delta (worst {worst:.1e})", rows.len()),
    )
}

fn c5() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst = f64::INFINITY;
    for _ in 0..50 {
        let n = rng.gen_range(3..=60);
        let model = QueueModel::new(
            n,
            rng.gen_range(1.0..600.0),
            1.0 / rng.gen_range(60.0..3600.0),
            1.0 / rng.gen_range(60.0..3600.0),
        )
        .unwrap();
        let cfg = WelfareConfig::new(
            rng.gen_range(0.0..20.0),
            rng.gen_range(0.0..5.0),
            rng.gen_range(0.0..10.0),
            1.0 / rng.gen_range(100.0..2000.0),
            1e9,
        )
        .unwrap();
        let mut series = vec![Vec::new(); 5];
        for m in 1..=n {
            let s = steady_state(&model.with_servers(m).unwrap()).unwrap();
            series[0].push(s.excess);
            series[1].push(s.deficiency);
            series[2].push(s.excess + s.deficiency);
            series[3].push(s.w_extra);
            series[4].push(welfare_metric(&model, m, &cfg).unwrap());
        }
        for v in &series {
            for w in v.windows(3) {
                worst = worst.min(w[0] - 2.0 * w[1] + w[2]);
            }
        }
    }
    verdict(
        worst >= -1e-9,
        format!("50 configs, min second difference of Ex, De, E, W, welfare = {worst:.2e} (limit -1e-9)"),
    )
}

fn c6() -> Verdict {
    let curve = desk_curve();
    let quad = Quadrature::default();
    let mut worst: f64 = 0.0;
    for p_r in [5.0, 15.0, 25.0, 35.0, 45.0] {
        let f: Vec<f64> = [0.0, 2.0, 4.0, 6.0, 8.0]
            .iter()
            .map(|&s| optimal_cost_F(p_r, s, &curve, &quad))
            .collect();
        for w in f.windows(2) {
            worst = worst.max(w[0] - w[1]);
        }
    }
    for k in [0.05, 0.1, 0.2, 0.3] {
        let f: Vec<f64> = [5.0, 15.0, 25.0, 35.0, 45.0]
            .iter()
            .map(|&p| optimal_cost_F(p, k * p, &curve, &quad))
            .collect();
        for w in f.windows(2) {
            worst = worst.max(w[0] - w[1]);
        }
    }
    verdict(worst <= 1e-8, format!("largest decrease of F along sigma or P_r = {worst:.2e} (limit 1e-8)"))
}

fn c7() -> Verdict {
    let quad = Quadrature::default();
    let mut worst: f64 = 0.0;
    for p_r in [1.0, 5.0, 20.0, 50.0, 200.0] {
        for k in [0.05, 0.1, 0.2, 0.3] {
            let mean = quad.expect(p_r, k * p_r, |v| score_function(v, p_r, k));
            worst = worst.max(mean.abs());
        }
    }
    verdict(worst < 1e-8, format!("20 pairs, max |E f| = {worst:.2e} (limit 1e-8)"))
}

fn random_curve(rng: &mut ChaCha8Rng) -> WelfareCurve {
    let n = rng.gen_range(3..30);
    let mut slope: f64 = -rng.gen_range(5.0..50.0);
    let mut v = vec![rng.gen_range(100.0..500.0)];
    for _ in 1..n {
        v.push(v[v.len() - 1] + slope);
        slope = (slope + rng.gen_range(0.0..4.0)).min(0.0);
    }
    let tail = rng.gen_range(0.0..2.0);
    WelfareCurve::from_samples(v, tail, 1e6).unwrap()
}

fn c8() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let (mut beaten, mut slack, mut stationarity): (usize, f64, f64) = (0, 0.0, 0.0);
    for _ in 0..100 {
        let curve = random_curve(&mut rng);
        let n = curve.n() as f64;
        let k_t = rng.gen_range(0.5..5.0);
        let gamma = rng.gen_range(0.0..0.99);
        let k_b = k_t * rng.gen_range(1.01..4.0);
        let spec = MarketSpec::new(k_t, 0.0, gamma, vec![(k_b, 1.0)]).unwrap();
        let p_t = rng.gen_range(0.0..n);
        let p_v = rng.gen_range(-5.0..n + 5.0);
        let sol = real_time_dispatch(p_t, p_v, k_b, &spec, &curve);
        let c1 = gamma * k_t;
        let cost = |x1: f64, x2: f64| k_b * x2 - c1 * (p_t - x1) + curve.eval(x1 + x2 + p_v);
        let own = cost(sol.x1, sol.x2);
        for _ in 0..10_000 {
            let x1 = rng.gen_range(0.0..=p_t);
            let x2 = rng.gen_range(0.0..n + 10.0);
            if cost(x1, x2) < own - 1e-9 * own.abs().max(1.0) {
                beaten += 1;
            }
        }
        slack = slack.max((sol.dual * (sol.x1 - p_t)).abs());
        // a common subgradient g of W at y must satisfy both stationarity rows
        let mut y = sol.x1 + sol.x2 + p_v;
        if (y - y.round()).abs() < 1e-9 {
            // reconstructed y carries roundoff; read the slopes at the kink itself
            y = y.round();
        }
        let (mut lo, mut hi) = (curve.left_slope(y), curve.right_slope(y));
        let g1 = -c1 - sol.dual;
        if sol.x1 > 0.0 {
            lo = lo.max(g1);
            hi = hi.min(g1);
        } else {
            lo = lo.max(g1);
        }
        if sol.x2 > 0.0 {
            lo = lo.max(-k_b);
            hi = hi.min(-k_b);
        } else {
            lo = lo.max(-k_b);
        }
        stationarity = stationarity.max(lo - hi);
    }
    verdict(
        beaten == 0 && slack < 1e-8 && stationarity < 1e-8,
        format!(
            "100 instances x 1e4 points: {beaten} better points, max |dual (x1 - P_t)| = {slack:.1e}, \
             stationarity residual = {stationarity:.1e}"
        ),
    )
}

fn c9() -> Verdict {
    let curve = desk_curve();
    let spec = desk_market();
    let wind = pdlc::wind::WindSpec::correlated(30.0, DESK_CV).unwrap();
    let (g_t, g_r, _) = grid_optimum(&spec, DESK_CV, &curve, &Quadrature::composite(2000).unwrap());
    let cfg = desk_sa(0);
    let a1 = sa_algorithm1(&spec, &wind, &curve, &cfg).unwrap();
    let a3 = sa_algorithm3(&spec, &wind, &curve, &cfg).unwrap();
    let a2 = sa_algorithm2(&spec, &wind, &curve, &cfg).unwrap();
    let eps = cfg.epsilon;
    let close = |r: &pdlc::procurement::ProcurementResult| {
        (r.p_t_star - g_t).abs() <= 2.0 * eps && (r.p_r_star - g_r).abs() <= 2.0 * eps
    };
    let sd2 = tail_std_pr(&a2.trace, 0.2);
    let sd3 = tail_std_pr(&a3.trace, 0.2);
    let pass = close(&a1) && close(&a3) && sd2 > eps && sd3 < eps / 5.0;
    verdict(
        pass,
        format!(
            "grid ({g_t:.2}, {g_r:.2}); alg 1 ({:.3}, {:.3}); alg 3 ({:.3}, {:.3}); \
             P_r tail std alg 2 {sd2:.3} (> {eps}), alg 3 {sd3:.4} (< {}); \
             real-time solves alg 1 {} vs alg 3 {}, alg 3 phase-2 outers {}",
            a1.p_t_star,
            a1.p_r_star,
            a3.p_t_star,
            a3.p_r_star,
            eps / 5.0,
            a1.rt_solve_count,
            a3.rt_solve_count,
            a3.outer_iterations
        ),
    )
}

fn c10() -> Verdict {
    let curve = desk_curve();
    let spec = desk_market();
    let cvs = [0.05, 0.10, 0.15, 0.20, 0.25, 0.30];
    let k_rs: Vec<f64> = [0.02, 0.04, 0.06, 0.08, 0.10].iter().map(|k| k * spec.k_t).collect();
    let cfg = SaConfig {
        max_iter: 30_000,
        seed: 7,
        ..desk_sa(7)
    };
    let cells = contract_sweep(&spec, &curve, &cvs, &k_rs, &cfg, Algorithm::Hybrid).unwrap();
    let failed = cells.iter().filter(|c| c.outcome.is_err()).count();
    if failed > 0 {
        return verdict(false, format!("{failed} cells failed"));
    }
    let at = |i: usize, j: usize| cells[i * k_rs.len() + j].outcome.as_ref().unwrap();
    let mut bad = Vec::new();
    for j in 0..k_rs.len() {
        for i in 1..cvs.len() {
            let (a, b) = (at(i - 1, j), at(i, j));
            if b.p_r_star > a.p_r_star {
                bad.push(format!("P_r up in cv at k_r {}", k_rs[j]));
            }
            if b.p_t_star < a.p_t_star {
                bad.push(format!("P_t down in cv at k_r {}", k_rs[j]));
            }
            if b.p_t_star + b.p_r_star < a.p_t_star + a.p_r_star {
                bad.push(format!("total down in cv at k_r {}", k_rs[j]));
            }
        }
    }
    for i in 0..cvs.len() {
        for j in 1..k_rs.len() {
            if at(i, j).p_r_star > at(i, j - 1).p_r_star {
                bad.push(format!("P_r up in k_r at cv {}", cvs[i]));
            }
        }
    }
    let first = at(0, 0);
    let last = at(cvs.len() - 1, 0);
    verdict(
        bad.is_empty(),
        format!(
            "30 cells; P_r {:.2} -> {:.2}, P_t {:.2} -> {:.2} from cv 0.05 to 0.30 at k_r 0.02; violations: {}",
            first.p_r_star,
            last.p_r_star,
            first.p_t_star,
            last.p_t_star,
            if bad.is_empty() { "none".to_string() } else { bad.join("; ") }
        ),
    )
}

fn c11() -> Verdict {
    let params = ThermalParams::new(32.0, 16.0, 3600.0, 0.0, 3.0).unwrap();
    let prefs: Vec<OccupantPrefs> = (0..20)
        .map(|i| OccupantPrefs::new(22.0 + 3.0 * i as f64 / 19.0, 1.0).unwrap())
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let fleet: Vec<ApplianceState> = prefs
        .iter()
        .enumerate()
        .map(|(i, p)| ApplianceState::new(i, rng.gen_range(p.lower()..=p.upper())))
        .collect();
    let m = min_packets(&prefs, &params).unwrap();
    let day = 86_400.0;
    let delta = find_feasible_delta(&fleet, &prefs, &params, m, day).unwrap();
    let rep = simulate_full_info(&fleet, &prefs, &params, m, delta, &SimConfig::new(Horizon::Seconds(day), 0)).unwrap();
    let exact = rep.packet_grants.iter().all(|&g| g == m);
    verdict(
        rep.band_violations == 0 && exact,
        format!(
            "m = {m}, delta = {delta:.2} s, {} intervals, {} band violations, grants always m: {exact}",
            rep.packet_grants.len(),
            rep.band_violations
        ),
    )
}

fn c12() -> Verdict {
    let model = QueueModel::new(60, 10.0, RATE, RATE).unwrap();
    let cfg = WelfareConfig::new(100.0, 0.0, 0.1, 2.0 * RATE, 1e6).unwrap();
    let m_star = optimize_m_welfare(&model, &cfg).unwrap();
    let mut parts = Vec::new();
    let mut pass = true;
    for m in [m_star - 1, m_star, m_star + 1] {
        let qp = model.with_servers(m).unwrap();
        let rep = simulate_binary(&qp, &SimConfig::new(Horizon::Events(1_000_000), 12)).unwrap();
        pass &= rep.empirical_w < 20.0;
        parts.push(format!("m = {m}: W = {:.2} s", rep.empirical_w));
    }
    verdict(pass, format!("m* = {m_star}; {} (limit 20 s)", parts.join(", ")))
}

fn main() {
    let criteria: [(&str, fn() -> Verdict, u64); 12] = [
        ("analytic vs generator", c1, 1),
        ("analytic vs simulation", c2, 30),
        ("identity suite", c3, 5),
        ("variance/wait trade-off", c4, 5),
        ("convexity suite", c5, 10),
        ("F monotone in sigma and P_r", c6, 10),
        ("score has zero mean", c7, 1),
        ("dispatch optimality", c8, 10),
        ("stochastic approximation", c9, 120),
        ("contract table trends", c10, 600),
        ("feasible packet length", c11, 30),
        ("waiting-time magnitude", c12, 30),
    ];
    let mut failures = 0;
    for (k, (name, run, limit)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let v = run();
        let elapsed = t.elapsed();
        let in_time = elapsed < Duration::from_secs(*limit);
        let pass = v.pass && in_time;
        if !pass {
            failures += 1;
        }
        println!(
            "{} criterion {:>2} {name}: {} [{:.2} s, limit {limit} s]",
            if pass { "PASS" } else { "FAIL" },
            k + 1,
            v.detail,
            elapsed.as_secs_f64()
        );
    }
    println!("{} of 12 criteria passed", 12 - failures);
    if failures > 0 {
        std::process::exit(1);
    }
}
