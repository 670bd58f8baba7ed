use proptest::prelude::*;

use pdlc::metrics::{
    energy_metric, energy_metric_weighted, optimize_m_energy, optimize_m_welfare, welfare_continuous, welfare_metric,
    EnergyWeights, WelfareConfig,
};
use pdlc::queue::{effective_service_rate, steady_state, QueueModel};

const RATE: f64 = 1.0 / 600.0;

fn exhaustive(n: usize, f: impl Fn(usize) -> f64) -> usize {
    let mut best = (1, f(1));
    for m in 2..=n {
        let v = f(m);
        if v < best.1 - 1e-12 * best.1.abs().max(1.0) {
            best = (m, v);
        }
    }
    best.0
}

fn model() -> impl Strategy<Value = QueueModel> {
    (2usize..=60, 1.0f64..600.0, 60.0f64..3600.0, 60.0f64..3600.0)
        .prop_map(|(n, d, off, on)| QueueModel::new(n, d, 1.0 / off, 1.0 / on).unwrap())
}

fn welfare() -> impl Strategy<Value = WelfareConfig> {
    (0.1f64..20.0, 0.0f64..5.0, 0.01f64..10.0, 100.0f64..2000.0)
        .prop_map(|(g, gl, h, k)| WelfareConfig::new(g, gl, h, 1.0 / k, 1e9).unwrap())
}

#[test]
fn welfare_composes_queue_values() {
    let model = QueueModel::new(2, 60.0, RATE, RATE).unwrap();
    let cfg = WelfareConfig::new(1.0, 0.0, 0.1, 1.0 / 300.0, 1e6).unwrap();
    let s = steady_state(&model.with_servers(1).unwrap()).unwrap();
    let w = welfare_metric(&model, 1, &cfg).unwrap();
    assert!((w - ((s.w_extra / 300.0).powi(2) + 0.1 * s.excess)).abs() < 1e-12);
    assert!((w - 1.408).abs() < 1e-3);
    let e = energy_metric(&model, 1).unwrap();
    assert!((e - 0.6042).abs() < 1e-4);
    let lin = WelfareConfig::new(0.0, 1.0, 0.0, 1.0 / 300.0, 1e6).unwrap();
    assert!((welfare_metric(&model, 1, &lin).unwrap() - s.w_extra / 300.0).abs() < 1e-12);
}

#[test]
fn limiting_optima() {
    let model = QueueModel::new(20, 60.0, RATE, RATE).unwrap();
    let waiting = WelfareConfig::new(1.0, 0.0, 0.0, 1.0 / 300.0, 1e6).unwrap();
    assert_eq!(optimize_m_welfare(&model, &waiting).unwrap(), 20);
    // no disutility at all: only idle capacity costs
    let idle = WelfareConfig::new(0.0, 0.0, 1.0, 1.0 / 300.0, 1e6).unwrap();
    assert_eq!(optimize_m_welfare(&model, &idle).unwrap(), 1);
    let rare = QueueModel::new(20, 60.0, 1e-4 * RATE, RATE).unwrap();
    assert_eq!(optimize_m_energy(&rare).unwrap(), 1);
    assert_eq!(optimize_m_energy(&QueueModel::new(1, 60.0, RATE, RATE).unwrap()).unwrap(), 1);
    let m = optimize_m_energy(&model).unwrap();
    assert_eq!(m, exhaustive(20, |m| energy_metric(&model, m).unwrap()));
}

#[test]
fn energy_optimum_straddles_first_order_condition() {
    for (n, d) in [(20, 60.0), (50, 10.0), (35, 300.0)] {
        let model = QueueModel::new(n, d, RATE, RATE).unwrap();
        let m = optimize_m_energy(&model).unwrap();
        let q = |m: usize| steady_state(&model.with_servers(m).unwrap()).unwrap().q_mean;
        let rho = RATE / effective_service_rate(RATE, d);
        let target = -1.0 / (1.0 + 2.0 * rho);
        if m > 1 {
            assert!(q(m) - q(m - 1) <= target + 1e-9);
        }
        if m < n {
            assert!(q(m + 1) - q(m) >= target - 1e-9);
        }
    }
}

#[test]
fn remark_weights_default_to_plain_sum() {
    let model = QueueModel::new(12, 60.0, RATE, RATE).unwrap();
    let w = EnergyWeights { excess: 1.0, deficiency: 1.0 };
    for m in 1..=12 {
        assert_eq!(energy_metric_weighted(&model, m, w).unwrap(), energy_metric(&model, m).unwrap());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(60))]

    #[test]
    fn energy_identity(model in model(), mf in 0.0f64..1.0) {
        let m = 1 + ((model.n_appliances - 1) as f64 * mf) as usize;
        let s = steady_state(&model.with_servers(m).unwrap()).unwrap();
        let rho = model.lambda / effective_service_rate(model.mu, model.delta);
        let n = model.n_appliances as f64;
        let e = energy_metric(&model, m).unwrap();
        prop_assert!((e - ((1.0 + 2.0 * rho) * s.q_mean + m as f64 - 2.0 * rho * n)).abs() < 1e-9);
    }

    #[test]
    fn metrics_are_discretely_convex(model in model(), cfg in welfare()) {
        let n = model.n_appliances;
        let e: Vec<f64> = (1..=n).map(|m| energy_metric(&model, m).unwrap()).collect();
        let w: Vec<f64> = (1..=n).map(|m| welfare_metric(&model, m, &cfg).unwrap()).collect();
        for v in [&e, &w] {
            for t in v.windows(3) {
                prop_assert!(t[0] - 2.0 * t[1] + t[2] >= -1e-9);
            }
        }
    }

    #[test]
    fn optima_match_exhaustive_scan(model in model(), cfg in welfare()) {
        let n = model.n_appliances;
        prop_assert_eq!(optimize_m_energy(&model).unwrap(), exhaustive(n, |m| energy_metric(&model, m).unwrap()));
        prop_assert_eq!(
            optimize_m_welfare(&model, &cfg).unwrap(),
            exhaustive(n, |m| welfare_metric(&model, m, &cfg).unwrap())
        );
    }

    #[test]
    fn welfare_optimum_is_scale_free(model in model(), cfg in welfare(), scale in 0.01f64..100.0) {
        let scaled = WelfareConfig::new(cfg.g_quad * scale, cfg.g_lin * scale, cfg.h_price * scale, cfg.kappa, 1e12).unwrap();
        prop_assert_eq!(optimize_m_welfare(&model, &cfg).unwrap(), optimize_m_welfare(&model, &scaled).unwrap());
    }

    #[test]
    fn curve_interpolates_samples(model in model(), cfg in welfare()) {
        let curve = welfare_continuous(&model, &cfg).unwrap();
        let n = model.n_appliances;
        for m in 1..=n {
            prop_assert_eq!(curve.eval(m as f64), welfare_metric(&model, m, &cfg).unwrap());
        }
        let mid = 0.5 * (curve.eval(1.0) + curve.eval(2.0));
        prop_assert!((curve.eval(1.5) - mid).abs() < 1e-12 * mid.abs().max(1.0));
        if curve.cap_point().is_some() {
            prop_assert_eq!(curve.eval(-1e9), curve.cap());
        }
        prop_assert_eq!(curve.eval(n as f64 + 2.0), curve.eval(n as f64) + 2.0 * cfg.h_price);
    }
}
