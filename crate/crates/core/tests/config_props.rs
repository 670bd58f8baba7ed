use proptest::prelude::*;

use pdlc::config::{fmt_sig9, parse_config, QueueSection, RunConfig, SimSection, SweepSection, WelfareSection};
use pdlc::metrics::WelfareConfig;
use pdlc::procurement::{MarketSpec, SaConfig};
use pdlc::queue::QueueModel;
use pdlc::sim::{Horizon, Timing};
use pdlc::wind::{Scheme, WindSpec};

fn queue() -> impl Strategy<Value = QueueSection> {
    (2usize..200, 0.1f64..1000.0, 1e-5f64..1e-1, 1e-5f64..1e-1, any::<bool>()).prop_map(|(n, d, l, m, fixed)| {
        QueueSection {
            model: QueueModel::new(n, d, l, m).unwrap(),
            m: fixed.then_some(1 + n / 3),
        }
    })
}

fn welfare() -> impl Strategy<Value = WelfareSection> {
    (0.0f64..50.0, 0.0f64..5.0, 0.0f64..10.0, 1e-5f64..1.0, any::<bool>()).prop_map(|(g, gl, h, k, market_h)| {
        WelfareSection {
            cfg: WelfareConfig::new(g, gl, h, k, 1e6).unwrap(),
            market_h,
        }
    })
}

fn wind() -> impl Strategy<Value = WindSpec> {
    (0.0f64..100.0, 0.0f64..1.0, any::<bool>()).prop_map(|(p_r, s, correlated)| {
        if correlated {
            WindSpec::correlated(p_r, s).unwrap()
        } else {
            WindSpec::independent(p_r, 10.0 * s).unwrap()
        }
    })
}

fn market() -> impl Strategy<Value = MarketSpec> {
    (0.1f64..5.0, 0.0f64..0.99, 0.0f64..0.99, 0.01f64..0.99, 1.01f64..4.0).prop_map(|(k_t, r, gamma, p, hi)| {
        MarketSpec::new(k_t, r * k_t, gamma, vec![(1.01 * k_t, p), (hi * k_t, 1.0 - p)]).unwrap()
    })
}

fn sa() -> impl Strategy<Value = SaConfig> {
    // the sampling seed comes from [run], not from [sa]
    (1usize..100_000, 0.01f64..100.0, prop::option::of(0.01f64..500.0), 0.0f64..5000.0, any::<bool>())
        .prop_map(|(max_iter, alpha0, alpha0_r, step_offset, gh)| SaConfig {
            max_iter,
            alpha0,
            alpha0_r,
            step_offset,
            inner_scheme: if gh { Scheme::GaussHermite } else { Scheme::CompositeLegendre },
            start: gh.then_some((1.5, 2.5)),
            ..SaConfig::default()
        })
}

fn sim() -> impl Strategy<Value = SimSection> {
    (1u64..10_000_000, 1usize..8, any::<bool>(), prop::option::of(1.0f64..900.0)).prop_map(|(events, reps, slotted, delta)| {
        SimSection {
            horizon: if slotted { Horizon::Events(events) } else { Horizon::Seconds(events as f64 * 0.5) },
            replications: reps,
            timing: if slotted { Timing::Slotted } else { Timing::Continuous },
            delta,
            ..SimSection::default()
        }
    })
}

fn run_config() -> impl Strategy<Value = RunConfig> {
    (
        prop::option::of(queue()),
        prop::option::of(welfare()),
        prop::option::of(wind()),
        prop::option::of(market()),
        sa(),
        sim(),
        prop::collection::vec(0.01f64..1.0, 0..4),
        any::<u64>(),
    )
        .prop_map(|(queue, welfare, wind, market, sa, sim, cvs, seed)| RunConfig {
            queue,
            welfare,
            wind,
            market,
            sa,
            sim,
            sweep: SweepSection {
                cv_grid: cvs,
                ..SweepSection::default()
            },
            seed,
            ..RunConfig::default()
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn serialized_configs_parse_back(cfg in run_config()) {
        let text = cfg.to_ini();
        prop_assert_eq!(parse_config(&text).unwrap(), cfg);
    }

    #[test]
    fn nine_significant_digits_round_trip(v in -1e12f64..1e12) {
        let s = fmt_sig9(v);
        let back: f64 = s.parse().unwrap();
        prop_assert!((back - v).abs() <= 5e-9 * v.abs(), "{} -> {}", v, s);
    }
}

#[test]
fn errors_point_at_the_offending_line() {
    let err = parse_config("[queue]\nn = 2\ndelta = -1\nlambda = 0.1\nmu = 0.1\n").unwrap_err();
    assert_eq!(err.line, 3);
    let err = parse_config("[sim]\nevents = 10\n[sim]\n").unwrap_err();
    assert_eq!(err.line, 3);
    let err = parse_config("[queue]\nn = 2\nn = 3\n").unwrap_err();
    assert_eq!(err.line, 3);
}
