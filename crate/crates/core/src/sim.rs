//! Discrete-event simulation of the binary-information protocol and of a
//! fleet under full-information control.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, VecDeque};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};
use rayon::prelude::*;

use crate::error::{check, finite, Result};
use crate::queue::{effective_service_rate, QueueParams};
use crate::thermal::{
    run_fleet, step_temperature, ApplianceState, Mode, OccupantPrefs, ThermalParams,
};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Horizon {
    /// Requests plus departures.
    Events(u64),
    Seconds(f64),
}

/// How service ends in the binary-information simulation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Timing {
    /// Grants at interval boundaries; a served appliance keeps its packet for
    /// another interval with probability `exp(-mu delta)`.
    Slotted,
    /// Grants as soon as a packet is free; exponential holding times at the
    /// effective per-packet service rate.
    Continuous,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    pub horizon: Horizon,
    pub seed: u64,
    pub replications: usize,
    pub timing: Timing,
    /// Fleet runs only: draw a uniform disturbance in `[-w_max, w_max]`.
    pub disturbance: bool,
}

impl SimConfig {
    pub fn new(horizon: Horizon, seed: u64) -> Self {
        Self {
            horizon,
            seed,
            replications: 1,
            timing: Timing::Slotted,
            disturbance: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self.horizon {
            Horizon::Events(n) => check(n > 0, "horizon", "must be positive")?,
            Horizon::Seconds(t) => check(finite(t, "horizon")? > 0.0, "horizon", "must be positive")?,
        }
        check(self.replications >= 1, "replications", "must be at least 1")
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SimReport {
    /// Time-weighted distribution of the number of requesting appliances.
    pub empirical_p: Vec<f64>,
    /// Mean extra wait beyond `1/mu` (s).
    pub empirical_w: f64,
    /// Batch-means standard error of `empirical_w`.
    pub w_std_err: f64,
    /// Time-weighted variance of the number served.
    pub empirical_var: f64,
    /// Time-average number of requesting appliances.
    pub mean_queue: f64,
    /// Mean number in system minus arrival rate times mean sojourn, with its
    /// batch-means standard error.
    pub little_residual: f64,
    pub little_std_err: f64,
    pub completed: u64,
    /// Grants at every interval boundary of the first replication.
    pub packet_grants: Vec<usize>,
    pub band_violations: usize,
}

const BATCHES: usize = 20;
const WARMUP: f64 = 0.1;

#[derive(Debug, Clone, Copy, Default)]
struct Batch {
    time: f64,
    area: f64,
    sojourn: f64,
    completions: u64,
}

/// Statistics of one replication with warm-up and batch bookkeeping.
struct Recorder {
    horizon: Horizon,
    m: usize,
    time: f64,
    events: u64,
    x: usize,
    hist: Vec<f64>,
    batches: Vec<Batch>,
    grants: Vec<usize>,
}

impl Recorder {
    fn new(horizon: Horizon, n: usize, m: usize) -> Self {
        Self {
            horizon,
            m,
            time: 0.0,
            events: 0,
            x: 0,
            hist: vec![0.0; n + 1],
            batches: vec![Batch::default(); BATCHES],
            grants: Vec::new(),
        }
    }

    fn progress(&self) -> f64 {
        match self.horizon {
            Horizon::Events(n) => self.events as f64 / n as f64,
            Horizon::Seconds(t) => self.time / t,
        }
    }

    fn done(&self) -> bool {
        self.progress() >= 1.0
    }

    fn batch(&mut self) -> Option<&mut Batch> {
        let p = self.progress();
        if p < WARMUP {
            return None;
        }
        let k = (((p - WARMUP) / (1.0 - WARMUP)) * BATCHES as f64) as usize;
        Some(&mut self.batches[k.min(BATCHES - 1)])
    }

    /// Accumulates the current state up to `t`.
    fn advance(&mut self, t: f64) {
        let dt = t - self.time;
        let x = self.x;
        if let Some(b) = self.batch() {
            b.time += dt;
            b.area += x as f64 * dt;
            self.hist[x] += dt;
        }
        self.time = t;
    }

    fn arrive(&mut self, t: f64) {
        self.advance(t);
        self.x += 1;
        self.events += 1;
    }

    fn depart(&mut self, t: f64, requested_at: f64) {
        self.advance(t);
        self.x -= 1;
        self.events += 1;
        if let Some(b) = self.batch() {
            b.sojourn += t - requested_at;
            b.completions += 1;
        }
    }

    fn finish(self, mu: f64) -> Partial {
        Partial {
            m: self.m,
            hist: self.hist,
            batches: self.batches,
            grants: self.grants,
            mu,
        }
    }
}

struct Partial {
    m: usize,
    hist: Vec<f64>,
    batches: Vec<Batch>,
    grants: Vec<usize>,
    mu: f64,
}

fn mean_se(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, f64::NAN);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

fn merge(parts: Vec<Partial>) -> SimReport {
    let m = parts[0].m;
    let mu = parts[0].mu;
    let mut hist = vec![0.0; parts[0].hist.len()];
    let mut batches = Vec::new();
    for p in &parts {
        hist.iter_mut().zip(&p.hist).for_each(|(h, v)| *h += v);
        batches.extend(p.batches.iter().copied().filter(|b| b.time > 0.0));
    }
    let total: f64 = hist.iter().sum();
    let empirical_p: Vec<f64> = hist.iter().map(|h| h / total).collect();
    let mean_queue = empirical_p.iter().enumerate().map(|(x, p)| x as f64 * p).sum();
    let served_mean: f64 = empirical_p.iter().enumerate().map(|(x, p)| x.min(m) as f64 * p).sum();
    let empirical_var = empirical_p
        .iter()
        .enumerate()
        .map(|(x, p)| (x.min(m) as f64 - served_mean).powi(2) * p)
        .sum();

    let completed: u64 = batches.iter().map(|b| b.completions).sum();
    let sojourn: f64 = batches.iter().map(|b| b.sojourn).sum();
    let batch_w: Vec<f64> = batches
        .iter()
        .filter(|b| b.completions > 0)
        .map(|b| b.sojourn / b.completions as f64)
        .collect();
    let little: Vec<f64> = batches.iter().map(|b| (b.area - b.sojourn) / b.time).collect();
    let (little_residual, little_std_err) = mean_se(&little);
    let mut parts = parts;
    SimReport {
        empirical_p,
        empirical_w: sojourn / completed as f64 - 1.0 / mu,
        w_std_err: mean_se(&batch_w).1,
        empirical_var,
        mean_queue,
        little_residual,
        little_std_err,
        completed,
        packet_grants: std::mem::take(&mut parts[0].grants),
        band_violations: 0,
    }
}

/// Replication `r` draws from its own ChaCha stream of the common seed.
fn replication_rng(seed: u64, r: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(r as u64);
    rng
}

#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
struct At(f64);

impl Eq for At {}

impl Ord for At {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&other.0)
    }
}

fn slotted(qp: &QueueParams, horizon: Horizon, rng: &mut ChaCha8Rng) -> Partial {
    let n = qp.n_appliances;
    let retain = (-qp.mu * qp.delta).exp();
    let idle = Exp::new(qp.lambda).expect("positive rate");
    let mut rec = Recorder::new(horizon, n, qp.m_servers);
    let mut next_request: BinaryHeap<Reverse<(At, usize)>> =
        (0..n).map(|i| Reverse((At(idle.sample(rng)), i))).collect();
    let mut requested_at = vec![0.0; n];
    let mut queue: VecDeque<usize> = VecDeque::with_capacity(n);
    let mut served = Vec::with_capacity(qp.m_servers);
    let mut k = 0u64;
    while !rec.done() {
        let t0 = k as f64 * qp.delta;
        let t1 = t0 + qp.delta;
        served.clear();
        while served.len() < qp.m_servers {
            match queue.pop_front() {
                Some(i) => served.push(i),
                None => break,
            }
        }
        rec.grants.push(served.len());
        while let Some(&Reverse((At(t), i))) = next_request.peek() {
            if t >= t1 {
                break;
            }
            next_request.pop();
            rec.arrive(t);
            requested_at[i] = t;
            queue.push_back(i);
        }
        for &i in &served {
            if rng.gen::<f64>() < retain {
                queue.push_back(i);
            } else {
                rec.depart(t1, requested_at[i]);
                next_request.push(Reverse((At(t1 + idle.sample(rng)), i)));
            }
        }
        rec.advance(t1);
        k += 1;
    }
    rec.finish(qp.mu)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Kind {
    Departure,
    Request,
}

fn continuous(qp: &QueueParams, horizon: Horizon, rng: &mut ChaCha8Rng) -> Partial {
    let n = qp.n_appliances;
    let idle = Exp::new(qp.lambda).expect("positive rate");
    let hold = Exp::new(effective_service_rate(qp.mu, qp.delta)).expect("positive rate");
    let mut rec = Recorder::new(horizon, n, qp.m_servers);
    let mut events: BinaryHeap<Reverse<(At, Kind, usize)>> =
        (0..n).map(|i| Reverse((At(idle.sample(rng)), Kind::Request, i))).collect();
    let mut requested_at = vec![0.0; n];
    let mut queue: VecDeque<usize> = VecDeque::with_capacity(n);
    let mut busy = 0;
    while !rec.done() {
        let Some(Reverse((At(t), kind, i))) = events.pop() else {
            break;
        };
        match kind {
            Kind::Request => {
                rec.arrive(t);
                requested_at[i] = t;
                if busy < qp.m_servers {
                    busy += 1;
                    events.push(Reverse((At(t + hold.sample(rng)), Kind::Departure, i)));
                } else {
                    queue.push_back(i);
                }
            }
            Kind::Departure => {
                rec.depart(t, requested_at[i]);
                events.push(Reverse((At(t + idle.sample(rng)), Kind::Request, i)));
                match queue.pop_front() {
                    Some(j) => events.push(Reverse((At(t + hold.sample(rng)), Kind::Departure, j))),
                    None => busy -= 1,
                }
            }
        }
    }
    rec.finish(qp.mu)
}

/// Simulates the binary-information protocol. Replications run in parallel
/// on independent streams; the report pools them.
pub fn simulate_binary(qp: &QueueParams, cfg: &SimConfig) -> Result<SimReport> {
    cfg.validate()?;
    let parts: Vec<Partial> = (0..cfg.replications)
        .into_par_iter()
        .map(|r| {
            let mut rng = replication_rng(cfg.seed, r);
            match cfg.timing {
                Timing::Slotted => slotted(qp, cfg.horizon, &mut rng),
                Timing::Continuous => continuous(qp, cfg.horizon, &mut rng),
            }
        })
        .collect();
    Ok(merge(parts))
}

/// Runs the fleet under the full-information allocator for the configured
/// number of seconds (event horizons count intervals). Only grants and band
/// violations are reported.
pub fn simulate_full_info(
    fleet: &[ApplianceState],
    prefs: &[OccupantPrefs],
    params: &ThermalParams,
    m: usize,
    delta: f64,
    cfg: &SimConfig,
) -> Result<SimReport> {
    cfg.validate()?;
    check(!fleet.is_empty(), "fleet", "fleet is empty")?;
    check(fleet.len() == prefs.len(), "prefs", "one preference per appliance")?;
    check(m <= fleet.len(), "m", "cannot exceed the number of appliances")?;
    check(finite(delta, "delta")? > 0.0, "delta", "must be positive")?;
    for p in prefs {
        p.validate_for(params)?;
    }
    let intervals = match cfg.horizon {
        Horizon::Events(n) => n as usize,
        Horizon::Seconds(t) => (t / delta).ceil() as usize,
    };
    let mut rng = replication_rng(cfg.seed, 0);
    let w_max = params.w_max;
    let run = run_fleet(fleet, prefs, params, m, delta, intervals, false, || {
        if cfg.disturbance && w_max > 0.0 {
            rng.gen_range(-w_max..=w_max)
        } else {
            0.0
        }
    });
    Ok(SimReport {
        packet_grants: run.grants,
        band_violations: run.violations,
        ..SimReport::default()
    })
}

/// Mean dwell times of a free-running thermostat.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DwellTimes {
    pub mean_on: f64,
    pub mean_off: f64,
    pub cycles: usize,
}

/// Steps one thermostat with fixed step `dt` from its upper band edge and
/// times the band crossings, interpolating within a step.
pub fn simulate_thermostat(
    params: &ThermalParams,
    prefs: &OccupantPrefs,
    horizon: f64,
    dt: f64,
) -> Result<DwellTimes> {
    prefs.validate_for(params)?;
    check(finite(dt, "dt")? > 0.0, "dt", "must be positive")?;
    check(finite(horizon, "horizon")? > dt, "horizon", "must exceed the step")?;
    let (mut on, mut off) = (Vec::new(), Vec::new());
    let mut mode = Mode::On;
    let mut temp = prefs.upper();
    let mut since = 0.0;
    let mut t = 0.0;
    while t < horizon {
        let next = step_temperature(temp, params, mode, dt, 0.0)?;
        let edge = match mode {
            Mode::On => prefs.lower(),
            Mode::Off => prefs.upper(),
        };
        let crossed = match mode {
            Mode::On => next <= edge,
            Mode::Off => next >= edge,
        };
        if crossed {
            let hit = t + dt * (temp - edge) / (temp - next);
            match mode {
                Mode::On => on.push(hit - since),
                Mode::Off => off.push(hit - since),
            }
            since = hit;
            mode = match mode {
                Mode::On => Mode::Off,
                Mode::Off => Mode::On,
            };
            temp = edge;
            // finish the step in the new mode
            temp = step_temperature(temp, params, mode, t + dt - hit, 0.0)?;
        } else {
            temp = next;
        }
        t += dt;
    }
    check(!on.is_empty() && !off.is_empty(), "horizon", "too short for a full cycle")?;
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    Ok(DwellTimes {
        mean_on: mean(&on),
        mean_off: mean(&off),
        cycles: on.len().min(off.len()),
    })
}
