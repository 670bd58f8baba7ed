//! First-order thermal model of duty-cycle air conditioners and the
//! full-information packet allocator.
//!
//! Room temperature follows `dT/dt = (T_out - T - T_g u + w) / tau`, which has
//! the closed-form solution `T' = T_eq + (T - T_eq) exp(-dt / tau)` for constant
//! `u` and `w`. Everything in this module is a pure function of its inputs.

use crate::error::{check, finite, PdlcError, Result};

/// Physical parameters shared by every appliance on a feeder.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThermalParams {
    /// Outside temperature (C).
    pub t_out: f64,
    /// Temperature gain while the appliance runs (C).
    pub t_gain: f64,
    /// Effective thermal time constant (s).
    pub tau: f64,
    /// Bound on the additive disturbance `w` (C).
    pub w_max: f64,
    /// Power drawn per energy packet (kW).
    pub rated_power: f64,
}

impl ThermalParams {
    pub fn new(t_out: f64, t_gain: f64, tau: f64, w_max: f64, rated_power: f64) -> Result<Self> {
        finite(t_out, "t_out")?;
        check(finite(t_gain, "t_gain")? > 0.0, "t_gain", "must be positive")?;
        check(finite(tau, "tau")? > 0.0, "tau", "must be positive")?;
        check(finite(w_max, "w_max")? >= 0.0, "w_max", "must be non-negative")?;
        check(
            finite(rated_power, "rated_power")? >= 0.0,
            "rated_power",
            "must be non-negative",
        )?;
        Ok(Self {
            t_out,
            t_gain,
            tau,
            w_max,
            rated_power,
        })
    }

    /// Temperature the room relaxes towards under a constant input.
    pub fn equilibrium(&self, mode: Mode, w: f64) -> f64 {
        match mode {
            Mode::On => self.t_out - self.t_gain + w,
            Mode::Off => self.t_out + w,
        }
    }
}

/// Occupant comfort band `[t_set - band, t_set + band]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OccupantPrefs {
    pub t_set: f64,
    pub band: f64,
}

impl OccupantPrefs {
    pub fn new(t_set: f64, band: f64) -> Result<Self> {
        finite(t_set, "t_set")?;
        check(finite(band, "band")? > 0.0, "band", "must be positive")?;
        Ok(Self { t_set, band })
    }

    pub fn upper(&self) -> f64 {
        self.t_set + self.band
    }

    pub fn lower(&self) -> f64 {
        self.t_set - self.band
    }

    /// Rejects bands that reach the outside temperature (the room would not
    /// drift upward when idle).
    pub fn validate_for(&self, params: &ThermalParams) -> Result<()> {
        check(
            self.upper() < params.t_out,
            "t_set",
            format!(
                "t_set + band = {} must stay below t_out = {}",
                self.upper(),
                params.t_out
            ),
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    On,
    Off,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ApplianceState {
    pub id: usize,
    pub temp: f64,
    pub mode: Mode,
}

impl ApplianceState {
    pub fn new(id: usize, temp: f64) -> Self {
        Self {
            id,
            temp,
            mode: Mode::Off,
        }
    }
}

#[inline]
pub(crate) fn relax(temp: f64, eq: f64, dt: f64, tau: f64) -> f64 {
    eq + (temp - eq) * (-dt / tau).exp()
}

/// Time for a trajectory relaxing towards `eq` to reach `target`, if it ever does.
#[inline]
pub(crate) fn time_to_reach(temp: f64, target: f64, eq: f64, tau: f64) -> Option<f64> {
    let from = temp - eq;
    let to = target - eq;
    if from == 0.0 || to == 0.0 || from.signum() != to.signum() || to.abs() > from.abs() {
        return None;
    }
    Some(tau * (from / to).ln())
}

/// Exact temperature after `dt` seconds with constant mode and disturbance.
pub fn step_temperature(
    temp: f64,
    params: &ThermalParams,
    mode: Mode,
    dt: f64,
    w: f64,
) -> Result<f64> {
    finite(temp, "temp")?;
    finite(w, "w")?;
    check(finite(dt, "dt")? >= 0.0, "dt", "must be non-negative")?;
    check(
        w.abs() <= params.w_max + 1e-12,
        "w",
        format!("|w| = {} exceeds w_max = {}", w.abs(), params.w_max),
    )?;
    Ok(relax(temp, params.equilibrium(mode, w), dt, params.tau))
}

/// Minimum number of packets that holds every room at its set point on
/// average, rounded up to a whole packet and clamped to the population.
pub fn min_packets(prefs: &[OccupantPrefs], params: &ThermalParams) -> Result<usize> {
    check(!prefs.is_empty(), "prefs", "at least one occupant is required")?;
    let n = prefs.len();
    let set_sum: f64 = prefs.iter().map(|p| p.t_set).sum();
    let raw = (n as f64 * params.t_out - set_sum) / params.t_gain;
    finite(raw, "raw packet count")?;
    if raw <= 0.0 {
        return Err(PdlcError::NoCoolingNeeded { raw });
    }
    // absorb roundoff so an exact integer does not round up
    let m = (raw - 1e-9 * raw.max(1.0)).ceil().max(1.0) as usize;
    Ok(m.min(n))
}

/// Duty-cycle rates implied by band-crossing times of the thermal model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DutyRates {
    /// Idle-to-request rate, the inverse of the off time (1/s).
    pub lambda: f64,
    /// On-completion rate, the inverse of the on time (1/s).
    pub mu: f64,
}

impl DutyRates {
    pub fn off_time(&self) -> f64 {
        1.0 / self.lambda
    }

    pub fn on_time(&self) -> f64 {
        1.0 / self.mu
    }
}

pub fn duty_rates(params: &ThermalParams, prefs: &OccupantPrefs) -> Result<DutyRates> {
    let hot_eq = params.t_out;
    let cold_eq = params.t_out - params.t_gain;
    if prefs.upper() >= hot_eq {
        return Err(PdlcError::BandOutsideEquilibria {
            which: "off",
            boundary: prefs.upper(),
            equilibrium: hot_eq,
        });
    }
    if prefs.lower() <= cold_eq {
        return Err(PdlcError::BandOutsideEquilibria {
            which: "on",
            boundary: prefs.lower(),
            equilibrium: cold_eq,
        });
    }
    let off_time = params.tau * ((hot_eq - prefs.lower()) / (hot_eq - prefs.upper())).ln();
    let on_time = params.tau * ((prefs.upper() - cold_eq) / (prefs.lower() - cold_eq)).ln();
    Ok(DutyRates {
        lambda: 1.0 / off_time,
        mu: 1.0 / on_time,
    })
}

/// Mean temperature drift rate while idle: the full band width crossed once
/// per mean off time.
pub fn drift_rate_kappa(prefs: &OccupantPrefs, lambda: f64) -> f64 {
    2.0 * prefs.band * lambda
}

/// Time an idle room needs to reach the top of its band (zero if already there).
pub fn slack_to_upper(temp: f64, prefs: &OccupantPrefs, params: &ThermalParams) -> f64 {
    if temp >= prefs.upper() {
        return 0.0;
    }
    params.tau * ((params.t_out - temp) / (params.t_out - prefs.upper())).ln()
}

/// Grants one packet to each of the `m` rooms with the least slack to their
/// upper comfort bound. Ties go to the lower id. Returned ids are ascending.
pub fn full_info_allocate(
    states: &[ApplianceState],
    prefs: &[OccupantPrefs],
    params: &ThermalParams,
    m: usize,
) -> Vec<usize> {
    assert_eq!(states.len(), prefs.len(), "one preference per appliance");
    let mut ranked: Vec<(f64, usize)> = states
        .iter()
        .zip(prefs)
        .map(|(s, p)| (slack_to_upper(s.temp, p, params), s.id))
        .collect();
    ranked.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let mut ids: Vec<usize> = ranked.into_iter().take(m).map(|(_, id)| id).collect();
    ids.sort_unstable();
    ids
}

/// Result of holding one allocation decision for a full interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntervalStep {
    pub temp: f64,
    /// Seconds the compressor actually ran.
    pub on_time: f64,
}

/// Advances one room over an interval. A granted room runs until its local
/// thermostat cuts out at the lower band edge and idles for the remainder.
pub fn advance_interval(
    temp: f64,
    prefs: &OccupantPrefs,
    params: &ThermalParams,
    granted: bool,
    dt: f64,
    w: f64,
) -> IntervalStep {
    let off_eq = params.equilibrium(Mode::Off, w);
    if !granted || temp <= prefs.lower() {
        return IntervalStep {
            temp: relax(temp, off_eq, dt, params.tau),
            on_time: 0.0,
        };
    }
    let on_eq = params.equilibrium(Mode::On, w);
    match time_to_reach(temp, prefs.lower(), on_eq, params.tau) {
        Some(hit) if hit < dt => IntervalStep {
            temp: relax(prefs.lower(), off_eq, dt - hit, params.tau),
            on_time: hit,
        },
        _ => IntervalStep {
            temp: relax(temp, on_eq, dt, params.tau),
            on_time: dt,
        },
    }
}

/// Aggregate outcome of a fleet run under full-information control.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FleetRun {
    pub grants: Vec<usize>,
    /// Number of (room, interval end) pairs outside the comfort band.
    pub violations: usize,
    pub max_violation: f64,
    /// Total compressor run time (s).
    pub on_time: f64,
    pub final_temps: Vec<f64>,
}

const BAND_TOL: f64 = 1e-9;

/// Runs the fleet for `intervals` decisions of length `delta`. `disturbance` is
/// drawn once per room and interval. With `stop_on_violation` the run ends at
/// the first interval that leaves a band.
pub(crate) fn run_fleet(
    states: &[ApplianceState],
    prefs: &[OccupantPrefs],
    params: &ThermalParams,
    m: usize,
    delta: f64,
    intervals: usize,
    stop_on_violation: bool,
    mut disturbance: impl FnMut() -> f64,
) -> FleetRun {
    let mut current: Vec<ApplianceState> = states.to_vec();
    let index: std::collections::HashMap<usize, usize> =
        current.iter().enumerate().map(|(i, s)| (s.id, i)).collect();
    let mut run = FleetRun {
        grants: Vec::with_capacity(intervals),
        ..Default::default()
    };
    let mut granted = vec![false; current.len()];
    for _ in 0..intervals {
        granted.iter_mut().for_each(|g| *g = false);
        let ids = full_info_allocate(&current, prefs, params, m);
        for id in &ids {
            granted[index[id]] = true;
        }
        run.grants.push(ids.len());
        let mut interval_violated = false;
        for (i, state) in current.iter_mut().enumerate() {
            let w = disturbance();
            let step = advance_interval(state.temp, &prefs[i], params, granted[i], delta, w);
            state.temp = step.temp;
            state.mode = if step.on_time > 0.0 { Mode::On } else { Mode::Off };
            run.on_time += step.on_time;
            let excess = (step.temp - prefs[i].upper()).max(prefs[i].lower() - step.temp);
            if excess > BAND_TOL {
                run.violations += 1;
                run.max_violation = run.max_violation.max(excess);
                interval_violated = true;
            }
        }
        if interval_violated && stop_on_violation {
            break;
        }
    }
    run.final_temps = current.iter().map(|s| s.temp).collect();
    run
}

/// Largest packet length on the grid `delta_max * 2^-j`, `j = 0..=20`, for which
/// a disturbance-free run over `horizon` seconds keeps every room in band.
/// `delta_max` is the shortest duty on or off time across the fleet.
pub fn find_feasible_delta(
    states: &[ApplianceState],
    prefs: &[OccupantPrefs],
    params: &ThermalParams,
    m: usize,
    horizon: f64,
) -> Result<f64> {
    check(!states.is_empty(), "states", "fleet is empty")?;
    check(states.len() == prefs.len(), "prefs", "one preference per appliance")?;
    check(m <= states.len(), "m", "cannot exceed the number of appliances")?;
    check(finite(horizon, "horizon")? > 0.0, "horizon", "must be positive")?;
    for (s, p) in states.iter().zip(prefs) {
        check(
            s.temp >= p.lower() - BAND_TOL && s.temp <= p.upper() + BAND_TOL,
            "states",
            format!("appliance {} starts outside its comfort band", s.id),
        )?;
    }
    let mut delta_max = f64::INFINITY;
    for p in prefs {
        let rates = duty_rates(params, p)?;
        delta_max = delta_max.min(rates.off_time()).min(rates.on_time());
    }
    let mut last = (delta_max, 0.0);
    for j in 0..=20 {
        let delta = delta_max * 0.5f64.powi(j);
        let intervals = (horizon / delta).ceil() as usize;
        let run = run_fleet(states, prefs, params, m, delta, intervals, true, || 0.0);
        if run.violations == 0 {
            return Ok(delta);
        }
        last = (delta, run.max_violation);
    }
    Err(PdlcError::NoFeasibleDelta {
        smallest_delta: last.0,
        max_violation: last.1,
    })
}
