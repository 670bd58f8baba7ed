//! INI-style run configuration: `[section]` headers, `key = value` lines and
//! `#` comments. Every value is validated against the module invariants while
//! parsing, and errors carry the offending line number.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::str::FromStr;

use crate::error::PdlcError;
use crate::metrics::WelfareConfig;
use crate::procurement::{MarketSpec, SaConfig};
use crate::queue::QueueModel;
use crate::sim::{Horizon, Timing};
use crate::thermal::{OccupantPrefs, ThermalParams};
use crate::wind::{Quadrature, Scheme, WindSpec};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    /// 1-based line, or 0 when the problem is not tied to a line.
    pub line: usize,
    pub message: String,
}

impl ConfigError {
    fn new(line: usize, message: impl Into<String>) -> Self {
        Self {
            line,
            message: message.into(),
        }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.line == 0 {
            write!(f, "config: {}", self.message)
        } else {
            write!(f, "config line {}: {}", self.line, self.message)
        }
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone, PartialEq)]
pub struct ThermalSection {
    pub params: ThermalParams,
    pub rooms: Vec<OccupantPrefs>,
    /// Starting temperatures; the set points when absent.
    pub initial_temps: Option<Vec<f64>>,
    /// Packets per interval; the critical count when absent.
    pub m: Option<usize>,
    /// Horizon of the feasibility search (s).
    pub horizon: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QueueSection {
    pub model: QueueModel,
    pub m: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WelfareSection {
    pub cfg: WelfareConfig,
    /// Keep the excess-capacity term in the curve used by the wind and
    /// market commands. Off by default: those curves price waiting only.
    pub market_h: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Protocol {
    Binary,
    FullInfo,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimSection {
    pub protocol: Protocol,
    pub horizon: Horizon,
    pub replications: usize,
    pub timing: Timing,
    pub disturbance: bool,
    /// Packet length for full-information runs; searched when absent.
    pub delta: Option<f64>,
}

impl Default for SimSection {
    fn default() -> Self {
        Self {
            protocol: Protocol::Binary,
            horizon: Horizon::Events(1_000_000),
            replications: 1,
            timing: Timing::Slotted,
            disturbance: false,
            delta: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SweepSection {
    pub m_grid: Vec<usize>,
    pub delta_grid: Vec<f64>,
    pub sigma_grid: Vec<f64>,
    pub cv_grid: Vec<f64>,
    pub k_r_grid: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunConfig {
    pub thermal: Option<ThermalSection>,
    pub queue: Option<QueueSection>,
    pub welfare: Option<WelfareSection>,
    pub wind: Option<WindSpec>,
    pub market: Option<MarketSpec>,
    pub sa: SaConfig,
    pub sim: SimSection,
    pub sweep: SweepSection,
    pub seed: u64,
    pub out: Option<String>,
}

const SECTIONS: [&str; 9] = [
    "thermal", "queue", "welfare", "wind", "market", "sa", "sim", "sweep", "run",
];

fn known_keys(section: &str) -> &'static [&'static str] {
    match section {
        "thermal" => &["t_out", "t_gain", "tau", "w_max", "rated_power", "t_set", "band", "initial", "m", "horizon"],
        "queue" => &["n", "delta", "lambda", "mu", "m"],
        "welfare" => &["g_quad", "g_lin", "h_price", "kappa", "w_cap", "market_h"],
        "wind" => &["p_r", "sigma", "cv"],
        "market" => &["k_t", "k_r", "gamma", "k_b"],
        "sa" => &[
            "max_iter", "alpha0", "alpha0_r", "step_offset", "epsilon", "inner_nodes", "inner_scheme",
            "max_outer", "window", "start",
        ],
        "sim" => &["protocol", "events", "seconds", "replications", "timing", "disturbance", "delta"],
        "sweep" => &["m_grid", "delta_grid", "sigma_grid", "cv_grid", "k_r_grid"],
        "run" => &["seed", "out"],
        _ => &[],
    }
}

struct Entry {
    value: String,
    line: usize,
    used: bool,
}

/// Key-value lines of one section with the header line for diagnostics.
struct Section {
    header: usize,
    entries: BTreeMap<String, Entry>,
}

impl Section {
    fn raw(&mut self, key: &str) -> Option<(&str, usize)> {
        self.entries.get_mut(key).map(|e| {
            e.used = true;
            (e.value.as_str(), e.line)
        })
    }

    fn opt<T: FromStr>(&mut self, key: &str) -> Result<Option<T>, ConfigError> {
        match self.raw(key) {
            None => Ok(None),
            Some((v, line)) => v
                .parse()
                .map(Some)
                .map_err(|_| ConfigError::new(line, format!("`{key}`: cannot parse `{v}`"))),
        }
    }

    fn req<T: FromStr>(&mut self, key: &str, name: &str) -> Result<T, ConfigError> {
        self.opt(key)?.ok_or_else(|| {
            ConfigError::new(self.header, format!("[{name}] is missing required key `{key}`"))
        })
    }

    fn list<T: FromStr>(&mut self, key: &str) -> Result<Option<Vec<T>>, ConfigError> {
        match self.raw(key) {
            None => Ok(None),
            Some((v, line)) => v
                .split(',')
                .map(|s| {
                    s.trim().parse().map_err(|_| {
                        ConfigError::new(line, format!("`{key}`: cannot parse list item `{}`", s.trim()))
                    })
                })
                .collect::<Result<Vec<T>, _>>()
                .map(Some),
        }
    }

    fn line_of(&self, key: &str) -> usize {
        self.entries.get(key).map_or(self.header, |e| e.line)
    }

    /// Maps a domain validation error to the line of the key it names.
    fn invalid(&self, err: PdlcError) -> ConfigError {
        let line = match &err {
            PdlcError::InvalidParameter { name, .. } => self.line_of(name),
            _ => self.header,
        };
        ConfigError::new(line, err.to_string())
    }

    fn finish(self) -> Result<(), ConfigError> {
        match self.entries.iter().find(|(_, e)| !e.used) {
            Some((k, e)) => Err(ConfigError::new(e.line, format!("unknown key `{k}`"))),
            None => Ok(()),
        }
    }
}

fn split_sections(text: &str) -> Result<BTreeMap<String, Section>, ConfigError> {
    let mut sections: BTreeMap<String, Section> = BTreeMap::new();
    let mut current: Option<String> = None;
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if let Some(rest) = content.strip_prefix('[') {
            let name = rest
                .strip_suffix(']')
                .ok_or_else(|| ConfigError::new(line, "unterminated section header"))?
                .trim()
                .to_string();
            if !SECTIONS.contains(&name.as_str()) {
                return Err(ConfigError::new(line, format!("unknown section [{name}]")));
            }
            if sections.contains_key(&name) {
                return Err(ConfigError::new(line, format!("duplicate section [{name}]")));
            }
            sections.insert(
                name.clone(),
                Section {
                    header: line,
                    entries: BTreeMap::new(),
                },
            );
            current = Some(name);
            continue;
        }
        let (key, value) = content
            .split_once('=')
            .ok_or_else(|| ConfigError::new(line, "expected `key = value`"))?;
        let name = current
            .as_ref()
            .ok_or_else(|| ConfigError::new(line, "key outside of any section"))?;
        let key = key.trim().to_string();
        if !known_keys(name).contains(&key.as_str()) {
            return Err(ConfigError::new(line, format!("unknown key `{key}` in [{name}]")));
        }
        let section = sections.get_mut(name).expect("current section exists");
        if section.entries.contains_key(&key) {
            return Err(ConfigError::new(line, format!("duplicate key `{key}`")));
        }
        section.entries.insert(
            key,
            Entry {
                value: value.trim().to_string(),
                line,
                used: false,
            },
        );
    }
    Ok(sections)
}

fn parse_thermal(mut s: Section) -> Result<ThermalSection, ConfigError> {
    let name = "thermal";
    let t_out = s.req("t_out", name)?;
    let t_gain = s.req("t_gain", name)?;
    let tau = s.req("tau", name)?;
    let w_max = s.opt("w_max")?.unwrap_or(0.0);
    let rated_power = s.opt("rated_power")?.unwrap_or(1.0);
    let params = ThermalParams::new(t_out, t_gain, tau, w_max, rated_power).map_err(|e| s.invalid(e))?;
    let t_set: Vec<f64> = s
        .list("t_set")?
        .ok_or_else(|| ConfigError::new(s.header, "[thermal] is missing required key `t_set`"))?;
    let bands: Vec<f64> = s
        .list("band")?
        .ok_or_else(|| ConfigError::new(s.header, "[thermal] is missing required key `band`"))?;
    let band_line = s.line_of("band");
    let bands = match bands.len() {
        1 => vec![bands[0]; t_set.len()],
        n if n == t_set.len() => bands,
        n => {
            return Err(ConfigError::new(
                band_line,
                format!("`band` has {n} values for {} rooms", t_set.len()),
            ))
        }
    };
    let mut rooms = Vec::with_capacity(t_set.len());
    for (&t, &b) in t_set.iter().zip(&bands) {
        let p = OccupantPrefs::new(t, b).map_err(|e| ConfigError::new(band_line, e.to_string()))?;
        p.validate_for(&params)
            .map_err(|e| ConfigError::new(s.line_of("t_set"), e.to_string()))?;
        rooms.push(p);
    }
    let initial_temps: Option<Vec<f64>> = s.list("initial")?;
    if let Some(init) = &initial_temps {
        let line = s.line_of("initial");
        if init.len() != rooms.len() {
            return Err(ConfigError::new(
                line,
                format!("`initial` has {} values for {} rooms", init.len(), rooms.len()),
            ));
        }
        for (i, (&t, p)) in init.iter().zip(&rooms).enumerate() {
            if !(t >= p.lower() && t <= p.upper()) {
                return Err(ConfigError::new(line, format!("room {i} starts outside its comfort band")));
            }
        }
    }
    let m: Option<usize> = s.opt("m")?;
    if let Some(m) = m {
        if m > rooms.len() {
            return Err(ConfigError::new(s.line_of("m"), "`m` cannot exceed the number of rooms"));
        }
    }
    let horizon: f64 = s.opt("horizon")?.unwrap_or(86_400.0);
    if !(horizon.is_finite() && horizon > 0.0) {
        return Err(ConfigError::new(s.line_of("horizon"), "`horizon` must be positive"));
    }
    s.finish()?;
    Ok(ThermalSection {
        params,
        rooms,
        initial_temps,
        m,
        horizon,
    })
}

fn parse_queue(mut s: Section) -> Result<QueueSection, ConfigError> {
    let name = "queue";
    let n: usize = s.req("n", name)?;
    let delta = s.req("delta", name)?;
    let lambda = s.req("lambda", name)?;
    let mu = s.req("mu", name)?;
    let model = QueueModel::new(n, delta, lambda, mu).map_err(|e| {
        let e = match e {
            PdlcError::InvalidParameter { name: "n_appliances", reason } => {
                PdlcError::InvalidParameter { name: "n", reason }
            }
            other => other,
        };
        s.invalid(e)
    })?;
    let m: Option<usize> = s.opt("m")?;
    if let Some(m) = m {
        model
            .with_servers(m)
            .map_err(|e| ConfigError::new(s.line_of("m"), e.to_string()))?;
    }
    s.finish()?;
    Ok(QueueSection { model, m })
}

fn parse_welfare(mut s: Section) -> Result<WelfareSection, ConfigError> {
    let g_quad = s.opt("g_quad")?.unwrap_or(0.0);
    let g_lin = s.opt("g_lin")?.unwrap_or(0.0);
    let h_price = s.opt("h_price")?.unwrap_or(0.0);
    let kappa = s.req("kappa", "welfare")?;
    let w_cap = s.opt("w_cap")?.unwrap_or(1e6);
    let cfg = WelfareConfig::new(g_quad, g_lin, h_price, kappa, w_cap).map_err(|e| s.invalid(e))?;
    let market_h = s.opt("market_h")?.unwrap_or(false);
    s.finish()?;
    Ok(WelfareSection { cfg, market_h })
}

fn parse_wind(mut s: Section) -> Result<WindSpec, ConfigError> {
    let p_r = s.req("p_r", "wind")?;
    let sigma: Option<f64> = s.opt("sigma")?;
    let cv: Option<f64> = s.opt("cv")?;
    let wind = match (sigma, cv) {
        (Some(sigma), None) => WindSpec::independent(p_r, sigma),
        (None, Some(cv)) => WindSpec::correlated(p_r, cv),
        _ => return Err(ConfigError::new(s.header, "[wind] needs exactly one of `sigma` or `cv`")),
    }
    .map_err(|e| s.invalid(e))?;
    s.finish()?;
    Ok(wind)
}

fn parse_market(mut s: Section) -> Result<MarketSpec, ConfigError> {
    let name = "market";
    let k_t = s.req("k_t", name)?;
    let k_r = s.req("k_r", name)?;
    let gamma = s.req("gamma", name)?;
    let balancing = match s.raw("k_b") {
        None => vec![(1.5 * k_t, 0.5), (2.5 * k_t, 0.5)],
        Some((v, line)) => v
            .split(',')
            .map(|atom| {
                let (price, prob) = atom.split_once(':').ok_or_else(|| {
                    ConfigError::new(line, format!("`k_b`: expected `price:probability`, got `{}`", atom.trim()))
                })?;
                let parse = |x: &str| {
                    x.trim()
                        .parse::<f64>()
                        .map_err(|_| ConfigError::new(line, format!("`k_b`: cannot parse `{}`", x.trim())))
                };
                Ok((parse(price)?, parse(prob)?))
            })
            .collect::<Result<Vec<_>, ConfigError>>()?,
    };
    let spec = MarketSpec::new(k_t, k_r, gamma, balancing).map_err(|e| s.invalid(e))?;
    spec.check_contract().map_err(|e| s.invalid(e))?;
    s.finish()?;
    Ok(spec)
}

fn parse_sa(mut s: Section) -> Result<SaConfig, ConfigError> {
    let d = SaConfig::default();
    let scheme = match s.raw("inner_scheme") {
        None => d.inner_scheme,
        Some(("gauss_hermite", _)) => Scheme::GaussHermite,
        Some(("composite", _)) => Scheme::CompositeLegendre,
        Some((v, line)) => {
            return Err(ConfigError::new(
                line,
                format!("`inner_scheme`: expected gauss_hermite or composite, got `{v}`"),
            ))
        }
    };
    let start = match s.list::<f64>("start")? {
        None => None,
        Some(v) if v.len() == 2 => Some((v[0], v[1])),
        Some(_) => return Err(ConfigError::new(s.line_of("start"), "`start` needs two values: p_t, p_r")),
    };
    let cfg = SaConfig {
        max_iter: s.opt("max_iter")?.unwrap_or(d.max_iter),
        alpha0: s.opt("alpha0")?.unwrap_or(d.alpha0),
        alpha0_r: s.opt("alpha0_r")?,
        step_offset: s.opt("step_offset")?.unwrap_or(d.step_offset),
        epsilon: s.opt("epsilon")?.unwrap_or(d.epsilon),
        inner_nodes: s.opt("inner_nodes")?.unwrap_or(d.inner_nodes),
        inner_scheme: scheme,
        seed: d.seed,
        max_outer: s.opt("max_outer")?.unwrap_or(d.max_outer),
        window: s.opt("window")?.unwrap_or(d.window),
        start,
    };
    cfg.validate().map_err(|e| {
        let e = match e {
            PdlcError::InvalidParameter { name: "nodes", reason } => {
                PdlcError::InvalidParameter { name: "inner_nodes", reason }
            }
            other => other,
        };
        s.invalid(e)
    })?;
    s.finish()?;
    Ok(cfg)
}

fn parse_sim(mut s: Section) -> Result<SimSection, ConfigError> {
    let d = SimSection::default();
    let protocol = match s.raw("protocol") {
        None | Some(("binary", _)) => Protocol::Binary,
        Some(("full_info", _)) => Protocol::FullInfo,
        Some((v, line)) => {
            return Err(ConfigError::new(line, format!("`protocol`: expected binary or full_info, got `{v}`")))
        }
    };
    let timing = match s.raw("timing") {
        None | Some(("slotted", _)) => Timing::Slotted,
        Some(("continuous", _)) => Timing::Continuous,
        Some((v, line)) => {
            return Err(ConfigError::new(line, format!("`timing`: expected slotted or continuous, got `{v}`")))
        }
    };
    let events: Option<u64> = s.opt("events")?;
    let seconds: Option<f64> = s.opt("seconds")?;
    let horizon = match (events, seconds) {
        (None, None) => d.horizon,
        (Some(n), None) => Horizon::Events(n),
        (None, Some(t)) => Horizon::Seconds(t),
        _ => return Err(ConfigError::new(s.header, "[sim] takes `events` or `seconds`, not both")),
    };
    let sim = SimSection {
        protocol,
        horizon,
        replications: s.opt("replications")?.unwrap_or(d.replications),
        timing,
        disturbance: s.opt("disturbance")?.unwrap_or(false),
        delta: s.opt("delta")?,
    };
    let check = crate::sim::SimConfig {
        horizon: sim.horizon,
        seed: 0,
        replications: sim.replications,
        timing: sim.timing,
        disturbance: sim.disturbance,
    };
    check.validate().map_err(|e| {
        let e = match e {
            PdlcError::InvalidParameter { name: "horizon", reason } => PdlcError::InvalidParameter {
                name: if events.is_some() { "events" } else { "seconds" },
                reason,
            },
            other => other,
        };
        s.invalid(e)
    })?;
    if let Some(delta) = sim.delta {
        if !(delta.is_finite() && delta > 0.0) {
            return Err(ConfigError::new(s.line_of("delta"), "`delta` must be positive"));
        }
    }
    s.finish()?;
    Ok(sim)
}

fn parse_sweep(mut s: Section) -> Result<SweepSection, ConfigError> {
    let sweep = SweepSection {
        m_grid: s.list("m_grid")?.unwrap_or_default(),
        delta_grid: s.list("delta_grid")?.unwrap_or_default(),
        sigma_grid: s.list("sigma_grid")?.unwrap_or_default(),
        cv_grid: s.list("cv_grid")?.unwrap_or_default(),
        k_r_grid: s.list("k_r_grid")?.unwrap_or_default(),
    };
    for (key, grid) in [
        ("delta_grid", &sweep.delta_grid),
        ("sigma_grid", &sweep.sigma_grid),
        ("cv_grid", &sweep.cv_grid),
        ("k_r_grid", &sweep.k_r_grid),
    ] {
        if grid.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(ConfigError::new(s.line_of(key), format!("`{key}` values must be finite and non-negative")));
        }
    }
    if sweep.delta_grid.contains(&0.0) {
        return Err(ConfigError::new(s.line_of("delta_grid"), "`delta_grid` values must be positive"));
    }
    s.finish()?;
    Ok(sweep)
}

/// Parses and validates a configuration.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let mut sections = split_sections(text)?;
    let mut cfg = RunConfig::default();
    let mut sweep_lines = (0, 0);
    if let Some(s) = sections.remove("thermal") {
        cfg.thermal = Some(parse_thermal(s)?);
    }
    if let Some(s) = sections.remove("queue") {
        cfg.queue = Some(parse_queue(s)?);
    }
    if let Some(s) = sections.remove("welfare") {
        cfg.welfare = Some(parse_welfare(s)?);
    }
    if let Some(s) = sections.remove("wind") {
        cfg.wind = Some(parse_wind(s)?);
    }
    if let Some(s) = sections.remove("market") {
        cfg.market = Some(parse_market(s)?);
    }
    if let Some(s) = sections.remove("sa") {
        cfg.sa = parse_sa(s)?;
    }
    if let Some(s) = sections.remove("sim") {
        cfg.sim = parse_sim(s)?;
    }
    if let Some(s) = sections.remove("sweep") {
        sweep_lines = (s.line_of("m_grid"), s.line_of("k_r_grid"));
        cfg.sweep = parse_sweep(s)?;
    }
    if let Some(mut s) = sections.remove("run") {
        cfg.seed = s.opt("seed")?.unwrap_or(0);
        cfg.out = s.raw("out").map(|(v, _)| v.to_string());
        s.finish()?;
    }
    if let Some(q) = &cfg.queue {
        if let Some(&m) = cfg.sweep.m_grid.iter().find(|&&m| m < 1 || m > q.model.n_appliances) {
            return Err(ConfigError::new(
                sweep_lines.0,
                format!("`m_grid` value {m} outside [1, {}]", q.model.n_appliances),
            ));
        }
    }
    if let Some(market) = &cfg.market {
        if let Some(&k_r) = cfg.sweep.k_r_grid.iter().find(|&&k| k >= market.k_t) {
            return Err(ConfigError::new(
                sweep_lines.1,
                format!("`k_r_grid` value {k_r} violates k_r < k_t = {}", market.k_t),
            ));
        }
    }
    Ok(cfg)
}

fn join<T: fmt::Display>(values: &[T]) -> String {
    values.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(", ")
}

impl RunConfig {
    /// Writes every field explicitly; `parse_config` reads it back unchanged.
    pub fn to_ini(&self) -> String {
        let mut s = String::new();
        let mut w = |line: String| {
            s.push_str(&line);
            s.push('\n');
        };
        if let Some(t) = &self.thermal {
            let p = &t.params;
            w("[thermal]".into());
            w(format!("t_out = {}", p.t_out));
            w(format!("t_gain = {}", p.t_gain));
            w(format!("tau = {}", p.tau));
            w(format!("w_max = {}", p.w_max));
            w(format!("rated_power = {}", p.rated_power));
            let t_set: Vec<f64> = t.rooms.iter().map(|r| r.t_set).collect();
            let band: Vec<f64> = t.rooms.iter().map(|r| r.band).collect();
            w(format!("t_set = {}", join(&t_set)));
            w(format!("band = {}", join(&band)));
            if let Some(init) = &t.initial_temps {
                w(format!("initial = {}", join(init)));
            }
            if let Some(m) = t.m {
                w(format!("m = {m}"));
            }
            w(format!("horizon = {}\n", t.horizon));
        }
        if let Some(q) = &self.queue {
            w("[queue]".into());
            w(format!("n = {}", q.model.n_appliances));
            w(format!("delta = {}", q.model.delta));
            w(format!("lambda = {}", q.model.lambda));
            w(format!("mu = {}", q.model.mu));
            if let Some(m) = q.m {
                w(format!("m = {m}"));
            }
            w(String::new());
        }
        if let Some(wf) = &self.welfare {
            let c = &wf.cfg;
            w("[welfare]".into());
            w(format!("g_quad = {}", c.g_quad));
            w(format!("g_lin = {}", c.g_lin));
            w(format!("h_price = {}", c.h_price));
            w(format!("kappa = {}", c.kappa));
            w(format!("w_cap = {}", c.w_cap));
            w(format!("market_h = {}\n", wf.market_h));
        }
        if let Some(wind) = &self.wind {
            w("[wind]".into());
            w(format!("p_r = {}", wind.p_r));
            match wind.cv() {
                Some(cv) => w(format!("cv = {cv}\n")),
                None => w(format!("sigma = {}\n", wind.sigma())),
            }
        }
        if let Some(m) = &self.market {
            w("[market]".into());
            w(format!("k_t = {}", m.k_t));
            w(format!("k_r = {}", m.k_r));
            w(format!("gamma = {}", m.gamma));
            let atoms: Vec<String> = m.balancing().iter().map(|(k, p)| format!("{k}:{p}")).collect();
            w(format!("k_b = {}\n", atoms.join(", ")));
        }
        let sa = &self.sa;
        w("[sa]".into());
        w(format!("max_iter = {}", sa.max_iter));
        w(format!("alpha0 = {}", sa.alpha0));
        if let Some(a) = sa.alpha0_r {
            w(format!("alpha0_r = {a}"));
        }
        w(format!("step_offset = {}", sa.step_offset));
        w(format!("epsilon = {}", sa.epsilon));
        w(format!("inner_nodes = {}", sa.inner_nodes));
        w(format!(
            "inner_scheme = {}",
            match sa.inner_scheme {
                Scheme::GaussHermite => "gauss_hermite",
                Scheme::CompositeLegendre => "composite",
            }
        ));
        w(format!("max_outer = {}", sa.max_outer));
        w(format!("window = {}", sa.window));
        if let Some((p_t, p_r)) = sa.start {
            w(format!("start = {p_t}, {p_r}"));
        }
        w(String::new());
        let sim = &self.sim;
        w("[sim]".into());
        w(format!(
            "protocol = {}",
            match sim.protocol {
                Protocol::Binary => "binary",
                Protocol::FullInfo => "full_info",
            }
        ));
        match sim.horizon {
            Horizon::Events(n) => w(format!("events = {n}")),
            Horizon::Seconds(t) => w(format!("seconds = {t}")),
        }
        w(format!("replications = {}", sim.replications));
        w(format!(
            "timing = {}",
            match sim.timing {
                Timing::Slotted => "slotted",
                Timing::Continuous => "continuous",
            }
        ));
        w(format!("disturbance = {}", sim.disturbance));
        if let Some(d) = sim.delta {
            w(format!("delta = {d}"));
        }
        w(String::new());
        let sw = &self.sweep;
        let grids: [(&str, String, bool); 5] = [
            ("m_grid", join(&sw.m_grid), sw.m_grid.is_empty()),
            ("delta_grid", join(&sw.delta_grid), sw.delta_grid.is_empty()),
            ("sigma_grid", join(&sw.sigma_grid), sw.sigma_grid.is_empty()),
            ("cv_grid", join(&sw.cv_grid), sw.cv_grid.is_empty()),
            ("k_r_grid", join(&sw.k_r_grid), sw.k_r_grid.is_empty()),
        ];
        if grids.iter().any(|g| !g.2) {
            w("[sweep]".into());
            for (key, value, empty) in grids {
                if !empty {
                    w(format!("{key} = {value}"));
                }
            }
            w(String::new());
        }
        w("[run]".into());
        w(format!("seed = {}", self.seed));
        if let Some(out) = &self.out {
            w(format!("out = {out}"));
        }
        s
    }

    /// Welfare curve settings for the wind and market commands.
    pub fn market_welfare(&self) -> Option<WelfareConfig> {
        self.welfare
            .as_ref()
            .map(|w| if w.market_h { w.cfg } else { w.cfg.waiting_only() })
    }

    /// Inner quadrature of the stochastic approximation.
    pub fn quadrature(&self) -> Quadrature {
        Quadrature::new(self.sa.inner_scheme, self.sa.inner_nodes).expect("validated at parse time")
    }
}

/// Renders a value at 9 significant digits, without trailing zeros.
pub fn fmt_sig9(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    if !v.is_finite() {
        return v.to_string();
    }
    let sci = format!("{v:.8e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..9).contains(&exp) {
        let decimals = (8 - exp).max(0) as usize;
        let mut s = String::new();
        write!(s, "{v:.decimals$}").expect("string write");
        if s.contains('.') {
            let t = s.trim_end_matches('0').trim_end_matches('.');
            s = t.to_string();
        }
        if s == "-0" {
            s = "0".into();
        }
        s
    } else {
        let m = if mantissa.contains('.') {
            mantissa.trim_end_matches('0').trim_end_matches('.')
        } else {
            mantissa
        };
        format!("{m}e{exp}")
    }
}
