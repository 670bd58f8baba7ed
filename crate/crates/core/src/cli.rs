//! Command-line front end: `pdlc <subcommand> --config FILE --out FILE`.
//!
//! Exit codes: 0 success, 2 configuration error, 3 numeric failure, 1 I/O.

use std::fmt;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::config::{fmt_sig9, parse_config, ConfigError, Protocol, RunConfig};
use crate::error::PdlcError;
use crate::metrics::{energy_metric, optimize_m_energy, optimize_m_welfare, welfare_continuous, welfare_metric, WelfareCurve};
use crate::procurement::{contract_sweep, single_market_joint, Algorithm, ProcurementResult};
use crate::queue::{steady_state, tradeoff_sweep};
use crate::sim::{simulate_binary, simulate_full_info, SimConfig};
use crate::thermal::{find_feasible_delta, min_packets, ApplianceState};
use crate::wind::{expected_welfare, optimal_cost_F, optimal_pt_given_wind, Quadrature};

#[derive(Debug, Parser)]
#[command(name = "pdlc", version, about = "Packetized direct load control toolkit")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Steady state of the binary-information queue.
    QueueSolve(RunArgs),
    /// Energy- and welfare-optimal packet reservations.
    OptimizeM(RunArgs),
    /// Served-count variance and extra wait over an (m, delta) grid.
    TradeoffSweep(RunArgs),
    /// Expected welfare and optimal top-up under uncertain wind.
    WindWelfare(RunArgs),
    /// Joint day-ahead purchase without a balancing market.
    ProcureSingle(RunArgs),
    /// Day-ahead purchase with real-time recourse by stochastic approximation.
    ProcureDouble(RunArgs),
    /// Discrete-event simulation of either protocol.
    Simulate(RunArgs),
    /// Optimal contracts over a grid of wind variability and reservation price.
    ContractSweep(RunArgs),
}

#[derive(Debug, Clone, PartialEq, Eq, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Seed override for sampling subcommands.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Stochastic-approximation variant.
    #[arg(long, default_value_t = 3, value_parser = clap::value_parser!(u8).range(1..=3))]
    pub algorithm: u8,
    /// Iterate trace of procure-double.
    #[arg(long)]
    pub trace: Option<PathBuf>,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Self::QueueSolve(_) => "queue-solve",
            Self::OptimizeM(_) => "optimize-m",
            Self::TradeoffSweep(_) => "tradeoff-sweep",
            Self::WindWelfare(_) => "wind-welfare",
            Self::ProcureSingle(_) => "procure-single",
            Self::ProcureDouble(_) => "procure-double",
            Self::Simulate(_) => "simulate",
            Self::ContractSweep(_) => "contract-sweep",
        }
    }

    pub fn args(&self) -> &RunArgs {
        match self {
            Self::QueueSolve(a)
            | Self::OptimizeM(a)
            | Self::TradeoffSweep(a)
            | Self::WindWelfare(a)
            | Self::ProcureSingle(a)
            | Self::ProcureDouble(a)
            | Self::Simulate(a)
            | Self::ContractSweep(a) => a,
        }
    }
}

#[derive(Debug)]
pub enum CliError {
    Config(ConfigError),
    Numeric(PdlcError),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) => 2,
            Self::Numeric(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Config(e) => write!(f, "{e}"),
            Self::Numeric(e) => write!(f, "numeric failure: {e}"),
        }
    }
}

impl From<PdlcError> for CliError {
    fn from(e: PdlcError) -> Self {
        Self::Numeric(e)
    }
}

fn missing(section: &str, command: &str) -> CliError {
    CliError::Config(ConfigError {
        line: 0,
        message: format!("{command} needs a [{section}] section"),
    })
}

fn incomplete(message: String) -> CliError {
    CliError::Config(ConfigError { line: 0, message })
}

/// Output of one subcommand. A `failure` still comes with whatever partial
/// result was produced, and maps to exit code 3.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub csv: String,
    pub trace: Option<String>,
    pub failure: Option<String>,
}

impl Outcome {
    fn table(csv: String) -> Self {
        Self {
            csv,
            trace: None,
            failure: None,
        }
    }
}

struct Csv(String);

impl Csv {
    fn new(header: &[&str]) -> Self {
        Self(header.join(",") + "\n")
    }

    fn header_owned(header: Vec<String>) -> Self {
        Self(header.join(",") + "\n")
    }

    fn row(&mut self, cells: Vec<String>) {
        self.0.push_str(&cells.join(","));
        self.0.push('\n');
    }
}

fn f(v: f64) -> String {
    fmt_sig9(v)
}

fn curve(cfg: &RunConfig, command: &str) -> Result<WelfareCurve, CliError> {
    let q = cfg.queue.as_ref().ok_or_else(|| missing("queue", command))?;
    let w = cfg.market_welfare().ok_or_else(|| missing("welfare", command))?;
    Ok(welfare_continuous(&q.model, &w)?)
}

fn queue_solve(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let q = cfg.queue.as_ref().ok_or_else(|| missing("queue", "queue-solve"))?;
    let m = q.m.ok_or_else(|| incomplete("queue-solve needs `m` in [queue]".into()))?;
    let sol = steady_state(&q.model.with_servers(m)?)?;
    let mut header: Vec<String> = (0..sol.p.len()).map(|x| format!("p{x}")).collect();
    header.extend(["Q", "W", "Var", "Ex", "De"].map(String::from));
    let mut csv = Csv::header_owned(header);
    let mut row: Vec<String> = sol.p.iter().map(|&p| f(p)).collect();
    row.extend([sol.q_mean, sol.w_extra, sol.var_served, sol.excess, sol.deficiency].map(f));
    csv.row(row);
    Ok(Outcome::table(csv.0))
}

fn optimize_m(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let q = cfg.queue.as_ref().ok_or_else(|| missing("queue", "optimize-m"))?;
    let mut csv = Csv::new(&["metric", "m_star", "value"]);
    let m = optimize_m_energy(&q.model)?;
    csv.row(vec!["energy".into(), m.to_string(), f(energy_metric(&q.model, m)?)]);
    if let Some(w) = &cfg.welfare {
        let m = optimize_m_welfare(&q.model, &w.cfg)?;
        csv.row(vec!["welfare".into(), m.to_string(), f(welfare_metric(&q.model, m, &w.cfg)?)]);
    }
    Ok(Outcome::table(csv.0))
}

fn tradeoff(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let q = cfg.queue.as_ref().ok_or_else(|| missing("queue", "tradeoff-sweep"))?;
    let sw = &cfg.sweep;
    if sw.m_grid.is_empty() || sw.delta_grid.is_empty() {
        return Err(incomplete("tradeoff-sweep needs `m_grid` and `delta_grid` in [sweep]".into()));
    }
    let rows = tradeoff_sweep(&q.model, &sw.m_grid, &sw.delta_grid)?;
    let mut csv = Csv::new(&["m", "delta", "var_served", "w_extra"]);
    for r in rows {
        csv.row(vec![r.m.to_string(), f(r.delta), f(r.var_served), f(r.w_extra)]);
    }
    Ok(Outcome::table(csv.0))
}

fn wind_welfare(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let c = curve(cfg, "wind-welfare")?;
    let wind = cfg.wind.ok_or_else(|| missing("wind", "wind-welfare"))?;
    let k_t = cfg.market.as_ref().map_or(0.0, |m| m.k_t);
    let quad = Quadrature::default();
    let sigmas = if cfg.sweep.sigma_grid.is_empty() {
        vec![wind.sigma()]
    } else {
        cfg.sweep.sigma_grid.clone()
    };
    let mut csv = Csv::new(&["p_r", "sigma", "p_t_star", "expected_welfare", "optimal_cost"]);
    for sigma in sigmas {
        let p_t = optimal_pt_given_wind(wind.p_r, sigma, &c, k_t, &quad);
        csv.row(vec![
            f(wind.p_r),
            f(sigma),
            f(p_t),
            f(expected_welfare(wind.p_r, p_t, sigma, &c, &quad)),
            f(optimal_cost_F(wind.p_r, sigma, &c, &quad)),
        ]);
    }
    Ok(Outcome::table(csv.0))
}

fn procure_single(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let c = curve(cfg, "procure-single")?;
    let wind = cfg.wind.ok_or_else(|| missing("wind", "procure-single"))?;
    let cv = wind
        .cv()
        .ok_or_else(|| incomplete("procure-single needs the correlated wind model (`cv` in [wind])".into()))?;
    let spec = cfg.market.as_ref().ok_or_else(|| missing("market", "procure-single"))?;
    let sol = single_market_joint(spec, cv, &c, &Quadrature::default())?;
    let mut csv = Csv::new(&["p_t", "p_r", "cost", "outer_evaluations"]);
    csv.row(vec![f(sol.p_t), f(sol.p_r), f(sol.cost), sol.outer_evaluations.to_string()]);
    Ok(Outcome::table(csv.0))
}

fn result_row(r: &ProcurementResult) -> Vec<String> {
    vec![
        f(r.p_t_star),
        f(r.p_r_star),
        f(r.cost),
        r.rt_solve_count.to_string(),
        r.outer_iterations.to_string(),
        r.phase1_iterations.to_string(),
        r.converged.to_string(),
    ]
}

fn procure_double(cfg: &RunConfig, algorithm: Algorithm, seed: u64) -> Result<Outcome, CliError> {
    let c = curve(cfg, "procure-double")?;
    let wind = cfg.wind.ok_or_else(|| missing("wind", "procure-double"))?;
    let spec = cfg.market.as_ref().ok_or_else(|| missing("market", "procure-double"))?;
    let sa = crate::procurement::SaConfig { seed, ..cfg.sa.clone() };
    let (result, failure) = match algorithm.run(spec, &wind, &c, &sa) {
        Ok(r) => (r, None),
        Err(PdlcError::NotConverged { outer, result }) => {
            let msg = PdlcError::NotConverged {
                outer,
                result: result.clone(),
            }
            .to_string();
            (*result, Some(msg))
        }
        Err(e) => return Err(e.into()),
    };
    let mut csv = Csv::new(&[
        "algorithm",
        "p_t_star",
        "p_r_star",
        "cost",
        "rt_solve_count",
        "outer_iterations",
        "phase1_iterations",
        "converged",
    ]);
    let mut row = vec![(algorithm as u8).to_string()];
    row.extend(result_row(&result));
    csv.row(row);
    let mut trace = Csv::new(&["iteration", "p_t", "p_r"]);
    for (i, &(p_t, p_r)) in result.trace.iter().enumerate() {
        trace.row(vec![(i + 1).to_string(), f(p_t), f(p_r)]);
    }
    Ok(Outcome {
        csv: csv.0,
        trace: Some(trace.0),
        failure,
    })
}

fn simulate(cfg: &RunConfig, seed: u64) -> Result<Outcome, CliError> {
    let sim = &cfg.sim;
    let sim_cfg = SimConfig {
        horizon: sim.horizon,
        seed,
        replications: sim.replications,
        timing: sim.timing,
        disturbance: sim.disturbance,
    };
    match sim.protocol {
        Protocol::Binary => {
            let q = cfg.queue.as_ref().ok_or_else(|| missing("queue", "simulate"))?;
            let m = q.m.ok_or_else(|| incomplete("simulate needs `m` in [queue]".into()))?;
            let qp = q.model.with_servers(m)?;
            let exact = steady_state(&qp)?;
            let rep = simulate_binary(&qp, &sim_cfg)?;
            let tv = 0.5
                * exact
                    .p
                    .iter()
                    .zip(&rep.empirical_p)
                    .map(|(a, b)| (a - b).abs())
                    .sum::<f64>();
            let mut header: Vec<String> = [
                "empirical_w",
                "w_std_err",
                "analytic_w",
                "empirical_var",
                "analytic_var",
                "tv_distance",
                "mean_queue",
                "little_residual",
                "completed",
            ]
            .map(String::from)
            .to_vec();
            header.extend((0..rep.empirical_p.len()).map(|x| format!("p{x}")));
            let mut csv = Csv::header_owned(header);
            let mut row: Vec<String> = [
                rep.empirical_w,
                rep.w_std_err,
                exact.w_extra,
                rep.empirical_var,
                exact.var_served,
                tv,
                rep.mean_queue,
                rep.little_residual,
            ]
            .map(f)
            .to_vec();
            row.push(rep.completed.to_string());
            row.extend(rep.empirical_p.iter().map(|&p| f(p)));
            csv.row(row);
            Ok(Outcome::table(csv.0))
        }
        Protocol::FullInfo => {
            let t = cfg.thermal.as_ref().ok_or_else(|| missing("thermal", "simulate"))?;
            let temps = t
                .initial_temps
                .clone()
                .unwrap_or_else(|| t.rooms.iter().map(|r| r.t_set).collect());
            let fleet: Vec<ApplianceState> = temps
                .iter()
                .enumerate()
                .map(|(i, &temp)| ApplianceState::new(i, temp))
                .collect();
            let m = match t.m {
                Some(m) => m,
                None => min_packets(&t.rooms, &t.params)?,
            };
            let delta = match sim.delta {
                Some(d) => d,
                None => find_feasible_delta(&fleet, &t.rooms, &t.params, m, t.horizon)?,
            };
            let rep = simulate_full_info(&fleet, &t.rooms, &t.params, m, delta, &sim_cfg)?;
            let mut csv = Csv::new(&["delta", "m", "intervals", "band_violations", "min_grants", "max_grants"]);
            let g = &rep.packet_grants;
            csv.row(vec![
                f(delta),
                m.to_string(),
                g.len().to_string(),
                rep.band_violations.to_string(),
                g.iter().min().copied().unwrap_or(0).to_string(),
                g.iter().max().copied().unwrap_or(0).to_string(),
            ]);
            Ok(Outcome::table(csv.0))
        }
    }
}

fn sweep(cfg: &RunConfig, algorithm: Algorithm, seed: u64) -> Result<Outcome, CliError> {
    let c = curve(cfg, "contract-sweep")?;
    let spec = cfg.market.as_ref().ok_or_else(|| missing("market", "contract-sweep"))?;
    let sw = &cfg.sweep;
    if sw.cv_grid.is_empty() || sw.k_r_grid.is_empty() {
        return Err(incomplete("contract-sweep needs `cv_grid` and `k_r_grid` in [sweep]".into()));
    }
    let sa = crate::procurement::SaConfig { seed, ..cfg.sa.clone() };
    let cells = contract_sweep(spec, &c, &sw.cv_grid, &sw.k_r_grid, &sa, algorithm)?;
    let mut csv = Csv::new(&["cv", "k_r", "p_r_star", "p_t_star", "cost", "converged", "error"]);
    for cell in cells {
        let mut row = vec![f(cell.cv), f(cell.k_r)];
        match cell.outcome {
            Ok(r) => {
                row.extend([f(r.p_r_star), f(r.p_t_star), f(r.cost), r.converged.to_string(), String::new()]);
            }
            Err(PdlcError::NotConverged { outer, result }) => {
                row.extend([
                    f(result.p_r_star),
                    f(result.p_t_star),
                    f(result.cost),
                    "false".into(),
                    format!("not converged after {outer} outer iterations"),
                ]);
            }
            Err(e) => {
                let msg = e.to_string().replace([',', '\n'], ";");
                row.extend(["".into(), "".into(), "".into(), "false".into(), msg]);
            }
        }
        csv.row(row);
    }
    Ok(Outcome::table(csv.0))
}

/// Runs one subcommand on a parsed configuration. `seed` overrides the
/// configured seed when given.
pub fn run_subcommand(command: &Command, cfg: &RunConfig) -> Result<Outcome, CliError> {
    let args = command.args();
    let seed = args.seed.unwrap_or(cfg.seed);
    let algorithm = Algorithm::from_index(args.algorithm)
        .ok_or_else(|| incomplete(format!("unknown algorithm {}", args.algorithm)))?;
    match command {
        Command::QueueSolve(_) => queue_solve(cfg),
        Command::OptimizeM(_) => optimize_m(cfg),
        Command::TradeoffSweep(_) => tradeoff(cfg),
        Command::WindWelfare(_) => wind_welfare(cfg),
        Command::ProcureSingle(_) => procure_single(cfg),
        Command::ProcureDouble(_) => procure_double(cfg, algorithm, seed),
        Command::Simulate(_) => simulate(cfg, seed),
        Command::ContractSweep(_) => sweep(cfg, algorithm, seed),
    }
}

/// Entry point of the binary; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let command = cli.command;
    let name = command.name();
    let args = command.args();
    let text = match std::fs::read_to_string(&args.config) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("config: cannot read {}: {e}", args.config.display());
            return 2;
        }
    };
    let cfg = match parse_config(&text) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("{e}");
            return 2;
        }
    };
    let outcome = match run_subcommand(&command, &cfg) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("{name}: {e}");
            return e.exit_code();
        }
    };
    if let Err(e) = std::fs::write(&args.out, &outcome.csv) {
        eprintln!("cannot write {}: {e}", args.out.display());
        return 1;
    }
    if let (Some(path), Some(trace)) = (&args.trace, &outcome.trace) {
        if let Err(e) = std::fs::write(path, trace) {
            eprintln!("cannot write {}: {e}", path.display());
            return 1;
        }
    }
    match outcome.failure {
        Some(msg) => {
            eprintln!("{name}: {msg}");
            3
        }
        None => 0,
    }
}
