use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufWriter};
use std::path::{Path, PathBuf};

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use ppcsat::controller::{error_derivatives, filtered_error};
use ppcsat::feasibility::{assess, FeasibilityReport};
use ppcsat::sim::{simulate, Trajectory, ViolationKind};

use crate::oracle::{run_trials, CascadeCase, OracleRun, SignalMode};
use crate::output::{fmt_sig, write_report_csv, write_trajectory, write_trials};
use crate::report::render;
use crate::scenario::{parse_list, RawScenario, Scenario};

/// Process exit codes.
pub mod exit {
    pub const OK: i32 = 0;
    pub const USAGE: i32 = 1;
    pub const INFEASIBLE: i32 = 2;
    pub const BREACH: i32 = 3;
    pub const ORACLE: i32 = 4;
}

const AFTER_HELP: &str = "\
Expressions use + - * / ^, unary minus, parentheses, the constants pi and e,
and sin cos tan exp ln abs sqrt sign. Precedence from tightest: ^, unary -,
* /, + -. `^` is right-associative, so -x^2 = -(x^2) and 2^3^2 = 2^9.

Exit codes: 0 ok, 1 usage or I/O error, 2 infeasible design,
3 constraint breach during simulation, 4 bound-oracle failure.";

#[derive(Debug, Parser)]
#[command(name = "ppcsat", version, about = "Design checks and closed-loop simulation for saturated prescribed-performance tracking control", after_help = AFTER_HELP)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Evaluate the feasibility conditions of a scenario.
    Check(CheckArgs),
    /// Simulate a scenario and write the trajectory as CSV.
    Simulate(SimulateArgs),
    /// Drive the filter-cascade envelope oracle.
    VerifyBounds(VerifyArgs),
}

#[derive(Debug, Args)]
struct ScenarioArgs {
    /// Scenario file.
    #[arg(long)]
    config: PathBuf,
    /// Initial state, comma separated (overrides [simulation] x0).
    #[arg(long, value_parser = parse_x0, allow_hyphen_values = true)]
    x0: Option<StateList>,
}

#[derive(Debug, Args)]
struct CheckArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
    /// Also write the report as key,value CSV to this file.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Print the report as CSV instead of text.
    #[arg(long, value_enum)]
    format: Option<Format>,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
    /// Trajectory destination; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Step size (overrides [simulation] dt).
    #[arg(long)]
    dt: Option<f64>,
    /// Horizon (overrides [simulation] t_end).
    #[arg(long = "t-final")]
    t_final: Option<f64>,
    /// Simulate even if the feasibility check fails.
    #[arg(long)]
    force: bool,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SignalArg {
    Random,
    WorstCase,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    /// Filter pole.
    #[arg(long, default_value_t = 2.0)]
    a: f64,
    /// Decay rate of the input envelope.
    #[arg(long = "mu-x", default_value_t = 1.0)]
    mu_x: f64,
    /// Decaying amplitude X0 of the input envelope.
    #[arg(long, default_value_t = 1.0)]
    amp: f64,
    /// Steady-state level Xinf of the input envelope.
    #[arg(long, default_value_t = 0.01)]
    floor: f64,
    /// Total number of first-order sections.
    #[arg(long, default_value_t = 1)]
    p: u32,
    /// Number of high-pass sections among them.
    #[arg(long, default_value_t = 0)]
    q: u32,
    #[arg(long, default_value_t = 1e-3)]
    dt: f64,
    #[arg(long = "t-final", default_value_t = 10.0)]
    t_final: f64,
    #[arg(long, default_value_t = 1)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value = "random")]
    signal: SignalArg,
    /// Draw (a, mu-x, amp, floor, p, q) per trial instead of using the flags.
    #[arg(long)]
    randomize: bool,
    /// Destination for the trial CSV; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
}

/// A comma-separated vector given as a single flag value.
#[derive(Debug, Clone)]
struct StateList(Vec<f64>);

fn parse_x0(text: &str) -> Result<StateList, String> {
    parse_list(text).map(StateList)
}

/// Parses `argv` (including the program name), runs the subcommand and
/// returns the exit code. Diagnostics go to stderr.
pub fn run<I, S>(argv: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                exit::USAGE
            } else {
                exit::OK
            };
        }
    };
    let outcome = match cli.command {
        Command::Check(args) => check(args),
        Command::Simulate(args) => simulate_cmd(args),
        Command::VerifyBounds(args) => verify(args),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            exit::USAGE
        }
    }
}

/// Loads a scenario and applies command-line overrides before validation.
fn load(args: &ScenarioArgs, tweak: impl FnOnce(&mut RawScenario)) -> anyhow::Result<Scenario> {
    let path = &args.config;
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut raw = RawScenario::parse(&text).with_context(|| format!("in {}", path.display()))?;
    if let Some(x0) = &args.x0 {
        raw.x0 = Some(x0.0.clone());
    }
    tweak(&mut raw);
    raw.build()
        .with_context(|| format!("in {}", path.display()))
}

/// Filtered error at `t = 0` for the scenario's initial state.
pub fn initial_filtered_error(s: &Scenario) -> ppcsat::Result<f64> {
    let reference = s.trajectory.eval_at(0.0)?;
    let mut err = vec![0.0; s.plant.order()];
    error_derivatives(&s.sim.x0, &reference, &mut err)?;
    filtered_error(&err, s.vspec.lambdas())
}

pub fn feasibility(s: &Scenario) -> ppcsat::Result<FeasibilityReport<f64>> {
    let r0 = initial_filtered_error(s)?;
    Ok(assess(
        &s.plant,
        &s.performance,
        &s.vspec,
        s.trajectory.xd_bar(),
        s.u_bar,
        r0,
    ))
}

fn create(path: &Path) -> anyhow::Result<BufWriter<File>> {
    let f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    Ok(BufWriter::new(f))
}

fn check(args: CheckArgs) -> anyhow::Result<i32> {
    let scenario = load(&args.scenario, |_| {})?;
    let report = feasibility(&scenario)?;
    if scenario.xd_bar_estimated {
        eprintln!(
            "note: xd_bar estimated on [0, {}] as {}",
            fmt_sig(scenario.sim.t_end),
            fmt_sig(report.xd_bar)
        );
    }
    match args.format {
        Some(Format::Csv) => write_report_csv(io::stdout().lock(), &report)?,
        None => print!("{}", render(&report)),
    }
    if let Some(path) = &args.out {
        write_report_csv(create(path)?, &report)?;
    }
    Ok(if report.feasible() {
        exit::OK
    } else {
        exit::INFEASIBLE
    })
}

fn simulate_cmd(args: SimulateArgs) -> anyhow::Result<i32> {
    let scenario = load(&args.scenario, |raw| {
        if let Some(dt) = args.dt {
            raw.dt = dt;
        }
        if let Some(t) = args.t_final {
            raw.t_end = t;
        }
    })?;
    let report = feasibility(&scenario)?;
    if !report.feasible() {
        eprint!("{}", render(&report));
        if !args.force {
            eprintln!("error: design is infeasible; use --force to simulate anyway");
            return Ok(exit::INFEASIBLE);
        }
        eprintln!("warning: simulating an infeasible design (--force)");
    }
    let traj = simulate(
        &scenario.plant,
        &scenario.trajectory,
        &scenario.performance,
        &scenario.vspec,
        scenario.u_bar,
        &scenario.sim,
    )?;
    match &args.out {
        Some(path) => write_trajectory(create(path)?, &traj)?,
        None => write_trajectory(io::stdout().lock(), &traj)?,
    }
    summarize(&traj);
    Ok(if traj.has_hard_violation() {
        exit::BREACH
    } else {
        exit::OK
    })
}

fn summarize(traj: &Trajectory<f64>) {
    for w in traj.warnings() {
        eprintln!(
            "warning: {} exceeded at t = {} ({} > {})",
            w.kind,
            fmt_sig(w.time),
            fmt_sig(w.value),
            fmt_sig(w.bound)
        );
    }
    for v in traj.hard_violations() {
        let what = match v.kind {
            ViolationKind::Ppc => "tracking error left its funnel",
            ViolationKind::Vpc => "filtered error left its funnel",
            ViolationKind::Pic => "input bound exceeded",
            ViolationKind::Envelope(_) => unreachable!("envelope breaches are warnings"),
        };
        eprintln!(
            "error: {} breach at t = {}: {what} (|value| = {}, bound = {})",
            v.kind,
            fmt_sig(v.time),
            fmt_sig(v.value),
            fmt_sig(v.bound)
        );
    }
}

fn verify(args: VerifyArgs) -> anyhow::Result<i32> {
    let run = OracleRun {
        case: CascadeCase {
            a: args.a,
            mu_x: args.mu_x,
            amp: args.amp,
            floor: args.floor,
            p: args.p,
            q: args.q,
        },
        randomize: args.randomize,
        dt: args.dt,
        t_end: args.t_final,
        trials: args.trials,
        seed: args.seed,
        signal: match args.signal {
            SignalArg::Random => SignalMode::Random,
            SignalArg::WorstCase => SignalMode::WorstCase,
        },
    };
    let rows = run_trials(&run)?;
    match &args.out {
        Some(path) => write_trials(create(path)?, &rows)?,
        None => write_trials(io::stdout().lock(), &rows)?,
    }
    let failures = rows.iter().filter(|r| !r.pass).count();
    if failures > 0 {
        eprintln!(
            "error: {failures} of {} trials exceeded the envelope",
            rows.len()
        );
        return Ok(exit::ORACLE);
    }
    Ok(exit::OK)
}
