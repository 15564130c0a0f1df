//! `rmab`: check, solve, simulate, verify and sweep from a TOML config.
//!
//! Exit codes: 0 ok, 1 parse or input error, 2 optimality conditions fail,
//! 3 solver budget exceeded, 4 verification failure.

pub mod config;
pub mod output;

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rmab_core::sim::{run_indexed_episode, write_trace_csv};
use rmab_core::solver::{evaluate_policy_with, optimal_value_with, SolverOptions, DEFAULT_BUDGET};
use rmab_core::theorem::{write_sweep_csv, Violation};
use rmab_core::{
    check_conditions, counterexample_sweep, estimate_value, verify_all, Error, InitialBelief,
    Instance, InstanceSpec, Myopic, PolicyKind, RewardKind,
};
use serde::Serialize;

use crate::config::RunConfig;
use crate::output::{to_json, write_file, Sink};

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "RMAB_OUT_DIR";

pub const EXIT_OK: i32 = 0;
pub const EXIT_PARSE: i32 = 1;
pub const EXIT_CONDITIONS: i32 = 2;
pub const EXIT_BUDGET: i32 = 3;
pub const EXIT_VERIFY: i32 = 4;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),
    #[error("{0}")]
    Model(Error),
    #[error("{0}")]
    Io(String),
    #[error("verification failed: {0}")]
    Verification(String),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Model(e)
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Model(Error::BudgetExceeded { .. }) => EXIT_BUDGET,
            CliError::Verification(_) => EXIT_VERIFY,
            _ => EXIT_PARSE,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "rmab", version, about = "Myopic sensing under imperfect sensing", args_override_self = true)]
pub struct Cli {
    /// TOML run configuration.
    #[arg(long, short, global = true)]
    pub config: Option<PathBuf>,

    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    /// Output file; defaults to $RMAB_OUT_DIR/<command>.<ext>, else stdout.
    #[arg(long, short, global = true)]
    pub out: Option<PathBuf>,

    #[command(flatten)]
    pub instance: InstanceArgs,

    #[command(subcommand)]
    pub command: Command,
}

/// Overrides for the `[instance]` section.
#[derive(Debug, Clone, Default, Args)]
pub struct InstanceArgs {
    #[arg(long, global = true)]
    pub n: Option<usize>,
    #[arg(long, global = true)]
    pub k: Option<usize>,
    #[arg(long, global = true)]
    pub horizon: Option<usize>,
    #[arg(long, global = true)]
    pub beta: Option<f64>,
    #[arg(long, global = true)]
    pub p01: Option<f64>,
    #[arg(long, global = true)]
    pub p11: Option<f64>,
    #[arg(long, global = true)]
    pub epsilon: Option<f64>,
    #[arg(long, global = true)]
    pub delta: Option<f64>,
    /// sum-throughput | any-success
    #[arg(long, global = true)]
    pub reward: Option<String>,
    /// "stationary" or a comma-separated belief list.
    #[arg(long, global = true)]
    pub initial: Option<String>,
    /// unit | band
    #[arg(long, global = true)]
    pub delta_domain: Option<String>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate the optimality conditions.
    Check,
    /// Exact myopic and optimal values.
    Solve {
        /// Share values between belief nodes equal to within 1e-9.
        #[arg(long)]
        memo: bool,
        #[arg(long)]
        budget: Option<f64>,
    },
    /// Monte Carlo estimate of a policy's value.
    Simulate {
        #[arg(long)]
        episodes: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        /// myopic | random | fixed
        #[arg(long)]
        policy: Option<String>,
        /// Channels for the fixed policy, comma-separated.
        #[arg(long, value_delimiter = ',')]
        channels: Option<Vec<usize>>,
        /// Write the trace of episode 0 as CSV.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Randomized lemma checks and the theorem check.
    Verify {
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        /// Directory for failure artifacts.
        #[arg(long)]
        artifact_dir: Option<PathBuf>,
        /// Scales ε inside φ; a deliberate fault for mutation testing.
        #[arg(long, hide = true)]
        inject_phi_fault: Option<f64>,
    },
    /// Classify a parameter grid and emit CSV.
    Sweep {
        /// Cap on the summed expansion cost of the grid.
        #[arg(long)]
        budget: Option<f64>,
    },
}

/// Parses `args` (including the program name), runs the command and returns
/// the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_PARSE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let out_dir = std::env::var_os(OUT_DIR_ENV).map(PathBuf::from);
    match execute(&cli, out_dir.as_deref()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("rmab: {e}");
            e.exit_code()
        }
    }
}

pub fn execute(cli: &Cli, out_dir: Option<&Path>) -> Result<i32, CliError> {
    let mut config = match &cli.config {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| CliError::Io(format!("reading {}: {e}", p.display())))?;
            RunConfig::parse(&text).map_err(|e| match e {
                CliError::Config(m) => CliError::Config(format!("{}: {m}", p.display())),
                other => other,
            })?
        }
        None => RunConfig::default(),
    };
    apply_overrides(&mut config, &cli.instance)?;

    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(t) = cli.threads {
        if t == 0 {
            return Err(CliError::Config("--threads must be at least 1".into()));
        }
        pool = pool.num_threads(t);
    }
    let pool = pool
        .build()
        .map_err(|e| CliError::Io(format!("starting worker pool: {e}")))?;
    pool.install(|| dispatch(cli, &config, out_dir))
}

fn apply_overrides(config: &mut RunConfig, a: &InstanceArgs) -> Result<(), CliError> {
    let s = &mut config.instance;
    macro_rules! set {
        ($($f:ident),*) => { $( if a.$f.is_some() { s.$f = a.$f; } )* };
    }
    set!(n, k, horizon, beta, p01, p11, epsilon, delta);
    if let Some(r) = &a.reward {
        s.reward = Some(parse_enum::<RewardKind>(r, "--reward")?);
    }
    if let Some(d) = &a.delta_domain {
        s.delta_domain = Some(parse_enum(d, "--delta-domain")?);
    }
    if let Some(i) = &a.initial {
        s.initial = Some(if i == "stationary" {
            InitialBelief::Stationary
        } else {
            InitialBelief::Explicit(
                i.split(',')
                    .map(|x| x.trim().parse::<f64>())
                    .collect::<Result<_, _>>()
                    .map_err(|e| CliError::Config(format!("--initial: {e}")))?,
            )
        });
    }
    Ok(())
}

fn parse_enum<T: serde::de::DeserializeOwned>(s: &str, flag: &str) -> Result<T, CliError> {
    serde_json::from_value(serde_json::Value::String(s.to_string()))
        .map_err(|e| CliError::Config(format!("{flag}: {e}")))
}

fn build_instance(config: &RunConfig) -> Result<Instance, CliError> {
    let spec = config.instance_spec()?;
    spec.build().map_err(|e| match e {
        Error::InvalidInstance { field, reason } => {
            CliError::Config(format!("instance.{field}: {reason}"))
        }
        Error::InvalidProbability { name, value, range } => CliError::Config(format!(
            "instance.{name}: must be a probability in {range}, got {value}"
        )),
        other => CliError::Config(format!("instance: {other}")),
    })
}

fn dispatch(cli: &Cli, config: &RunConfig, out_dir: Option<&Path>) -> Result<i32, CliError> {
    match &cli.command {
        Command::Check => cmd_check(cli, config, out_dir),
        Command::Solve { memo, budget } => cmd_solve(cli, config, out_dir, *memo, *budget),
        Command::Simulate {
            episodes,
            seed,
            policy,
            channels,
            trace,
        } => {
            let mut config = config.clone();
            if let Some(p) = policy {
                config.policy.kind = Some(parse_enum(p, "--policy")?);
            }
            if channels.is_some() {
                config.policy.channels = channels.clone();
            }
            let sim = &mut config.simulate;
            sim.episodes = episodes.or(sim.episodes);
            sim.seed = seed.or(sim.seed);
            if trace.is_some() {
                sim.trace = trace.clone();
            }
            cmd_simulate(cli, &config, out_dir)
        }
        Command::Verify {
            trials,
            seed,
            artifact_dir,
            inject_phi_fault,
        } => {
            let trials = trials.or(config.verify.trials).unwrap_or(1000);
            let seed = seed.or(config.verify.seed).unwrap_or(0);
            cmd_verify(cli, config, out_dir, trials, seed, artifact_dir.as_deref(), *inject_phi_fault)
        }
        Command::Sweep { budget } => cmd_sweep(cli, config, out_dir, *budget),
    }
}

fn cmd_check(cli: &Cli, config: &RunConfig, out_dir: Option<&Path>) -> Result<i32, CliError> {
    let inst = build_instance(config)?;
    let report = check_conditions(&inst)?;
    Sink::resolve(cli.out.as_deref(), out_dir, "check.json").write(to_json(&report)?.as_bytes())?;
    Ok(if report.all_ok { EXIT_OK } else { EXIT_CONDITIONS })
}

#[derive(Serialize)]
struct SolveOutput {
    instance: InstanceSpec,
    myopic_value: f64,
    optimal_value: f64,
    gap: f64,
    first_optimal_action: Vec<usize>,
    myopic: rmab_core::ValueReport,
    optimal: rmab_core::OptimalReport,
}

fn cmd_solve(
    cli: &Cli,
    config: &RunConfig,
    out_dir: Option<&Path>,
    memo: bool,
    budget: Option<f64>,
) -> Result<i32, CliError> {
    let inst = build_instance(config)?;
    let opts = SolverOptions {
        budget: budget.unwrap_or(DEFAULT_BUDGET),
        memo,
    };
    let optimal = optimal_value_with(&inst, &opts)?;
    let myopic = evaluate_policy_with(&inst, &mut Myopic::new(inst.k()), &opts)?;
    let out = SolveOutput {
        instance: inst.to_spec(),
        myopic_value: myopic.value,
        optimal_value: optimal.value,
        gap: optimal.value - myopic.value,
        first_optimal_action: optimal.first_action.channels().to_vec(),
        myopic,
        optimal,
    };
    Sink::resolve(cli.out.as_deref(), out_dir, "solve.json").write(to_json(&out)?.as_bytes())?;
    Ok(EXIT_OK)
}

#[derive(Serialize)]
struct SimulateOutput {
    instance: InstanceSpec,
    policy: PolicyKind,
    #[serde(flatten)]
    result: rmab_core::SimResult,
}

fn cmd_simulate(cli: &Cli, config: &RunConfig, out_dir: Option<&Path>) -> Result<i32, CliError> {
    let inst = build_instance(config)?;
    let policy = config.policy_kind()?;
    let episodes = config.simulate.episodes.unwrap_or(10_000);
    let seed = config.simulate.seed.unwrap_or(0);
    let result = estimate_value(&inst, &policy, episodes, seed).map_err(|e| match e {
        Error::InvalidAction(m) => CliError::Config(format!("policy: {m}")),
        Error::InvalidArgument(m) => CliError::Config(format!("simulate.episodes: {m}")),
        other => other.into(),
    })?;
    if let Some(path) = &config.simulate.trace {
        let trace = run_indexed_episode(&inst, &policy, seed, 0)?;
        let mut buf = Vec::new();
        write_trace_csv(&trace, &mut buf)?;
        write_file(path, &buf)?;
    }
    let out = SimulateOutput {
        instance: inst.to_spec(),
        policy,
        result,
    };
    Sink::resolve(cli.out.as_deref(), out_dir, "simulate.json").write(to_json(&out)?.as_bytes())?;
    Ok(EXIT_OK)
}

#[derive(Serialize)]
struct Artifact<'a> {
    lemma: &'a str,
    violation: &'a Violation,
}

fn cmd_verify(
    cli: &Cli,
    config: &RunConfig,
    out_dir: Option<&Path>,
    trials: usize,
    seed: u64,
    artifact_dir: Option<&Path>,
    fault: Option<f64>,
) -> Result<i32, CliError> {
    let mut inst = build_instance(config)?;
    if let Some(scale) = fault {
        inst = inst.with_sensing(inst.sensing().with_phi_fault(scale));
    }
    let report = verify_all(&inst, trials, seed)?;
    for w in &report.warnings {
        eprintln!("rmab: warning: {w}");
    }
    let sink = Sink::resolve(cli.out.as_deref(), out_dir, "verify.json");
    sink.write(to_json(&report)?.as_bytes())?;
    if report.passed {
        return Ok(EXIT_OK);
    }
    let dir = artifact_dir
        .map(Path::to_path_buf)
        .or_else(|| sink.dir())
        .unwrap_or_else(|| PathBuf::from("rmab-artifacts"));
    let mut failed = Vec::new();
    for l in report.lemmas.iter().filter(|l| !l.passed) {
        if let Some(v) = &l.violation {
            let path = dir.join(format!("violation-{}.json", l.name));
            write_file(&path, to_json(&Artifact { lemma: l.name, violation: v })?.as_bytes())?;
            eprintln!("rmab: {} violated; replay data in {}", l.name, path.display());
            failed.push(l.name.to_string());
        }
    }
    if let Some(t) = report.theorem.as_ref().filter(|t| !t.passed) {
        let path = dir.join("violation-theorem.json");
        write_file(&path, to_json(t)?.as_bytes())?;
        eprintln!("rmab: theorem gap {} exceeds tolerance; see {}", t.gap.gap, path.display());
        failed.push("theorem".into());
    }
    Err(CliError::Verification(failed.join(", ")))
}

fn cmd_sweep(
    cli: &Cli,
    config: &RunConfig,
    out_dir: Option<&Path>,
    budget: Option<f64>,
) -> Result<i32, CliError> {
    let grid = config.sweep_grid()?;
    let budget = budget.or(config.sweep.budget).unwrap_or(f64::INFINITY);
    let rows = counterexample_sweep(&grid, budget);
    let mut buf = Vec::new();
    write_sweep_csv(&rows, &mut buf)?;
    Sink::resolve(cli.out.as_deref(), out_dir, "sweep.csv").write(&buf)?;
    Ok(EXIT_OK)
}
