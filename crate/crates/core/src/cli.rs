//! The `irsopt` command-line front end.
//!
//! Exit codes: 0 on success, 1 on runtime failures or failed oracle checks,
//! 2 on usage and configuration errors.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::config::{default_scenario, tiny_scenario, ScenarioConfig, SweepAxis};
use crate::error::{Error, Result};
use crate::irs_fp::PhaseVector;
use crate::oracle::{run_oracle_checks, RandomInstance};
use crate::simulator::{
    run_batch, sweep, write_plot_csv, write_power_trace_csv, write_summary_csv, write_sweep_csv,
    write_trace_csv, ControllerKind,
};
use crate::solver::solve_slot;

#[derive(Debug, Parser)]
#[command(
    name = "irsopt",
    version,
    about = "Delay-constrained power minimization for multi-IRS uplink IoVT"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Monte Carlo batch per controller; writes summary and trace CSVs.
    Run(RunArgs),
    /// Batch over a list of values of one parameter.
    Sweep(SweepArgs),
    /// Brute-force oracle checks on a small configuration.
    OracleCheck(OracleArgs),
    /// Per-iteration objective traces of the per-slot solver.
    Convergence(ConvergenceArgs),
    /// Parse and validate a configuration; prints the resolved scenario.
    ValidateConfig(ScenarioArgs),
}

#[derive(Debug, Args)]
pub struct ScenarioArgs {
    /// TOML scenario file, or `default` / `tiny` for the built-in scenarios.
    #[arg(long, default_value = "default")]
    pub config: String,
    /// Dotted `key=value` override, applied after loading (repeatable).
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
}

impl ScenarioArgs {
    pub fn load(&self) -> Result<ScenarioConfig> {
        let base = match self.config.as_str() {
            "default" => default_scenario(),
            "tiny" => tiny_scenario(),
            path => return ScenarioConfig::load(Path::new(path), &self.overrides),
        };
        ScenarioConfig::from_toml_str(&base.to_toml_string(), &self.overrides)
    }
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Base seed; run `i` uses `seed + i`. Defaults to the scenario's seed.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value = "proposed,random_phase,without_irs")]
    pub controllers: String,
    #[arg(long, default_value_t = 1)]
    pub runs: usize,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value = "proposed,random_phase,without_irs")]
    pub controllers: String,
    /// One of V, K, M, N, d_th, A_max.
    #[arg(long)]
    pub axis: String,
    /// Comma-separated axis values.
    #[arg(long)]
    pub values: String,
    #[arg(long, default_value_t = 1)]
    pub runs: usize,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Instances per check.
    #[arg(long, default_value_t = 100)]
    pub trials: usize,
}

#[derive(Debug, Args)]
pub struct ConvergenceArgs {
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Number of random slots.
    #[arg(long, default_value_t = 20)]
    pub trials: usize,
}

/// Parses `args` (including the program name) and runs the command.
pub fn run_from_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_usage() {
                2
            } else {
                1
            }
        }
    }
}

/// Runs one command; `Ok` carries the exit code.
pub fn execute(command: &Command) -> Result<i32> {
    match command {
        Command::Run(a) => cmd_run(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::OracleCheck(a) => cmd_oracle_check(a),
        Command::Convergence(a) => cmd_convergence(a),
        Command::ValidateConfig(a) => {
            let cfg = a.load()?;
            print!("{}", cfg.to_toml_string());
            Ok(0)
        }
    }
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    fs::create_dir_all(dir)?;
    Ok(BufWriter::new(File::create(dir.join(name))?))
}

fn parse_values(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(str::trim)
        .filter(|v| !v.is_empty())
        .map(|v| {
            v.parse::<f64>()
                .map_err(|_| Error::config(format!("bad axis value `{v}`")))
        })
        .collect()
}

fn cmd_run(a: &RunArgs) -> Result<i32> {
    let cfg = a.scenario.load()?;
    let controllers = ControllerKind::parse_list(&a.controllers)?;
    let seed = a.seed.unwrap_or(cfg.rng_seed);
    let results = run_batch(&cfg, &controllers, a.runs, seed)?;
    let summaries: Vec<_> = results.iter().map(|r| r.summary.clone()).collect();
    let episodes: Vec<_> = results.into_iter().flat_map(|r| r.episodes).collect();
    write_summary_csv(create(&a.out, "summary.csv")?, &summaries)?;
    write_trace_csv(create(&a.out, "trace.csv")?, &episodes)?;
    write_power_trace_csv(create(&a.out, "power_trace.csv")?, &episodes)?;
    println!(
        "{:<14} {:>14} {:>12} {:>12} {:>14} {:>12} {:>5}",
        "controller", "mean_power_W", "std_W", "dBm", "mean_Dqueue_s", "delay_s", "runs"
    );
    for s in &summaries {
        println!(
            "{:<14} {:>14.6e} {:>12.4e} {:>12.4} {:>14.6e} {:>12.6e} {:>5}",
            s.controller.name(),
            s.mean_power,
            s.std_power,
            s.mean_power_dbm(),
            s.mean_virtual_queue,
            s.mean_delay,
            s.runs
        );
    }
    Ok(0)
}

fn cmd_sweep(a: &SweepArgs) -> Result<i32> {
    let cfg = a.scenario.load()?;
    let controllers = ControllerKind::parse_list(&a.controllers)?;
    let axis: SweepAxis = a.axis.parse()?;
    let values = parse_values(&a.values)?;
    let seed = a.seed.unwrap_or(cfg.rng_seed);
    let rows = sweep(&cfg, axis, &values, &controllers, a.runs, seed)?;
    write_sweep_csv(create(&a.out, "sweep.csv")?, &rows)?;
    write_plot_csv(create(&a.out, &format!("plot_{}.csv", axis.name()))?, &rows)?;
    for r in &rows {
        println!(
            "{}={:<10} {:<14} {:.6e} W  Dq {:.4e} s  delay {:.4e} s",
            axis,
            r.value,
            r.summary.controller,
            r.summary.mean_power,
            r.summary.mean_virtual_queue,
            r.summary.mean_delay
        );
    }
    Ok(0)
}

fn cmd_oracle_check(a: &OracleArgs) -> Result<i32> {
    let cfg = if a.scenario.config == "default" && a.scenario.overrides.is_empty() {
        tiny_scenario()
    } else {
        a.scenario.load()?
    };
    let checks = run_oracle_checks(&cfg, a.trials, a.seed.unwrap_or(cfg.rng_seed))?;
    let mut failed = Vec::new();
    for c in &checks {
        println!(
            "{} {:<32} trials {:>6}  worst {:.3e}  tol {:.1e}",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            c.trials,
            c.worst,
            c.tolerance
        );
        if let Some(note) = &c.note {
            println!("     {note}");
        }
        if !c.passed {
            failed.push(c.name);
        }
    }
    if failed.is_empty() {
        Ok(0)
    } else {
        eprintln!("failing: {}", failed.join("; "));
        Ok(1)
    }
}

fn cmd_convergence(a: &ConvergenceArgs) -> Result<i32> {
    let cfg = a.scenario.load()?;
    let mut rng = ChaCha8Rng::seed_from_u64(a.seed.unwrap_or(cfg.rng_seed));
    let mut w = csv::Writer::from_writer(create(&a.out, "convergence.csv")?);
    w.write_record(["slot", "iteration", "objective"])?;
    let mut converged = 0;
    for slot in 0..a.trials {
        let inst = RandomInstance::draw(&cfg, &mut rng)?;
        let warm = PhaseVector::zeros(cfg.total_elements(), cfg.phase_bits);
        let d = solve_slot(&inst.problem(), &cfg.solver, &warm);
        converged += usize::from(d.converged);
        for (i, obj) in d.trace.iter().enumerate() {
            w.write_record([slot.to_string(), i.to_string(), obj.to_string()])?;
        }
    }
    w.flush()?;
    println!(
        "{converged}/{} slots converged within {} outer iterations",
        a.trials, cfg.solver.max_outer
    );
    Ok(0)
}
