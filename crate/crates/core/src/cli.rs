//! The `mhk` command-line interface.
//!
//! Exit codes: 0 success, 1 validation or usage failure (including a stored
//! trajectory that fails its invariant checks), 2 runtime (I/O) failure.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::analysis::analyze;
use crate::demos::run_demo;
use crate::ensemble::{run_ensemble, EnsembleResult, EnsembleSpec};
use crate::error::{Error, Result};
use crate::export::{export_trajectory, load_trajectory};
use crate::scenario::{load_scenario, ScenarioConfig, TrajectoryFormat};
use crate::stopping::{analyze_stopping, StoppingReport, DEFAULT_M_MAX};
use crate::trajectory::{simulate, RunOptions, Trajectory};

#[derive(Debug, Parser)]
#[command(name = "mhk", version, about = "Bounded-confidence opinion dynamics with stubborn agents")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Jsonl,
    Csv,
}

impl From<FormatArg> for TrajectoryFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Jsonl => TrajectoryFormat::Jsonl,
            FormatArg::Csv => TrajectoryFormat::Csv,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate one trajectory and write its reports.
    Run {
        scenario: PathBuf,
        /// Output directory (created if missing).
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Trajectory format; overrides the scenario's `outputs.format`.
        #[arg(long, value_enum)]
        format: Option<FormatArg>,
        /// Overrides the scenario horizon.
        #[arg(long)]
        horizon: Option<u64>,
        /// Stop once the state can no longer change.
        #[arg(long)]
        stop_on_termination: bool,
    },
    /// Run a Monte Carlo ensemble and compare the mean stopping time to its bound.
    Mc {
        scenario: PathBuf,
        #[arg(long)]
        runs: u64,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Overrides the scenario horizon.
        #[arg(long)]
        horizon: Option<u64>,
    },
    /// Recompute diagnostics of a stored trajectory and check its invariants.
    Analyze {
        file: PathBuf,
        #[arg(long, default_value_t = 0.01)]
        delta: f64,
        /// Confidence bound; required for CSV files.
        #[arg(long)]
        epsilon: Option<f64>,
        #[arg(long, default_value_t = DEFAULT_M_MAX)]
        m_max: u32,
    },
    /// Run a built-in demonstration: merge, depart, async-reduction, no-termination.
    Demo { name: String },
}

#[derive(Serialize)]
struct RunSummary<'a> {
    steps: usize,
    final_t: u64,
    final_energy: f64,
    stopping: &'a StoppingReport,
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut out = BufWriter::new(fs::File::create(path)?);
    serde_json::to_writer_pretty(&mut out, value).map_err(|e| Error::Io(e.into()))?;
    writeln!(out)?;
    out.flush()?;
    Ok(())
}

fn write_energy_csv(path: &Path, traj: &Trajectory) -> Result<()> {
    let mut out = BufWriter::new(fs::File::create(path)?);
    writeln!(out, "t,Z,decrement,nl8_bound")?;
    for rec in &traj.steps {
        let cell = |v: Option<f64>| v.map_or(String::new(), |x| x.to_string());
        writeln!(
            out,
            "{},{},{},{}",
            rec.state.t(),
            rec.energy,
            cell(rec.decrement),
            cell(rec.nl8_bound)
        )?;
    }
    out.flush()?;
    Ok(())
}

fn write_tau_csv(path: &Path, res: &EnsembleResult) -> Result<()> {
    let mut out = BufWriter::new(fs::File::create(path)?);
    writeln!(out, "run,seed,tau_delta,a_set_size,termination_time")?;
    for o in &res.outcomes {
        let cell = |v: Option<u64>| v.map_or(String::new(), |x| x.to_string());
        writeln!(
            out,
            "{},{},{},{},{}",
            o.run,
            o.seed,
            cell(o.tau_delta),
            o.a_set_size,
            cell(o.termination_time)
        )?;
    }
    out.flush()?;
    Ok(())
}

fn cmd_run<W: Write>(
    cfg: &ScenarioConfig,
    out_dir: &Path,
    format: Option<FormatArg>,
    horizon: Option<u64>,
    stop_on_termination: bool,
    stdout: &mut W,
) -> Result<u8> {
    let traj = simulate(
        cfg.initial_state(None)?,
        &cfg.schedule,
        RunOptions {
            horizon: horizon.unwrap_or(cfg.horizon),
            seed: cfg.schedule.seed,
            stop_on_termination,
        },
    )?;
    let report = analyze_stopping(&traj, cfg.delta, cfg.m_max);
    fs::create_dir_all(out_dir)?;
    let format = format.map_or(cfg.outputs.format, TrajectoryFormat::from);
    if cfg.outputs.trajectory {
        let name = match format {
            TrajectoryFormat::Jsonl => "trajectory.jsonl",
            TrajectoryFormat::Csv => "trajectory.csv",
        };
        export_trajectory(&traj, out_dir.join(name), format)?;
    }
    if cfg.outputs.energy {
        write_energy_csv(&out_dir.join("energy.csv"), &traj)?;
    }
    if cfg.outputs.stopping_report {
        write_json(
            &out_dir.join("stopping_report.json"),
            &RunSummary {
                steps: traj.steps.len(),
                final_t: traj.horizon(),
                final_energy: traj.steps.last().map_or(0.0, |r| r.energy),
                stopping: &report,
            },
        )?;
    }
    let opt = |v: Option<u64>| v.map_or("not reached".to_string(), |t| t.to_string());
    writeln!(stdout, "steps: {}", traj.horizon())?;
    writeln!(stdout, "tau_delta: {}", opt(report.tau_delta))?;
    writeln!(
        stdout,
        "freeze: {}",
        report
            .freeze
            .as_ref()
            .map_or("not detected".to_string(), |f| format!("m = {}, tau_hat = {}", f.m, f.tau_hat))
    )?;
    writeln!(stdout, "termination: {}", opt(report.termination_time))?;
    writeln!(stdout, "merges: {}", report.merge_times.len())?;
    writeln!(stdout, "output: {}", out_dir.display())?;
    Ok(0)
}

fn cmd_mc<W: Write>(cfg: &ScenarioConfig, runs: u64, out_dir: &Path, horizon: Option<u64>, stdout: &mut W) -> Result<u8> {
    let init = |r: u64| cfg.initial_state(Some(r));
    let spec = EnsembleSpec {
        schedule: &cfg.schedule,
        epsilon: cfg.epsilon,
        delta: cfg.delta,
        m_max: cfg.m_max,
        master_seed: cfg.master_seed,
        initial: &init,
    };
    let res = run_ensemble(&spec, runs, horizon.unwrap_or(cfg.horizon))?;
    if cfg.outputs.ensemble_summary {
        fs::create_dir_all(out_dir)?;
        write_json(&out_dir.join("ensemble_summary.json"), &res)?;
        write_tau_csv(&out_dir.join("tau_samples.csv"), &res)?;
    }
    let opt = |v: Option<f64>| v.map_or("n/a".to_string(), |x| format!("{x}"));
    writeln!(stdout, "runs: {}, horizon: {}", res.runs, res.horizon)?;
    writeln!(stdout, "mean tau_delta: {} (standard error {})", opt(res.mean_tau), opt(res.std_error))?;
    writeln!(stdout, "reached fraction: {}", res.reached_fraction)?;
    writeln!(
        stdout,
        "bound: {} (gamma {}, p_min {}), empirical/bound = {}",
        res.co1_bound,
        res.gamma,
        res.min_partition_probability,
        opt(res.bound_ratio())
    )?;
    writeln!(stdout, "A-set bound: {}", res.a_set_bound)?;
    if res.horizon_insufficient {
        writeln!(stdout, "warning: some runs did not reach tau_delta within the horizon")?;
    }
    Ok(0)
}

fn cmd_analyze<W: Write>(file: &Path, delta: f64, epsilon: Option<f64>, m_max: u32, stdout: &mut W) -> Result<u8> {
    let traj = load_trajectory(file, epsilon)?;
    if !(delta > 0.0 && delta <= traj.epsilon) {
        return Err(Error::Usage(format!("--delta must lie in (0, epsilon], got {delta}")));
    }
    let report = analyze(&traj, delta, m_max)?;
    writeln!(stdout, "steps: {}", report.steps)?;
    writeln!(stdout, "max energy: {}", report.max_energy)?;
    if let Some(s) = report.min_slack {
        writeln!(stdout, "min decrement slack: {s}")?;
    }
    writeln!(stdout, "mismatches: {}", report.mismatches.len())?;
    writeln!(stdout, "invariant violations: {}", report.violations.len())?;
    for v in report.mismatches.iter().chain(&report.violations).take(20) {
        writeln!(stdout, "  t={} {}: {}", v.t, v.kind, v.detail)?;
    }
    let opt = |v: Option<u64>| v.map_or("not reached".to_string(), |t| t.to_string());
    writeln!(stdout, "tau_delta: {}", opt(report.stopping.tau_delta))?;
    writeln!(stdout, "termination: {}", opt(report.stopping.termination_time))?;
    Ok(if report.is_clean() { 0 } else { 1 })
}

/// Executes a parsed command, writing human-readable output to `stdout`.
pub fn run<W: Write>(cli: Cli, stdout: &mut W) -> Result<u8> {
    match cli.command {
        Command::Run {
            scenario,
            out,
            format,
            horizon,
            stop_on_termination,
        } => {
            let cfg = load_scenario(&scenario)?;
            cmd_run(&cfg, &out, format, horizon, stop_on_termination, stdout)
        }
        Command::Mc {
            scenario,
            runs,
            out,
            horizon,
        } => {
            let cfg = load_scenario(&scenario)?;
            cmd_mc(&cfg, runs, &out, horizon, stdout)
        }
        Command::Analyze {
            file,
            delta,
            epsilon,
            m_max,
        } => cmd_analyze(&file, delta, epsilon, m_max, stdout),
        Command::Demo { name } => {
            let demo = run_demo(&name)?;
            write!(stdout, "{}", demo.text)?;
            Ok(if demo.ok { 0 } else { 1 })
        }
    }
}

/// Parses `args` (including the program name) and runs; returns the exit code.
pub fn run_cli<I, T, W>(args: I, stdout: &mut W) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
    W: Write,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => match run(cli, stdout) {
            Ok(code) => code as i32,
            Err(e) => {
                eprintln!("error: {e}");
                e.exit_code()
            }
        },
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            code
        }
    }
}
