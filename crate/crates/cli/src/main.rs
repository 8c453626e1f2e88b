//! `npzd`: batch driver for the NPZD column model.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

use npzd_core::analysis::{convergence_study, property_suite, verify_run, OrderEstimate};
use npzd_core::config::RunConfig;
use npzd_core::output::{write_config, write_report, write_trajectory};
use npzd_core::solver::run;
use npzd_core::{ModelError, SolverMode};

const EXIT_VIOLATION: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_RUN: u8 = 3;
const EXIT_IO: u8 = 4;

/// Samples per property in `verify`.
const VERIFY_SAMPLES: usize = 20_000;
/// Steps simulated by `verify` at most.
const VERIFY_STEPS: usize = 200;

#[derive(Parser)]
#[command(name = "npzd", version, about = "One-dimensional NPZD water-column simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one simulation and write snapshots, diagnostics and the report.
    Simulate(Common),
    /// Check the model's sampled properties and a short run; exit 1 on any violation.
    Verify(Common),
    /// Temporal and spatial refinement study.
    Converge(Common),
    /// Run every value of the config's `[sweep]` section concurrently.
    Sweep(Common),
}

#[derive(Args)]
struct Common {
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
    /// Output directory (defaults to the config's `output_dir`, then `runs/<name>`).
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    #[arg(long, value_name = "U64")]
    seed: Option<u64>,
    #[arg(long, value_name = "splitting|picard")]
    mode: Option<SolverMode>,
    #[arg(long = "truncation-n", value_name = "INT", value_parser = clap::value_parser!(u64).range(1..))]
    truncation_n: Option<u64>,
}

/// Failure carrying the process exit code.
struct Failure {
    code: u8,
    error: anyhow::Error,
}

impl From<ModelError> for Failure {
    fn from(e: ModelError) -> Self {
        let code = match &e {
            ModelError::BlowUp { .. } | ModelError::PicardNonConvergence { .. } => EXIT_RUN,
            ModelError::Io(_) => EXIT_IO,
            _ => EXIT_CONFIG,
        };
        Failure {
            code,
            error: e.into(),
        }
    }
}

fn io_failure(e: impl Into<anyhow::Error>) -> Failure {
    Failure {
        code: EXIT_IO,
        error: e.into(),
    }
}

type Outcome = Result<u8, Failure>;

impl Common {
    fn load(&self) -> Result<RunConfig, Failure> {
        let mut cfg = RunConfig::from_path(&self.config).map_err(|e| {
            let mut f = Failure::from(e);
            f.error = f.error.context(format!("reading {}", self.config.display()));
            f
        })?;
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(mode) = self.mode {
            cfg.solver.mode = mode;
        }
        if let Some(n) = self.truncation_n {
            cfg.solver.truncation_n = Some(n);
        }
        Ok(cfg)
    }

    fn out_dir(&self, cfg: &RunConfig) -> PathBuf {
        self.out
            .clone()
            .or_else(|| cfg.output_dir.clone())
            .unwrap_or_else(|| PathBuf::from("runs").join(cfg.name.as_deref().unwrap_or("run")))
    }
}

fn simulate_into(cfg: &RunConfig, dir: &Path) -> Outcome {
    let resolved = cfg.resolved()?;
    let scenario = resolved.resolve()?;
    let model = scenario.model(scenario.n_cells)?;
    let initial = scenario.initial_state(&model.grid)?;
    fs::create_dir_all(dir)
        .with_context(|| format!("creating {}", dir.display()))
        .map_err(io_failure)?;
    write_config(dir, &resolved)?;
    let (traj, failure) = match run(&model, &initial, &scenario.solver) {
        Ok(t) => (t, None),
        Err(e) => match e.partial_trajectory().cloned() {
            Some(partial) => (partial, Some(e)),
            None => return Err(e.into()),
        },
    };
    write_trajectory(dir, &traj, &model.grid)?;
    let report = verify_run(&traj, &model, &scenario.solver);
    write_report(dir, &report)?;
    if let Some(e) = failure {
        return Err(e.into());
    }
    println!(
        "{}: t = {} day, {} snapshots, checks {} -> {}",
        scenario.name,
        report.t_final,
        traj.snapshots.len(),
        if report.passed() { "pass" } else { "FAIL" },
        dir.display()
    );
    Ok(0)
}

fn simulate(args: &Common) -> Outcome {
    let cfg = args.load()?;
    let dir = args.out_dir(&cfg);
    simulate_into(&cfg, &dir)
}

fn verify(args: &Common) -> Outcome {
    let cfg = args.load()?;
    let scenario = cfg.resolve()?;
    let model = scenario.model(scenario.n_cells)?;
    let mut text = String::new();
    let mut failed = false;
    for p in property_suite(&model, &scenario.solver, scenario.seed, VERIFY_SAMPLES) {
        failed |= !p.passed();
        let _ = writeln!(
            text,
            "{} = {} (samples {}, violations {}, worst {:e})",
            p.name,
            if p.passed() { "pass" } else { "FAIL" },
            p.samples,
            p.violations,
            p.worst
        );
    }
    let mut short = scenario.solver.clone();
    let steps = short.n_steps().min(VERIFY_STEPS);
    short.t_end = steps as f64 * short.dt;
    short.snapshot_every = short.snapshot_every.min(steps.max(1));
    let initial = scenario.initial_state(&model.grid)?;
    let traj = run(&model, &initial, &short)?;
    let report = verify_run(&traj, &model, &short);
    failed |= !report.passed();
    let _ = writeln!(text, "short_run_steps = {steps}");
    text.push_str(&report.to_key_value());
    print!("{text}");
    if let Some(dir) = args.out.clone().or_else(|| cfg.output_dir.clone()) {
        fs::create_dir_all(&dir).map_err(io_failure)?;
        fs::write(dir.join("verify_report.txt"), &text).map_err(io_failure)?;
    }
    Ok(if failed { EXIT_VIOLATION } else { 0 })
}

fn order_rows(out: &mut String, direction: &str, est: &OrderEstimate) {
    for (i, level) in est.levels.iter().enumerate() {
        let diff = est.differences.get(i).map_or(String::new(), |d| format!("{d:e}"));
        let order = if i >= 1 {
            est.orders.get(i - 1).map_or(String::new(), |o| format!("{o}"))
        } else {
            String::new()
        };
        let _ = writeln!(out, "{direction},{level},{diff},{order},{}", est.reliable);
    }
}

fn converge(args: &Common) -> Outcome {
    let cfg = args.load()?;
    let scenario = cfg.resolve()?;
    let (dts, cells) = cfg.convergence_levels();
    let report = convergence_study(&scenario, &dts, &cells)?;
    let mut csv = String::from("direction,level,difference,order,reliable\n");
    order_rows(&mut csv, "time", &report.temporal);
    order_rows(&mut csv, "space", &report.spatial);
    let flag = |e: &OrderEstimate| if e.reliable { "" } else { " (unreliable: non-monotone differences)" };
    println!(
        "temporal order {:.3}{}\nspatial order {:.3}{}\nelapsed {:.2} s",
        report.temporal.order(),
        flag(&report.temporal),
        report.spatial.order(),
        flag(&report.spatial),
        report.elapsed.as_secs_f64()
    );
    let dir = args.out_dir(&cfg);
    fs::create_dir_all(&dir).map_err(io_failure)?;
    fs::write(dir.join("convergence.csv"), csv).map_err(io_failure)?;
    Ok(0)
}

fn sweep(args: &Common) -> Outcome {
    let cfg = args.load()?;
    let runs = cfg.sweep_configs()?;
    let root = args.out_dir(&cfg);
    let results: Vec<(String, Outcome)> = runs
        .par_iter()
        .map(|c| {
            let name = c.name.clone().unwrap_or_default();
            let dir = root.join(&name);
            (name, simulate_into(c, &dir))
        })
        .collect();
    let mut code = 0;
    for (name, r) in results {
        match r {
            Ok(c) => code = code.max(c),
            Err(f) => {
                eprintln!("{name}: {:#}", f.error);
                code = code.max(f.code);
            }
        }
    }
    Ok(code)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Verify(a) => verify(a),
        Command::Converge(a) => converge(a),
        Command::Sweep(a) => sweep(a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}
