use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use cfmon::config::{ExperimentConfig, Scheme, SweepAxis};
use cfmon::harness::{evaluate_schemes, run_experiment_traced, summarize, Summary};
use cfmon::output::{write_json, write_results};
use cfmon::validate::{run_suite, SuiteOptions};
use cfmon::HarnessError;
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

/// Cell-free surveillance simulator.
#[derive(Parser, Debug)]
#[command(name = "cfmon", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone, Default)]
struct Common {
    /// Experiment config (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed; overrides the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory; overrides the config.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Trials per sweep point (instances for `validate`).
    #[arg(long, global = true)]
    trials: Option<usize>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run the sweep described by `--config`.
    Sweep {
        #[command(flatten)]
        common: Common,
    },
    /// Check every closed form against the Monte-Carlo oracle.
    Validate {
        #[command(flatten)]
        common: Common,
        /// Monte-Carlo draws per estimate.
        #[arg(long, default_value_t = 20_000)]
        draws: usize,
    },
    /// Greedy modes and optimized power on one seeded deployment.
    Solve {
        #[command(flatten)]
        common: Common,
    },
    /// Small seeded sweep over M with every scheme.
    Demo {
        #[command(flatten)]
        common: Common,
    },
}

enum Failure {
    Harness(HarnessError),
    Validation(usize),
}

impl From<HarnessError> for Failure {
    fn from(e: HarnessError) -> Self {
        Failure::Harness(e)
    }
}

fn load_config(common: &Common) -> Result<ExperimentConfig, HarnessError> {
    let path = common
        .config
        .as_deref()
        .ok_or_else(|| HarnessError::Config("--config is required".into()))?;
    let mut cfg = ExperimentConfig::load(path)?;
    apply_overrides(&mut cfg, common)?;
    Ok(cfg)
}

fn apply_overrides(cfg: &mut ExperimentConfig, common: &Common) -> Result<(), HarnessError> {
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &common.out {
        cfg.out = out.clone();
    }
    if let Some(trials) = common.trials {
        cfg.trials = trials;
    }
    cfg.validate()
}

fn pool(threads: Option<usize>) -> Result<rayon::ThreadPool, HarnessError> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        b = b.num_threads(n);
    }
    b.build().map_err(|e| HarnessError::Config(e.to_string()))
}

fn print_summary(axis: SweepAxis, summary: &[Summary]) {
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "{:<12} {:>4} {:>12} {:>10} {:>6}", "scheme", axis, "mean", "std_err", "failed");
    for s in summary {
        let _ = writeln!(
            out,
            "{:<12} {:>4} {:>12.6} {:>10.2e} {:>6}",
            s.scheme.id(),
            s.value,
            s.mean,
            s.std_error,
            s.failed
        );
    }
}

fn sweep(cfg: &ExperimentConfig, threads: Option<usize>) -> Result<(), Failure> {
    let trials = pool(threads)?.install(|| run_experiment_traced(cfg));
    let rows: Vec<_> = trials.iter().flat_map(|t| t.rows.clone()).collect();
    let traces: Vec<_> = trials.into_iter().map(|t| t.trace).collect();
    let csv = write_results(&cfg.out, &rows, cfg.output.write_traces.then_some(&traces[..]))?;
    std::fs::write(cfg.out.join("config.toml"), cfg.to_toml()).map_err(|source| {
        HarnessError::Io {
            path: cfg.out.join("config.toml"),
            source,
        }
    })?;
    print_summary(cfg.sweep, &summarize(&rows));
    eprintln!("wrote {} rows to {}", rows.len(), csv.display());
    Ok(())
}

#[derive(Serialize)]
struct SolveOutput<'a> {
    seed: u64,
    params: &'a cfmon_core::SimParams,
    outcome: &'a cfmon::harness::SchemeOutcome,
}

fn solve(common: &Common) -> Result<(), Failure> {
    let mut cfg = match &common.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::new(SweepAxis::M, vec![cfmon_core::SimParams::default().num_mns]),
    };
    apply_overrides(&mut cfg, common)?;
    let seed = cfg.seed;
    let params = cfmon_core::SimParams {
        seed,
        ..cfg.params_at(cfg.values[0])
    };
    let outcome = evaluate_schemes(&[Scheme::PpaGreedy], &params, &cfg.solver, seed)
        .pop()
        .expect("one scheme")
        .map_err(HarnessError::from)?;
    let out = SolveOutput {
        seed,
        params: &params,
        outcome: &outcome,
    };
    let text = serde_json::to_string_pretty(&out).map_err(HarnessError::from)?;
    println!("{text}");
    if let Some(dir) = &common.out {
        std::fs::create_dir_all(dir).map_err(|source| HarnessError::Io {
            path: dir.clone(),
            source,
        })?;
        write_json(&dir.join("solve.json"), &out)?;
    }
    Ok(())
}

fn validate(common: &Common, draws: usize) -> Result<(), Failure> {
    let opts = SuiteOptions {
        seed: common.seed.unwrap_or(0),
        instances: common.trials.unwrap_or(SuiteOptions::default().instances),
        draws,
        ..SuiteOptions::default()
    };
    let report = pool(common.threads)?.install(|| run_suite(&opts))?;
    for c in report.checks.iter().filter(|c| !c.pass) {
        eprintln!(
            "FAIL instance {:?} link {:?} {}: closed {:.6e} oracle {:.6e} (se {:.2e})",
            c.instance, c.link, c.quantity, c.closed_form, c.oracle_mean, c.std_error
        );
    }
    if let Some(dir) = &common.out {
        std::fs::create_dir_all(dir).map_err(|source| HarnessError::Io {
            path: dir.clone(),
            source,
        })?;
        write_json(&dir.join("validation.json"), &report)?;
    }
    println!("{} checks passed, {} failed", report.passed, report.failed);
    if report.ok() {
        Ok(())
    } else {
        Err(Failure::Validation(report.failed))
    }
}

fn demo_config(common: &Common) -> Result<ExperimentConfig, HarnessError> {
    let mut cfg = ExperimentConfig::new(SweepAxis::M, vec![4, 6, 8]);
    cfg.params.num_pairs = 2;
    cfg.trials = 5;
    cfg.out = Path::new("demo-out").to_path_buf();
    apply_overrides(&mut cfg, common)?;
    Ok(cfg)
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Sweep { common } => sweep(&load_config(&common)?, common.threads),
        Command::Validate { common, draws } => validate(&common, draws),
        Command::Solve { common } => solve(&common),
        Command::Demo { common } => sweep(&demo_config(&common)?, common.threads),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Harness(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
        Err(Failure::Validation(n)) => {
            eprintln!("validation failed: {n} mismatches");
            ExitCode::from(2)
        }
    }
}
