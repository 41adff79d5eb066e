//! `ciber`: exact weighted model integration and collapsed Bayesian
//! inference for ReLU networks.

mod learn;
mod solve;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use ciber::bnn::{fit_sigmoid_cubic, DEFAULT_ATOM_BUDGET, DEFAULT_THRESHOLD};
use ciber::experiments::{render_table, reproduce};
use ciber::inference::InferenceOptions;
use ciber::CiberError;
use wmi_core::rational::{int, parse};

/// Exit status for a check that ran but did not pass.
#[derive(Debug)]
struct CheckFailed(String);

impl std::fmt::Display for CheckFailed {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for CheckFailed {}

#[derive(Debug, Parser)]
#[command(name = "ciber", version, about = "Exact WMI and collapsed inference for ReLU networks")]
struct Cli {
    /// Seed for every random choice.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads; results do not depend on it.
    #[arg(long, global = true, env = "CIBER_THREADS")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Weighted model integration on problem files.
    Wmi {
        #[command(subcommand)]
        command: WmiCommand,
    },
    /// Train a network and collect trajectory samples.
    Train(learn::TrainArgs),
    /// Collapsed predictive inference on a test set.
    Infer(learn::InferArgs),
    /// Rerun the reference checks and print a pass/fail table.
    Reproduce {
        /// Also write the table here.
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        budgets: Budgets,
    },
    /// Sampling and grid estimates of a problem file, without the exact solver.
    Oracle(solve::OracleArgs),
}

#[derive(Debug, Subcommand)]
enum WmiCommand {
    /// Solve a problem file exactly.
    Solve(solve::SolveArgs),
}

/// Inference knobs shared by `infer` and `reproduce`.
#[derive(Debug, Clone, Args)]
struct Budgets {
    /// Most symbolic preactivations to split on.
    #[arg(long, default_value_t = DEFAULT_ATOM_BUDGET)]
    atom_budget: usize,
    /// Override the triangle half-width factor (a rational or decimal).
    #[arg(long)]
    alpha: Option<String>,
    /// Sigmoid approximation threshold.
    #[arg(long, default_value_t = DEFAULT_THRESHOLD)]
    threshold: i64,
    /// Split budget per integration cell.
    #[arg(long)]
    max_splits: Option<usize>,
}

impl Budgets {
    fn options(&self) -> Result<InferenceOptions> {
        anyhow::ensure!(self.atom_budget > 0, "atom budget must be positive");
        anyhow::ensure!(self.threshold > 0, "threshold must be positive");
        let mut opts = InferenceOptions {
            atom_budget: self.atom_budget,
            cubic: fit_sigmoid_cubic(&int(self.threshold))?,
            ..InferenceOptions::default()
        };
        if let Some(a) = &self.alpha {
            opts.alpha = parse(a).with_context(|| format!("bad --alpha `{a}`"))?;
            anyhow::ensure!(opts.alpha > int(0), "alpha must be positive");
        }
        if let Some(s) = self.max_splits {
            anyhow::ensure!(s > 0, "split budget must be positive");
            opts.solver.integrate.max_splits = s;
        }
        Ok(opts)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Task {
    Regression,
    Classification,
}

fn run(cli: Cli) -> Result<()> {
    if let Some(n) = cli.threads {
        anyhow::ensure!(n > 0, "thread count must be positive");
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("thread pool")?;
    }
    match cli.command {
        Command::Wmi {
            command: WmiCommand::Solve(args),
        } => solve::solve(&args, cli.seed),
        Command::Oracle(args) => solve::oracle(&args, cli.seed),
        Command::Train(args) => learn::train(&args, cli.seed),
        Command::Infer(args) => learn::infer(&args),
        Command::Reproduce { out, budgets } => {
            let rows = reproduce(cli.seed, &budgets.options()?)?;
            let table = render_table(&rows);
            print!("{table}");
            if let Some(path) = out {
                std::fs::write(&path, &table).with_context(|| format!("writing {}", path.display()))?;
            }
            let failed: Vec<&str> = rows.iter().filter(|r| !r.pass).map(|r| r.name.as_str()).collect();
            if failed.is_empty() {
                Ok(())
            } else {
                Err(CheckFailed(format!("failed checks: {}", failed.join(", "))).into())
            }
        }
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.is::<CheckFailed>() {
            return 1;
        }
        if let Some(e) = cause.downcast_ref::<CiberError>() {
            if e.is_capacity() {
                return 3;
            }
            if matches!(e, CiberError::Divergence { .. } | CiberError::ZeroPartition) {
                return 1;
            }
        }
        if let Some(e) = cause.downcast_ref::<wmi_core::Error>() {
            if e.is_capacity() {
                return 3;
            }
        }
    }
    2
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
