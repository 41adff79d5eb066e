//! `wmi solve` and `oracle`.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::Args;
use wmi_core::rational::decimal;
use wmi_core::wmi::format::{from_json_fragments, Query};
use wmi_core::wmi::{Solver, SolverOptions, Value, Weight, WmiProblem};
use wmi_core::Polynomial;
use wmi_oracle::{grid_wmi, mc_wmi, McEstimate};

use crate::CheckFailed;

#[derive(Debug, Args)]
pub struct SolveArgs {
    /// Problem file.
    problem: PathBuf,
    /// Cross-check against this many uniform samples.
    #[arg(long)]
    mc: Option<u64>,
    /// Largest tolerated distance from the sampling estimate, in standard errors.
    #[arg(long, default_value_t = 4.0)]
    z_max: f64,
    /// Fail instead of falling back to floating point.
    #[arg(long)]
    exact_only: bool,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    /// Problem file.
    problem: PathBuf,
    /// Uniform samples.
    #[arg(long, default_value_t = 1_000_000)]
    n: u64,
    /// Also run the midpoint rule with this many points per axis.
    #[arg(long)]
    grid: Option<usize>,
}

fn load(path: &Path) -> Result<Vec<(WmiProblem, Query)>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    from_json_fragments(&text).with_context(|| format!("parsing {}", path.display()))
}

/// `p/q (decimal)` for exact values, a flagged float otherwise.
pub fn show(v: &Value) -> String {
    match v {
        Value::Exact(q) => format!("{q} ({})", decimal(q, 15)),
        Value::Approx(x) => format!("~{x:.15e} (floating-point lattice)"),
    }
}

fn add(a: Value, b: Value) -> Value {
    match (a, b) {
        (Value::Exact(x), Value::Exact(y)) => Value::Exact(x + y),
        (a, b) => Value::Approx(a.to_f64() + b.to_f64()),
    }
}

/// The WMI calls a query needs: numerator problems, and normalizers when the
/// query is a ratio.
fn calls(parts: &[(WmiProblem, Query)]) -> (Vec<Option<WmiProblem>>, Option<Vec<WmiProblem>>) {
    let mut num = Vec::new();
    let mut den = Vec::new();
    for (p, q) in parts {
        match q {
            Query::Value => num.push(Some(p.clone())),
            Query::Density { var, at } => {
                num.push(p.condition(*var, at));
                den.push(p.clone());
            }
            Query::Expectation { var } => {
                num.push(Some(p.clone().with_weight(Weight::global(Polynomial::var(*var)))));
                den.push(p.clone());
            }
        }
    }
    let ratio = !matches!(parts[0].1, Query::Value);
    (num, ratio.then_some(den))
}

fn describe(parts: &[(WmiProblem, Query)]) -> String {
    let (p, q) = &parts[0];
    match q {
        Query::Value => "value".into(),
        Query::Density { var, at } => format!("density of {} at {at}", p.vars.name(*var)),
        Query::Expectation { var } => format!("expectation of {}", p.vars.name(*var)),
    }
}

fn total(solver: &Solver, problems: &[Option<WmiProblem>]) -> Result<Value> {
    let mut acc = Value::Exact(wmi_core::BigRational::from_integer(0.into()));
    for p in problems.iter().flatten() {
        acc = add(acc, solver.wmi(p)?.value);
    }
    Ok(acc)
}

fn sampled(problems: &[Option<WmiProblem>], n: u64, seed: u64) -> McEstimate {
    let mut mean = 0.0;
    let mut var = 0.0;
    for (i, p) in problems.iter().enumerate() {
        if let Some(p) = p {
            let e = mc_wmi(p, n, seed.wrapping_add(i as u64));
            mean += e.mean;
            var += e.std_error * e.std_error;
        }
    }
    McEstimate {
        mean,
        std_error: var.sqrt(),
        n,
        seed,
    }
}

pub fn solve(args: &SolveArgs, seed: u64) -> Result<()> {
    let parts = load(&args.problem)?;
    let solver = Solver::new(SolverOptions {
        allow_approx: !args.exact_only,
        ..SolverOptions::default()
    });
    let (num, den) = calls(&parts);
    let numerator = total(&solver, &num)?;
    let value = match &den {
        None => numerator.clone(),
        Some(d) => {
            let z = total(&solver, &d.iter().cloned().map(Some).collect::<Vec<_>>())?;
            numerator.checked_div(&z)?
        }
    };
    println!("fragments  {}", parts.len());
    println!("query      {}", describe(&parts));
    println!("value      {}", show(&value));

    let Some(n) = args.mc else {
        return Ok(());
    };
    let mut worst: f64 = 0.0;
    let mut check = |label: &str, exact: &Value, problems: &[Option<WmiProblem>], seed: u64| {
        let e = sampled(problems, n, seed);
        let z = e.z_score(exact.to_f64());
        worst = worst.max(z);
        println!(
            "mc {label:<7} {:.9} ± {:.3e} (n = {n}, seed = {seed}), z = {z:.2}",
            e.mean, e.std_error
        );
    };
    check("wmi", &numerator, &num, seed);
    if let Some(d) = &den {
        let z = total(&solver, &d.iter().cloned().map(Some).collect::<Vec<_>>())?;
        check("norm", &z, &d.iter().cloned().map(Some).collect::<Vec<_>>(), seed.wrapping_add(1 << 32));
    }
    if worst > args.z_max {
        return Err(CheckFailed(format!("sampling estimate is {worst:.2} standard errors away")).into());
    }
    Ok(())
}

pub fn oracle(args: &OracleArgs, seed: u64) -> Result<()> {
    let parts = load(&args.problem)?;
    let problems: Vec<Option<WmiProblem>> = parts.into_iter().map(|(p, _)| Some(p)).collect();
    let e = sampled(&problems, args.n, seed);
    println!("mc    {:.9} ± {:.3e} (n = {}, seed = {seed})", e.mean, e.std_error, e.n);
    if let Some(res) = args.grid {
        let mut g = 0.0;
        for p in problems.iter().flatten() {
            g += grid_wmi(p, res)?;
        }
        println!("grid  {g:.9} (resolution {res})");
    }
    Ok(())
}
