//! The `meb` command line.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use super::config::{AlgorithmSpec, ExperimentConfig};
use super::demo;
use super::output::{emit_csv, format_float};
use super::runner::run_experiment;
use super::selftest;
use super::sweep::{sweep, write_table, SweepGrid, TABLE_WARMUP};
use crate::environments::EnvSpec;
use crate::error::{MebError, Result};

#[derive(Debug, Parser)]
#[command(name = "meb", version, about = "Contextual bandits with noisy contexts")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one configuration and write its per-round CSV.
    Run(RunArgs),
    /// Run a noise grid and write a table of average regrets.
    Sweep(SweepArgs),
    /// Reproduce the counterexample constructions.
    Demo(DemoArgs),
    /// Run the property suites.
    Selftest(SelftestArgs),
}

/// Flags shared by every experiment-running subcommand. Each one overrides
/// the corresponding field of `--config`.
#[derive(Debug, Clone, Default, Args)]
pub struct Overrides {
    /// TOML experiment config.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Base seed; replicate `i` uses `seed + i`.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Horizon.
    #[arg(long)]
    pub t: Option<usize>,
    #[arg(long = "n-exp")]
    pub n_exp: Option<usize>,
    /// Algorithm preset: meb, meb-naive, rls-meb, ts, ucb, clipped-oracle, threshold.
    #[arg(long)]
    pub algo: Option<String>,
    /// Environment preset: synthetic, heartsteps, naive-failure, rls-failure, sign-flip.
    #[arg(long)]
    pub env: Option<String>,
    /// Constant minimum selection probability.
    #[arg(long)]
    pub p0: Option<f64>,
}

impl Overrides {
    /// The config file (or the defaults) with flag overrides applied.
    pub fn resolve(&self) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::from_path(path)?,
            None => ExperimentConfig::new(EnvSpec::preset("synthetic")?, AlgorithmSpec::Meb, 50_000),
        };
        if let Some(name) = &self.env {
            cfg.env = EnvSpec::preset(name)?;
        }
        if let Some(name) = &self.algo {
            cfg.algorithm = AlgorithmSpec::preset(name)?;
        }
        if let Some(s) = self.seed {
            cfg.base_seed = s;
        }
        if let Some(t) = self.t {
            cfg.t = t;
        }
        if let Some(n) = self.n_exp {
            cfg.n_exp = n;
        }
        if let Some(p0) = self.p0 {
            cfg.schedule.p0 = p0;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub overrides: Overrides,
    /// Write every `stride`-th round (and the last).
    #[arg(long, default_value_t = 1)]
    pub stride: usize,
    /// CSV path; a `.meta.json` sibling is written next to it.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub overrides: Overrides,
    /// Reward-noise variances (comma separated); defaults to the table grid.
    #[arg(long, value_delimiter = ',')]
    pub sigma_eta_sq: Vec<f64>,
    /// Context-noise variances (comma separated); defaults to the table grid.
    #[arg(long, value_delimiter = ',')]
    pub sigma_e_sq: Vec<f64>,
    /// Algorithms (comma separated); defaults to ts,ucb,meb,meb-naive.
    #[arg(long, value_delimiter = ',')]
    pub algos: Vec<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DemoArgs {
    /// naive-failure, rls-failure, sign-flip or all.
    #[arg(default_value = "all")]
    pub which: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 10_000)]
    pub t: usize,
    #[arg(long = "n-exp", default_value_t = 20)]
    pub n_exp: usize,
}

#[derive(Debug, Args)]
pub struct SelftestArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

fn cmd_run(args: &RunArgs) -> Result<()> {
    let cfg = args.overrides.resolve()?;
    if args.stride == 0 {
        return Err(MebError::ConfigInvalid("stride must be >= 1".into()));
    }
    let res = run_experiment(&cfg)?;
    let last = res.final_round();
    println!(
        "{} on {}: T={} n_exp={} avg_regret={} std_regret={} est_err={} fallbacks={}",
        cfg.algorithm.name(),
        cfg.env.name(),
        cfg.t,
        cfg.n_exp,
        format_float(last.avg_regret),
        format_float(last.std_regret_mean),
        format_float(last.est_err_mean),
        format_float(last.fallbacks),
    );
    if let Some(out) = &args.out {
        emit_csv(&res, out, args.stride)?;
        println!("wrote {}", out.display());
    }
    Ok(())
}

fn cmd_sweep(args: &SweepArgs) -> Result<()> {
    let mut base = args.overrides.resolve()?;
    let mut grid = match base.env {
        EnvSpec::Heartsteps(_) => SweepGrid::heartsteps_table(),
        _ => SweepGrid::synthetic_table(),
    };
    if args.overrides.config.is_none() {
        base.schedule.warmup = Some(TABLE_WARMUP);
        if args.overrides.t.is_none() && matches!(base.env, EnvSpec::Heartsteps(_)) {
            base.t = 2500;
        }
    }
    if !args.sigma_eta_sq.is_empty() {
        grid.sigma_eta_sq = args.sigma_eta_sq.clone();
    }
    if !args.sigma_e_sq.is_empty() {
        grid.sigma_e_sq = args.sigma_e_sq.clone();
    }
    if !args.algos.is_empty() {
        grid.algorithms = args.algos.iter().map(|a| AlgorithmSpec::preset(a)).collect::<Result<_>>()?;
    }
    let table = sweep(&base, &grid)?;
    println!("{}", table.header().join("\t"));
    for r in &table.rows {
        let cells: Vec<String> = r
            .cells
            .iter()
            .map(|c| format!("{:.3}\t({:.3})", c.average_regret, c.sd))
            .collect();
        println!("{}\t{}\t{}", r.sigma_eta_sq, r.sigma_e_sq, cells.join("\t"));
    }
    if let Some(out) = &args.out {
        write_table(&table, out)?;
        println!("wrote {}", out.display());
    }
    Ok(())
}

fn demo_naive_failure(args: &DemoArgs) -> Result<()> {
    println!("naive-failure: estimates of theta_0 = -1 at t = {} ({} seeds)", args.t, args.n_exp);
    for threshold in [-0.5, 0.0, 0.5] {
        let (mut w, mut n) = (Vec::new(), Vec::new());
        for i in 0..args.n_exp {
            let run = demo::naive_failure_run(threshold, args.seed + i as u64, &[args.t])?;
            w.push(run.weighted[0]);
            n.push(run.naive[0]);
        }
        println!(
            "  threshold {threshold:+.1}: weighted median {:.4}, naive median {:.4} (limit {:.4})",
            demo::median(&w),
            demo::median(&n),
            demo::naive_failure_limit(threshold)
        );
    }
    Ok(())
}

fn demo_rls_failure(args: &DemoArgs) -> Result<()> {
    println!("rls-failure: cumulative standard regret at T = {} ({} seeds)", args.t, args.n_exp);
    for g in demo::rls_failure(args.t, args.n_exp, args.seed)? {
        println!(
            "  {:>4}: median regret {:.1} ({:.3} per round), median R(T)/R(T/2) {:.3}",
            g.algorithm,
            g.median_end(),
            g.median_end() / args.t as f64,
            g.median_growth_ratio()
        );
    }
    Ok(())
}

fn demo_sign_flip(args: &DemoArgs) -> Result<()> {
    let res = demo::sign_flip(args.t, args.n_exp, args.seed)?;
    println!(
        "sign-flip: MEB standard regret slope {:.4} per round over T = {}",
        demo::standard_regret_slope(&res),
        args.t
    );
    Ok(())
}

fn cmd_demo(args: &DemoArgs) -> Result<()> {
    if args.t < 2 || args.n_exp == 0 {
        return Err(MebError::ConfigInvalid("demo needs t >= 2 and n-exp >= 1".into()));
    }
    match args.which.as_str() {
        "naive-failure" => demo_naive_failure(args),
        "rls-failure" => demo_rls_failure(args),
        "sign-flip" => demo_sign_flip(args),
        "all" => {
            demo_naive_failure(args)?;
            demo_rls_failure(args)?;
            demo_sign_flip(args)
        }
        other => Err(MebError::ConfigInvalid(format!("unknown demo `{other}`"))),
    }
}

fn cmd_selftest(args: &SelftestArgs) -> Result<bool> {
    let mut ok = true;
    for c in selftest::run_all(args.seed)? {
        println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
        ok &= c.passed;
    }
    Ok(ok)
}

/// Runs a parsed command line and returns the process exit code.
pub fn run(cli: &Cli) -> i32 {
    let outcome = match &cli.command {
        Command::Run(a) => cmd_run(a).map(|()| true),
        Command::Sweep(a) => cmd_sweep(a).map(|()| true),
        Command::Demo(a) => cmd_demo(a).map(|()| true),
        Command::Selftest(a) => cmd_selftest(a),
    };
    match outcome {
        Ok(true) => 0,
        Ok(false) => 1,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

/// Parses the process arguments and runs them.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => run(&cli),
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            code
        }
    }
}
