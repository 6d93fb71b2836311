//! Mobile-health style simulation: a burden state driven by past actions,
//! observed with noise. Compares the four algorithms on one noise setting.
//!
//! The environment violates the usual assumption that contexts do not depend
//! on past actions; runs record that in their metadata.
//!
//! cargo run --release --example heartsteps -- [sigma_eta_sq] [sigma_eps_sq]

use meb::environments::{EnvSpec, HeartStepsConfig};
use meb::harness::{run_experiment, AlgorithmSpec, ExperimentConfig, TABLE_WARMUP};

fn main() -> meb::Result<()> {
    let mut args = std::env::args().skip(1).map(|s| s.parse::<f64>().ok());
    let sigma_eta_sq = args.next().flatten().unwrap_or(0.1);
    let sigma_eps_sq = args.next().flatten().unwrap_or(1.0);
    let env = EnvSpec::Heartsteps(HeartStepsConfig {
        sigma_eta_sq,
        sigma_eps_sq,
        ..HeartStepsConfig::default()
    });
    for algo in ["ts", "ucb", "meb", "meb-naive"] {
        let mut cfg = ExperimentConfig::new(env.clone(), AlgorithmSpec::preset(algo)?, 2_500);
        cfg.schedule.warmup = Some(TABLE_WARMUP);
        let res = run_experiment(&cfg)?;
        println!(
            "{algo:>10}  avg regret {:.4}  (sd {:.4})  action-dependent contexts: {}",
            res.average_regret(),
            res.final_round().clip_regret_sd / cfg.t as f64,
            res.violates_contextual_assumption
        );
    }
    Ok(())
}
