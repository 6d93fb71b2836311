//! More than two actions: four arms in three dimensions.
//!
//! cargo run --release --example k_actions

use meb::environments::{EnvSpec, SyntheticConfig};
use meb::harness::{run_experiment, AlgorithmSpec, ExperimentConfig};

fn main() -> meb::Result<()> {
    let env = EnvSpec::Synthetic(SyntheticConfig {
        thetas: vec![
            vec![1.0, 0.0, 0.5],
            vec![0.0, 1.0, 0.5],
            vec![0.5, 0.5, 1.0],
            vec![-0.5, 1.0, 0.0],
        ],
        mu_x: vec![0.5, 0.5, 0.5],
        context_cov: None,
        sigma_e_sq: 0.5,
        sigma_eta_sq: 0.5,
    });
    for algo in ["ts", "ucb", "meb", "meb-naive"] {
        let mut cfg = ExperimentConfig::new(env.clone(), AlgorithmSpec::preset(algo)?, 20_000);
        cfg.schedule.p0 = 0.05;
        let res = run_experiment(&cfg)?;
        println!("{algo:>10}  avg regret {:.4}", res.average_regret());
    }
    Ok(())
}
