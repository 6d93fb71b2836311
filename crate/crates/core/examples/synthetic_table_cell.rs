//! One synthetic-environment cell: the four algorithms at a single
//! (reward noise, context noise) pair, reporting average clipped regret.
//!
//! cargo run --release --example synthetic_table_cell -- [sigma_eta_sq] [sigma_e_sq] [t] [n_exp] [warmup]

use std::time::Instant;

use meb::environments::{EnvSpec, SyntheticConfig};
use meb::harness::{run_experiment, AlgorithmSpec, ExperimentConfig, TABLE_WARMUP};

fn arg(i: usize, default: f64) -> f64 {
    std::env::args().nth(i).and_then(|s| s.parse().ok()).unwrap_or(default)
}

fn main() -> meb::Result<()> {
    let sigma_eta_sq = arg(1, 1.0);
    let sigma_e_sq = arg(2, 1.0);
    let t = arg(3, 50_000.0) as usize;
    let n_exp = arg(4, 20.0) as usize;
    let warmup = std::env::args().nth(5).and_then(|s| s.parse().ok()).unwrap_or(TABLE_WARMUP);

    let env = EnvSpec::Synthetic(SyntheticConfig {
        sigma_e_sq,
        sigma_eta_sq,
        ..SyntheticConfig::default()
    });
    println!("sigma_eta_sq={sigma_eta_sq} sigma_e_sq={sigma_e_sq} T={t} n_exp={n_exp}");
    for algo in ["ts", "ucb", "meb", "meb-naive"] {
        let mut cfg = ExperimentConfig::new(env.clone(), AlgorithmSpec::preset(algo)?, t);
        cfg.n_exp = n_exp;
        cfg.schedule.warmup = Some(warmup);
        let start = Instant::now();
        let res = run_experiment(&cfg)?;
        let last = res.final_round();
        println!(
            "{algo:>10}  avg regret {:.4}  (sd {:.4})  est err {:.4}  fallbacks {:.1}  [{:.1?}]",
            res.average_regret(),
            last.clip_regret_sd / t as f64,
            last.est_err_mean,
            last.fallbacks,
            start.elapsed()
        );
    }
    Ok(())
}
