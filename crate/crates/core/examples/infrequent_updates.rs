//! Refreshing the estimate only at powers of two costs little regret and
//! does O(log T) solves instead of T.
//!
//! cargo run --release --example infrequent_updates -- [t]

use std::time::Instant;

use meb::environments::EnvSpec;
use meb::harness::{run_experiment, AlgorithmSpec, ExperimentConfig, UpdateSpec};

fn main() -> meb::Result<()> {
    let t = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(50_000);
    for update in [UpdateSpec::Every, UpdateSpec::Powers(2), UpdateSpec::Multiples(1000)] {
        let mut cfg = ExperimentConfig::new(EnvSpec::preset("synthetic")?, AlgorithmSpec::Meb, t);
        cfg.schedule.update = update.clone();
        let start = Instant::now();
        let res = run_experiment(&cfg)?;
        println!(
            "{update:?}: avg regret {:.4}, est err {:.4} [{:.1?}]",
            res.average_regret(),
            res.final_round().est_err_mean,
            start.elapsed()
        );
    }
    Ok(())
}
