//! The error covariance is rarely known exactly. Here policies receive an
//! estimate whose error shrinks like `1/√t`; MEB barely notices.
//!
//! cargo run --release --example estimated_variance -- [t]

use meb::environments::EnvSpec;
use meb::harness::{run_experiment, AlgorithmSpec, ExperimentConfig};

fn main() -> meb::Result<()> {
    let t = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(20_000);
    for scale in [None, Some(1.0), Some(5.0)] {
        let mut cfg = ExperimentConfig::new(EnvSpec::preset("synthetic")?, AlgorithmSpec::Meb, t);
        cfg.estvar_scale = scale;
        let res = run_experiment(&cfg)?;
        let label = scale.map_or("known".to_string(), |c| format!("c = {c}"));
        println!("{label:>8}: avg regret {:.4}", res.average_regret());
    }
    Ok(())
}
