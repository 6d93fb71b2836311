//! Load an experiment from TOML, run it and write the per-round CSV.
//!
//! cargo run --release --example config_file -- configs/synthetic_meb.toml out.csv

use std::path::PathBuf;

use meb::harness::{emit_csv, run_experiment, ExperimentConfig};

fn main() -> meb::Result<()> {
    let mut args = std::env::args().skip(1);
    let path = PathBuf::from(args.next().unwrap_or_else(|| "configs/synthetic_meb.toml".into()));
    let out = PathBuf::from(args.next().unwrap_or_else(|| "synthetic_meb.csv".into()));
    let cfg = ExperimentConfig::from_path(&path)?;
    println!("config {} (hash {})", path.display(), &cfg.hash()[..12]);
    let res = run_experiment(&cfg)?;
    emit_csv(&res, &out, 100)?;
    println!("avg regret {:.4}, wrote {}", res.average_regret(), out.display());
    Ok(())
}
