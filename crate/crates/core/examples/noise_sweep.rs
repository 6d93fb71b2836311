//! The full synthetic noise grid, written as a CSV table.
//!
//! cargo run --release --example noise_sweep -- [t] [out.csv]

use meb::environments::EnvSpec;
use meb::harness::{sweep, write_table, AlgorithmSpec, ExperimentConfig, SweepGrid, TABLE_WARMUP};

fn main() -> meb::Result<()> {
    let t = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(5_000);
    let out = std::env::args().nth(2).unwrap_or_else(|| "noise_sweep.csv".into());
    let mut base = ExperimentConfig::new(EnvSpec::preset("synthetic")?, AlgorithmSpec::Meb, t);
    base.schedule.warmup = Some(TABLE_WARMUP);
    let table = sweep(&base, &SweepGrid::synthetic_table())?;
    for row in &table.rows {
        let cells: Vec<String> = row.cells.iter().map(|c| format!("{:.3}", c.average_regret)).collect();
        println!("{:>5} {:>4}  {}", row.sigma_eta_sq, row.sigma_e_sq, cells.join("  "));
    }
    write_table(&table, out.as_ref())?;
    println!("wrote {out}");
    Ok(())
}
