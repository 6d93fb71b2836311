use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use super::config::{AlgorithmSpec, ExperimentConfig};
use super::output::format_float;
use super::runner::run_experiment;
use crate::environments::EnvSpec;
use crate::error::{MebError, Result};

/// Warm-up length used for the table presets.
///
/// The theory default `⌈2d√T⌉` spends over 2000 uniform rounds at `T = 50000`,
/// which dominates the low-noise cells; the tables use a short warm-up instead.
pub const TABLE_WARMUP: usize = 100;

/// Grid of (reward noise, context noise) pairs crossed with algorithms.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepGrid {
    pub sigma_eta_sq: Vec<f64>,
    pub sigma_e_sq: Vec<f64>,
    pub algorithms: Vec<AlgorithmSpec>,
}

fn table_algorithms() -> Vec<AlgorithmSpec> {
    ["ts", "ucb", "meb", "meb-naive"]
        .into_iter()
        .map(|n| AlgorithmSpec::preset(n).expect("known preset"))
        .collect()
}

impl SweepGrid {
    /// The synthetic-environment table: σ_η² ∈ {0.01, 0.1, 1}, σ_ε² ∈ {0.1, 1, 2}.
    pub fn synthetic_table() -> Self {
        Self {
            sigma_eta_sq: vec![0.01, 0.1, 1.0],
            sigma_e_sq: vec![0.1, 1.0, 2.0],
            algorithms: table_algorithms(),
        }
    }

    /// The mobile-health table: σ_η² ∈ {0.05, 0.1, 5}, σ_ε² ∈ {0.1, 1, 2}.
    pub fn heartsteps_table() -> Self {
        Self {
            sigma_eta_sq: vec![0.05, 0.1, 5.0],
            sigma_e_sq: vec![0.1, 1.0, 2.0],
            algorithms: table_algorithms(),
        }
    }

    pub fn num_cells(&self) -> usize {
        self.sigma_eta_sq.len() * self.sigma_e_sq.len() * self.algorithms.len()
    }

    /// Row order: context noise outer, reward noise inner.
    pub fn noise_pairs(&self) -> Vec<(f64, f64)> {
        self.sigma_e_sq
            .iter()
            .flat_map(|&e| self.sigma_eta_sq.iter().map(move |&eta| (eta, e)))
            .collect()
    }
}

/// `env` with its reward and context noise replaced.
pub fn with_noise(env: &EnvSpec, sigma_eta_sq: f64, sigma_e_sq: f64) -> Result<EnvSpec> {
    match env {
        EnvSpec::Synthetic(c) => {
            let mut c = c.clone();
            c.sigma_eta_sq = sigma_eta_sq;
            c.sigma_e_sq = sigma_e_sq;
            Ok(EnvSpec::Synthetic(c))
        }
        EnvSpec::Heartsteps(c) => {
            let mut c = c.clone();
            c.sigma_eta_sq = sigma_eta_sq;
            c.sigma_eps_sq = sigma_e_sq;
            Ok(EnvSpec::Heartsteps(c))
        }
        other => Err(MebError::ConfigInvalid(format!(
            "environment {} has no noise grid",
            other.name()
        ))),
    }
}

/// Average regret at `T` and its standard deviation over replications.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepCell {
    pub average_regret: f64,
    pub sd: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub sigma_eta_sq: f64,
    pub sigma_e_sq: f64,
    /// One per algorithm, in grid order.
    pub cells: Vec<SweepCell>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepTable {
    pub algorithms: Vec<String>,
    pub rows: Vec<SweepRow>,
}

impl SweepTable {
    pub fn cell(&self, sigma_eta_sq: f64, sigma_e_sq: f64, algorithm: &str) -> Option<SweepCell> {
        let col = self.algorithms.iter().position(|a| a == algorithm)?;
        self.rows
            .iter()
            .find(|r| r.sigma_eta_sq == sigma_eta_sq && r.sigma_e_sq == sigma_e_sq)
            .map(|r| r.cells[col])
    }

    pub fn header(&self) -> Vec<String> {
        let mut h = vec!["sigma_eta_sq".to_string(), "sigma_e_sq".to_string()];
        for a in &self.algorithms {
            h.push(a.clone());
            h.push(format!("{a}_sd"));
        }
        h
    }
}

/// Runs `base` once per grid cell, overriding its noise levels and algorithm.
pub fn sweep(base: &ExperimentConfig, grid: &SweepGrid) -> Result<SweepTable> {
    if grid.num_cells() == 0 {
        return Err(MebError::ConfigInvalid("sweep grid is empty".into()));
    }
    let mut rows = Vec::new();
    for (eta, e) in grid.noise_pairs() {
        let env = with_noise(&base.env, eta, e)?;
        let mut cells = Vec::with_capacity(grid.algorithms.len());
        for algo in &grid.algorithms {
            let cfg = ExperimentConfig {
                env: env.clone(),
                algorithm: algo.clone(),
                ..base.clone()
            };
            let res = run_experiment(&cfg)?;
            let t = cfg.t as f64;
            cells.push(SweepCell {
                average_regret: res.average_regret(),
                sd: res.final_round().clip_regret_sd / t,
            });
        }
        rows.push(SweepRow {
            sigma_eta_sq: eta,
            sigma_e_sq: e,
            cells,
        });
    }
    Ok(SweepTable {
        algorithms: grid.algorithms.iter().map(|a| a.name().to_string()).collect(),
        rows,
    })
}

pub fn write_table(table: &SweepTable, path: &Path) -> Result<()> {
    let io = |e: csv::Error| MebError::Io(e.to_string());
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(BufWriter::new(File::create(path)?));
    w.write_record(table.header()).map_err(io)?;
    for r in &table.rows {
        let mut rec = vec![format_float(r.sigma_eta_sq), format_float(r.sigma_e_sq)];
        for c in &r.cells {
            rec.push(format_float(c.average_regret));
            rec.push(format_float(c.sd));
        }
        w.write_record(rec).map_err(io)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_grid_has_36_cells() {
        let g = SweepGrid::synthetic_table();
        assert_eq!(g.num_cells(), 36);
        assert_eq!(g.noise_pairs()[0], (0.01, 0.1));
        assert_eq!(g.noise_pairs()[5], (1.0, 1.0));
    }

    #[test]
    fn noise_override_rejects_fixed_envs() {
        assert!(with_noise(&EnvSpec::SignFlip, 1.0, 1.0).is_err());
        match with_noise(&EnvSpec::preset("heartsteps").unwrap(), 5.0, 2.0).unwrap() {
            EnvSpec::Heartsteps(c) => assert_eq!((c.sigma_eta_sq, c.sigma_eps_sq), (5.0, 2.0)),
            _ => unreachable!(),
        }
    }
}
