use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::config::ExperimentConfig;
use super::runner::{RoundAggregate, RunResult};
use crate::error::{MebError, Result};

pub const CSV_HEADER: [&str; 9] = [
    "t",
    "std_regret_mean",
    "std_regret_sd",
    "clip_regret_mean",
    "clip_regret_sd",
    "avg_regret",
    "est_err_mean",
    "est_err_sd",
    "fallbacks",
];

/// 17 significant digits, so the value round-trips exactly.
pub fn format_float(v: f64) -> String {
    if v.is_nan() {
        "NaN".to_string()
    } else if v.is_infinite() {
        if v > 0.0 { "inf" } else { "-inf" }.to_string()
    } else {
        format!("{v:.16e}")
    }
}

/// Rounds written for a given stride: every `stride`-th round, plus `T`.
pub fn emitted_rounds(horizon: usize, stride: usize) -> Vec<usize> {
    let stride = stride.max(1);
    let mut rows: Vec<usize> = (stride..=horizon).step_by(stride).collect();
    if rows.last() != Some(&horizon) && horizon > 0 {
        rows.push(horizon);
    }
    rows
}

fn row(t: usize, r: &RoundAggregate) -> [String; 9] {
    [
        t.to_string(),
        format_float(r.std_regret_mean),
        format_float(r.std_regret_sd),
        format_float(r.clip_regret_mean),
        format_float(r.clip_regret_sd),
        format_float(r.avg_regret),
        format_float(r.est_err_mean),
        format_float(r.est_err_sd),
        format_float(r.fallbacks),
    ]
}

#[derive(Serialize)]
struct Meta<'a> {
    config_hash: &'a str,
    seeds: &'a [u64],
    normalization: f64,
    stride: usize,
    violates_contextual_assumption: bool,
    columns: [&'static str; 9],
    config: &'a ExperimentConfig,
}

/// `<path>.meta.json`.
pub fn meta_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".meta.json");
    PathBuf::from(s)
}

/// Writes the per-round CSV and its metadata sibling.
pub fn emit_csv(result: &RunResult, path: &Path, stride: usize) -> Result<()> {
    if stride == 0 {
        return Err(MebError::ConfigInvalid("stride must be >= 1".into()));
    }
    let io = |e: csv::Error| MebError::Io(e.to_string());
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(BufWriter::new(File::create(path)?));
    w.write_record(CSV_HEADER).map_err(io)?;
    for t in emitted_rounds(result.rounds.len(), stride) {
        w.write_record(row(t, &result.rounds[t - 1])).map_err(io)?;
    }
    w.flush()?;

    let meta = Meta {
        config_hash: &result.config_hash,
        seeds: &result.seeds,
        normalization: result.normalization,
        stride,
        violates_contextual_assumption: result.violates_contextual_assumption,
        columns: CSV_HEADER,
        config: &result.config,
    };
    let mut f = BufWriter::new(File::create(meta_path(path))?);
    serde_json::to_writer_pretty(&mut f, &meta).map_err(|e| MebError::Io(e.to_string()))?;
    f.write_all(b"\n")?;
    f.flush()?;
    Ok(())
}
