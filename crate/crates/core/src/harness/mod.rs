//! Configuration, seeded replication, aggregation and CSV output.

pub mod cli;
mod config;
pub mod demo;
mod output;
mod runner;
pub mod selftest;
mod sweep;

pub use config::{AlgorithmSpec, ExperimentConfig, ScheduleSpec, Setting, UpdateSpec};
pub use output::{emit_csv, emitted_rounds, format_float, meta_path, CSV_HEADER};
pub use runner::{
    aggregate, build_policy, run_experiment, run_replication, ReplicationTrace, RoundAggregate, RunResult,
    THREADS_ENV,
};
pub use sweep::{sweep, with_noise, write_table, SweepCell, SweepGrid, SweepRow, SweepTable, TABLE_WARMUP};
