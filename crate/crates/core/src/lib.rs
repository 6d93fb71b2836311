//! Linear contextual bandits when only a noisy prediction of the context is
//! observed.
//!
//! The crate contains the measurement-error-adjusted bandit ([`policies::MebState`]),
//! the estimators it is built on, Thompson sampling and LinUCB baselines that
//! act on the noisy contexts, simulation environments, regret accounting
//! against the standard and clipped benchmarks, and a seeded replication
//! harness that writes CSV output.

// `!(x >= 0.0)` is used on purpose so NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod domain;
pub mod error;
pub mod estimators;
pub mod evaluation;
pub mod linalg;
pub mod environments;
pub mod harness;
pub mod policies;

pub use error::{MebError, Result};
