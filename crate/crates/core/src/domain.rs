//! Value types shared by the estimators, policies, environments and the
//! regret accounting.
//!
//! Actions are zero-indexed `0..K`. Vectors and matrices are `nalgebra`
//! dynamic types in double precision.

use std::collections::BTreeSet;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{MebError, Result};
use crate::linalg;

/// Numerical tolerance for PSD checks on error covariances.
pub const PSD_TOLERANCE: f64 = 1e-10;
/// Tolerance on the total mass of a [`PolicyDistribution`].
pub const MASS_TOLERANCE: f64 = 1e-12;

/// True reward parameters, one `d`-vector per action.
#[derive(Debug, Clone, PartialEq)]
pub struct RewardModel {
    thetas: Vec<DVector<f64>>,
}

impl RewardModel {
    pub fn new(thetas: Vec<DVector<f64>>) -> Result<Self> {
        let Some(first) = thetas.first() else {
            return Err(MebError::ConfigInvalid("reward model needs at least one action".into()));
        };
        let d = first.len();
        if d == 0 {
            return Err(MebError::ConfigInvalid("reward model dimension must be >= 1".into()));
        }
        for t in &thetas {
            if t.len() != d {
                return Err(MebError::DimensionMismatch {
                    round: 0,
                    expected: d,
                    found: t.len(),
                });
            }
        }
        Ok(Self { thetas })
    }

    /// Builds a model and checks `‖θ_a‖₂ ≤ bound` for every action.
    pub fn with_bound(thetas: Vec<DVector<f64>>, bound: f64) -> Result<Self> {
        let m = Self::new(thetas)?;
        if let Some(a) = m.thetas.iter().position(|t| t.norm() > bound) {
            return Err(MebError::ConfigInvalid(format!(
                "parameter norm of action {a} exceeds bound {bound}"
            )));
        }
        Ok(m)
    }

    pub fn from_rows(rows: &[&[f64]]) -> Result<Self> {
        Self::new(rows.iter().map(|r| DVector::from_row_slice(r)).collect())
    }

    pub fn dim(&self) -> usize {
        self.thetas[0].len()
    }

    pub fn num_actions(&self) -> usize {
        self.thetas.len()
    }

    pub fn theta(&self, action: usize) -> &DVector<f64> {
        &self.thetas[action]
    }

    pub fn thetas(&self) -> &[DVector<f64>] {
        &self.thetas
    }

    /// Largest parameter norm, i.e. the tightest admissible `R_θ`.
    pub fn max_norm(&self) -> f64 {
        self.thetas.iter().map(|t| t.norm()).fold(0.0, f64::max)
    }

    /// Expected reward `⟨θ_a, x⟩` of every action.
    pub fn mean_rewards(&self, context: &DVector<f64>) -> Vec<f64> {
        self.thetas.iter().map(|t| t.dot(context)).collect()
    }
}

/// One observed round: what the agent saw, did and got back.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservedRound {
    pub noisy_context: DVector<f64>,
    pub action: usize,
    pub reward: f64,
    /// Probability the executed policy gave to `action`.
    pub propensity: f64,
    /// Error covariance of `noisy_context`, known or estimated.
    pub error_cov: DMatrix<f64>,
    /// 1-based round index.
    pub round_index: usize,
}

impl ObservedRound {
    pub fn dim(&self) -> usize {
        self.noisy_context.len()
    }
}

/// Ordered sequence of observed rounds over a fixed action set.
#[derive(Debug, Clone, PartialEq)]
pub struct History {
    pub num_actions: usize,
    pub rounds: Vec<ObservedRound>,
}

impl History {
    pub fn new(num_actions: usize) -> Self {
        Self {
            num_actions,
            rounds: Vec::new(),
        }
    }

    pub fn from_rounds(num_actions: usize, rounds: Vec<ObservedRound>) -> Self {
        Self { num_actions, rounds }
    }

    pub fn push(&mut self, round: ObservedRound) {
        self.rounds.push(round);
    }

    pub fn len(&self) -> usize {
        self.rounds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rounds.is_empty()
    }

    /// Context dimension of the first round, if any.
    pub fn dim(&self) -> Option<usize> {
        self.rounds.first().map(ObservedRound::dim)
    }
}

/// Checks every invariant of a history; errors name the offending round.
pub fn validate_history(history: &History) -> Result<()> {
    let Some(d) = history.dim() else {
        return Ok(());
    };
    for (i, r) in history.rounds.iter().enumerate() {
        let round = r.round_index;
        if round != i + 1 {
            return Err(MebError::RoundOutOfOrder {
                expected: i + 1,
                found: round,
            });
        }
        if r.dim() != d {
            return Err(MebError::DimensionMismatch {
                round,
                expected: d,
                found: r.dim(),
            });
        }
        if r.error_cov.nrows() != d || r.error_cov.ncols() != d {
            return Err(MebError::DimensionMismatch {
                round,
                expected: d,
                found: r.error_cov.nrows(),
            });
        }
        if r.action >= history.num_actions {
            return Err(MebError::ActionOutOfRange {
                action: r.action,
                num_actions: history.num_actions,
            });
        }
        if !(r.propensity > 0.0 && r.propensity <= 1.0) {
            return Err(MebError::NonPositivePropensity {
                round,
                propensity: r.propensity,
            });
        }
        if !linalg::is_symmetric_psd(&r.error_cov, PSD_TOLERANCE) {
            return Err(MebError::NonPsdErrorCov { round });
        }
    }
    Ok(())
}

/// A probability vector over the `K` actions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyDistribution {
    probs: Vec<f64>,
}

impl PolicyDistribution {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(MebError::InvalidDistribution("empty".into()));
        }
        if let Some(p) = probs.iter().find(|p| !(**p >= 0.0)) {
            return Err(MebError::InvalidDistribution(format!("entry {p} is negative")));
        }
        let mass: f64 = probs.iter().sum();
        if (mass - 1.0).abs() > MASS_TOLERANCE {
            return Err(MebError::InvalidDistribution(format!("total mass {mass}")));
        }
        Ok(Self { probs })
    }

    pub fn uniform(num_actions: usize) -> Self {
        Self {
            probs: vec![1.0 / num_actions as f64; num_actions],
        }
    }

    pub fn point_mass(num_actions: usize, action: usize) -> Self {
        let mut probs = vec![0.0; num_actions];
        probs[action] = 1.0;
        Self { probs }
    }

    /// `1 - (K-1) p0` on `best`, `p0` on every other action.
    pub fn clipped(num_actions: usize, best: usize, p0: f64) -> Self {
        let mut probs = vec![p0; num_actions];
        probs[best] = 1.0 - (num_actions - 1) as f64 * p0;
        Self { probs }
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn prob(&self, action: usize) -> f64 {
        self.probs[action]
    }

    pub fn num_actions(&self) -> usize {
        self.probs.len()
    }

    pub fn min_prob(&self) -> f64 {
        self.probs.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Inverse-CDF draw from a uniform variate `u ∈ [0, 1)`.
    pub fn sample_with(&self, u: f64) -> usize {
        let mut acc = 0.0;
        for (a, p) in self.probs.iter().enumerate() {
            acc += p;
            if u < acc {
                return a;
            }
        }
        // u landed in the rounding slack above the last cumulative sum
        self.probs.iter().rposition(|p| *p > 0.0).unwrap_or(0)
    }
}

/// Index of the largest score, lowest index on ties.
pub fn argmax_lowest(scores: &[f64]) -> usize {
    let mut best = 0;
    for (a, s) in scores.iter().enumerate().skip(1) {
        if *s > scores[best] {
            best = a;
        }
    }
    best
}

/// A data-independent reference policy `π^nd_t(a)` used for importance
/// weighting. Implementations must not depend on observed data.
pub trait ReferencePolicy: Send + Sync {
    fn prob(&self, round: usize, action: usize) -> f64;
}

/// `π^nd ≡ 1/K`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UniformReference {
    pub num_actions: usize,
}

impl UniformReference {
    pub fn new(num_actions: usize) -> Self {
        Self { num_actions }
    }
}

impl ReferencePolicy for UniformReference {
    fn prob(&self, _round: usize, _action: usize) -> f64 {
        1.0 / self.num_actions as f64
    }
}

/// A time-constant reference policy with arbitrary interior probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct FixedReference {
    probs: Vec<f64>,
}

impl FixedReference {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.iter().any(|p| !(*p > 0.0 && *p < 1.0)) {
            return Err(MebError::InvalidDistribution(
                "reference probabilities must lie in (0, 1)".into(),
            ));
        }
        PolicyDistribution::new(probs.clone())?;
        Ok(Self { probs })
    }
}

impl ReferencePolicy for FixedReference {
    fn prob(&self, _round: usize, action: usize) -> f64 {
        self.probs[action]
    }
}

/// Minimum selection probability `p0^(t)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MinProb {
    Constant(f64),
    /// `min{1/K, t^(-1/3)}`.
    Decaying,
}

impl MinProb {
    pub fn at(&self, round: usize, num_actions: usize) -> f64 {
        match *self {
            MinProb::Constant(p) => p,
            MinProb::Decaying => {
                let cap = 1.0 / num_actions as f64;
                cap.min((round.max(1) as f64).powf(-1.0 / 3.0))
            }
        }
    }
}

/// The set of rounds after which the model estimate is refreshed.
#[derive(Debug, Clone, PartialEq)]
pub enum UpdateTimes {
    Every,
    /// `{base^k : k ≥ 1}`.
    Powers(usize),
    /// `{k·period : k ≥ 1}`.
    Multiples(usize),
    Explicit(BTreeSet<usize>),
}

impl UpdateTimes {
    pub fn contains(&self, round: usize) -> bool {
        match self {
            UpdateTimes::Every => true,
            UpdateTimes::Powers(base) => {
                if *base < 2 || round < *base {
                    return false;
                }
                let mut r = round;
                while r.is_multiple_of(*base) {
                    r /= base;
                }
                r == 1
            }
            UpdateTimes::Multiples(period) => *period > 0 && round > 0 && round.is_multiple_of(*period),
            UpdateTimes::Explicit(set) => set.contains(&round),
        }
    }

    pub fn is_empty(&self) -> bool {
        match self {
            UpdateTimes::Every => false,
            UpdateTimes::Powers(base) => *base < 2,
            UpdateTimes::Multiples(period) => *period == 0,
            UpdateTimes::Explicit(set) => set.is_empty(),
        }
    }
}

/// Warm-up length, minimum selection probability and model-update times.
#[derive(Debug, Clone, PartialEq)]
pub struct ExplorationSchedule {
    pub warmup_len: usize,
    pub min_prob: MinProb,
    pub update_times: UpdateTimes,
}

impl ExplorationSchedule {
    pub fn new(warmup_len: usize, min_prob: MinProb, update_times: UpdateTimes) -> Self {
        Self {
            warmup_len,
            min_prob,
            update_times,
        }
    }

    /// Standard setting: `T0 = ⌈2 d T^(2/3)⌉`, decaying `p0`.
    pub fn standard(dim: usize, horizon: usize) -> Self {
        let t0 = (2.0 * dim as f64 * (horizon as f64).powf(2.0 / 3.0)).ceil() as usize;
        Self::new(t0, MinProb::Decaying, UpdateTimes::Every)
    }

    /// Clipped setting: `T0 = ⌈2 d √T⌉`, constant `p0`.
    pub fn clipped(dim: usize, horizon: usize, p0: f64) -> Self {
        let t0 = (2.0 * dim as f64 * (horizon as f64).sqrt()).ceil() as usize;
        Self::new(t0, MinProb::Constant(p0), UpdateTimes::Every)
    }

    pub fn p0(&self, round: usize, num_actions: usize) -> f64 {
        self.min_prob.at(round, num_actions)
    }

    pub fn validate(&self, num_actions: usize) -> Result<()> {
        if let MinProb::Constant(p) = self.min_prob {
            if !(p > 0.0 && p <= 1.0 / num_actions as f64 + 1e-15) {
                return Err(MebError::ConfigInvalid(format!(
                    "p0 = {p} must lie in (0, 1/{num_actions}]"
                )));
            }
        }
        if self.update_times.is_empty() {
            return Err(MebError::ConfigInvalid("update_times is empty".into()));
        }
        Ok(())
    }
}
