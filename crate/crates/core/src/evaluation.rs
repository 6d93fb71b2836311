//! Benchmark policies and regret accounting.
//!
//! Regret is taken in expectation over the policy's action distribution,
//! using the true context and the true parameters. Both the standard
//! (point-mass oracle) and the clipped oracle benchmarks are tracked.

use nalgebra::DVector;

use crate::domain::{argmax_lowest, PolicyDistribution, RewardModel};
use crate::error::{MebError, Result};

/// Oracle action `argmax_a ⟨θ*_a, x⟩`, lowest index on ties.
pub fn oracle_action(theta_star: &RewardModel, true_context: &DVector<f64>) -> usize {
    argmax_lowest(&theta_star.mean_rewards(true_context))
}

/// Point mass on the oracle action.
pub fn standard_benchmark(theta_star: &RewardModel, true_context: &DVector<f64>) -> PolicyDistribution {
    PolicyDistribution::point_mass(
        theta_star.num_actions(),
        oracle_action(theta_star, true_context),
    )
}

/// `1 - (K-1) p0` on the oracle action, `p0` elsewhere.
pub fn clipped_benchmark(
    theta_star: &RewardModel,
    true_context: &DVector<f64>,
    p0: f64,
) -> PolicyDistribution {
    PolicyDistribution::clipped(
        theta_star.num_actions(),
        oracle_action(theta_star, true_context),
        p0,
    )
}

/// `Σ_a (benchmark_a − policy_a) ⟨θ*_a, x⟩`.
pub fn instantaneous_regret(
    benchmark: &PolicyDistribution,
    policy: &PolicyDistribution,
    theta_star: &RewardModel,
    true_context: &DVector<f64>,
) -> Result<f64> {
    let k = theta_star.num_actions();
    for n in [benchmark.num_actions(), policy.num_actions()] {
        if n != k {
            return Err(MebError::DimensionMismatch {
                round: 0,
                expected: k,
                found: n,
            });
        }
    }
    if true_context.len() != theta_star.dim() {
        return Err(MebError::DimensionMismatch {
            round: 0,
            expected: theta_star.dim(),
            found: true_context.len(),
        });
    }
    let means = theta_star.mean_rewards(true_context);
    Ok(means
        .iter()
        .enumerate()
        .map(|(a, m)| (benchmark.prob(a) - policy.prob(a)) * m)
        .sum())
}

/// `max_a ‖θ̂_a − θ*_a‖₂`.
pub fn max_estimation_error(theta_hat: &[DVector<f64>], theta_star: &RewardModel) -> f64 {
    theta_hat
        .iter()
        .zip(theta_star.thetas())
        .map(|(h, t)| (h - t).norm())
        .fold(0.0, f64::max)
}

/// Per-round regret series for one run.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RegretLedger {
    pub standard: Vec<f64>,
    pub clipped: Vec<f64>,
    pub cumulative_standard: Vec<f64>,
    pub cumulative_clipped: Vec<f64>,
    /// Per-action `‖θ̂_a − θ*_a‖₂`, when the policy exposes an estimate.
    pub estimation_errors: Vec<Option<Vec<f64>>>,
}

impl RegretLedger {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_capacity(horizon: usize) -> Self {
        Self {
            standard: Vec::with_capacity(horizon),
            clipped: Vec::with_capacity(horizon),
            cumulative_standard: Vec::with_capacity(horizon),
            cumulative_clipped: Vec::with_capacity(horizon),
            estimation_errors: Vec::with_capacity(horizon),
        }
    }

    pub fn len(&self) -> usize {
        self.standard.len()
    }

    pub fn is_empty(&self) -> bool {
        self.standard.is_empty()
    }

    /// Appends one round against both benchmarks.
    pub fn record_round(
        &mut self,
        standard: &PolicyDistribution,
        clipped: &PolicyDistribution,
        policy: &PolicyDistribution,
        theta_star: &RewardModel,
        true_context: &DVector<f64>,
        theta_hat: Option<&[DVector<f64>]>,
    ) -> Result<()> {
        let s = instantaneous_regret(standard, policy, theta_star, true_context)?;
        let c = instantaneous_regret(clipped, policy, theta_star, true_context)?;
        let cs = self.cumulative_standard.last().copied().unwrap_or(0.0) + s;
        let cc = self.cumulative_clipped.last().copied().unwrap_or(0.0) + c;
        self.standard.push(s);
        self.clipped.push(c);
        self.cumulative_standard.push(cs);
        self.cumulative_clipped.push(cc);
        self.estimation_errors.push(theta_hat.map(|th| {
            th.iter()
                .zip(theta_star.thetas())
                .map(|(h, t)| (h - t).norm())
                .collect()
        }));
        Ok(())
    }

    /// Largest per-action estimation error at each round.
    pub fn max_estimation_errors(&self) -> Vec<Option<f64>> {
        self.estimation_errors
            .iter()
            .map(|e| e.as_ref().map(|v| v.iter().copied().fold(0.0, f64::max)))
            .collect()
    }

    /// Cumulative regret divided by the number of rounds.
    pub fn average_standard(&self) -> f64 {
        self.cumulative_standard.last().map_or(0.0, |c| c / self.len() as f64)
    }

    pub fn average_clipped(&self) -> f64 {
        self.cumulative_clipped.last().map_or(0.0, |c| c / self.len() as f64)
    }
}
