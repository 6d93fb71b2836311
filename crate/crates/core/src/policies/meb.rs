use std::sync::Arc;

use nalgebra::DVector;
use rand::RngCore;

use super::{check_dim, Policy};
use crate::domain::{
    argmax_lowest, ExplorationSchedule, ObservedRound, PolicyDistribution, ReferencePolicy,
    UniformReference,
};
use crate::error::{MebError, Result};
use crate::estimators::{EstimatorKind, SufficientStats};

/// Measurement-error bandit: uniform warm-up, then a clipped greedy rule on
/// the latest model estimate, refreshed at the schedule's update times.
///
/// With [`EstimatorKind::Naive`] this is the naive variant, with
/// [`EstimatorKind::Rls`] it is the same decision rule on ridge estimates.
#[derive(Clone)]
pub struct MebState {
    name: String,
    stats: SufficientStats,
    theta: Vec<Option<DVector<f64>>>,
    schedule: ExplorationSchedule,
    reference: Arc<dyn ReferencePolicy>,
    estimator: EstimatorKind,
    round: usize,
    singular_fallbacks: usize,
}

impl std::fmt::Debug for MebState {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("MebState")
            .field("name", &self.name)
            .field("round", &self.round)
            .field("theta", &self.theta)
            .field("singular_fallbacks", &self.singular_fallbacks)
            .finish()
    }
}

impl MebState {
    pub fn new(
        dim: usize,
        num_actions: usize,
        schedule: ExplorationSchedule,
        estimator: EstimatorKind,
    ) -> Result<Self> {
        Self::with_reference(
            dim,
            num_actions,
            schedule,
            estimator,
            Arc::new(UniformReference::new(num_actions)),
        )
    }

    pub fn with_reference(
        dim: usize,
        num_actions: usize,
        schedule: ExplorationSchedule,
        estimator: EstimatorKind,
        reference: Arc<dyn ReferencePolicy>,
    ) -> Result<Self> {
        if num_actions < 2 {
            return Err(MebError::ConfigInvalid("at least two actions are required".into()));
        }
        schedule.validate(num_actions)?;
        let name = match estimator {
            EstimatorKind::Weighted => "meb",
            EstimatorKind::Naive => "meb-naive",
            EstimatorKind::Rls { .. } => "rls-meb",
        };
        Ok(Self {
            name: name.to_string(),
            stats: SufficientStats::new(dim, num_actions),
            theta: vec![None; num_actions],
            schedule,
            reference,
            estimator,
            round: 0,
            singular_fallbacks: 0,
        })
    }

    pub fn set_name(&mut self, name: impl Into<String>) {
        self.name = name.into();
    }

    pub fn stats(&self) -> &SufficientStats {
        &self.stats
    }

    pub fn schedule(&self) -> &ExplorationSchedule {
        &self.schedule
    }

    /// Rounds absorbed so far.
    pub fn round(&self) -> usize {
        self.round
    }

    pub fn is_learned(&self) -> bool {
        self.theta.iter().any(Option::is_some)
    }

    /// Overrides the model estimate; `None` entries mark unlearned actions.
    pub fn set_theta(&mut self, theta: Vec<Option<DVector<f64>>>) {
        assert_eq!(theta.len(), self.theta.len());
        self.theta = theta;
    }

    fn in_warmup(&self, t: usize) -> bool {
        t <= self.schedule.warmup_len || !self.is_learned()
    }

    fn scores(&self, x: &DVector<f64>) -> Vec<f64> {
        self.theta
            .iter()
            .map(|th| th.as_ref().map_or(0.0, |th| th.dot(x)))
            .collect()
    }

    /// Greedy action over all `K` actions, lowest index on ties.
    pub fn greedy_action(&self, x: &DVector<f64>) -> usize {
        argmax_lowest(&self.scores(x))
    }

    /// Two-action rule: action 1 only when it scores strictly higher.
    pub fn greedy_action_binary(&self, x: &DVector<f64>) -> usize {
        debug_assert_eq!(self.theta.len(), 2);
        let s = self.scores(x);
        usize::from(s[1] > s[0])
    }

    /// Decision for the next round using the two-action rule. Only valid for `K = 2`.
    pub fn decide_binary(&self, x: &DVector<f64>) -> Result<PolicyDistribution> {
        let t = self.round + 1;
        check_dim(self.stats.dim(), x.len(), t)?;
        if self.theta.len() != 2 {
            return Err(MebError::ConfigInvalid("binary rule needs exactly two actions".into()));
        }
        if self.in_warmup(t) {
            return Ok(PolicyDistribution::uniform(2));
        }
        let p0 = self.schedule.p0(t, 2);
        Ok(PolicyDistribution::clipped(2, self.greedy_action_binary(x), p0))
    }

    fn refresh(&mut self) {
        let mut singular = false;
        for a in 0..self.theta.len() {
            match self.stats.estimate(a, self.estimator) {
                Ok(th) => self.theta[a] = Some(th),
                Err(MebError::SingularDesign { .. }) => singular = true,
                Err(_) => {}
            }
        }
        if singular {
            self.singular_fallbacks += 1;
        }
    }
}

impl Policy for MebState {
    fn name(&self) -> &str {
        &self.name
    }

    fn num_actions(&self) -> usize {
        self.theta.len()
    }

    fn decide(&self, x: &DVector<f64>, _rng: &mut dyn RngCore) -> Result<PolicyDistribution> {
        let t = self.round + 1;
        check_dim(self.stats.dim(), x.len(), t)?;
        let k = self.theta.len();
        if self.in_warmup(t) {
            return Ok(PolicyDistribution::uniform(k));
        }
        let p0 = self.schedule.p0(t, k);
        Ok(PolicyDistribution::clipped(k, self.greedy_action(x), p0))
    }

    fn update(&mut self, round: &ObservedRound) -> Result<()> {
        let expected = self.round + 1;
        if round.round_index != expected {
            return Err(MebError::RoundOutOfOrder {
                expected,
                found: round.round_index,
            });
        }
        self.stats.absorb_round(round, self.reference.as_ref())?;
        self.round = expected;
        if self.schedule.update_times.contains(expected) {
            self.refresh();
        }
        Ok(())
    }

    fn theta_hat(&self) -> Option<Vec<DVector<f64>>> {
        let d = self.stats.dim();
        Some(
            self.theta
                .iter()
                .map(|th| th.clone().unwrap_or_else(|| DVector::zeros(d)))
                .collect(),
        )
    }

    fn singular_fallbacks(&self) -> usize {
        self.singular_fallbacks
    }
}
