//! Small constructions where a particular estimator or algorithm breaks.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, RngCore};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::{stream, EnvStep, Environment, RngStreams};
use crate::domain::{ObservedRound, PolicyDistribution, RewardModel};
use crate::error::Result;
use crate::policies::Policy;

/// `x ≡ 1`, `ε ~ U(-2, 2)`, `θ0 = -1`, `θ1 = 1`, `η ~ U(-0.1, 0.1)`.
///
/// Paired with [`ThresholdPolicy`], the per-action naive correction is
/// inconsistent while the importance-weighted one is not.
pub struct NaiveFailureEnv {
    model: RewardModel,
    error_rng: ChaCha8Rng,
    reward_rng: ChaCha8Rng,
}

impl NaiveFailureEnv {
    pub fn new(streams: RngStreams) -> Self {
        Self {
            model: RewardModel::from_rows(&[&[-1.0], &[1.0]]).expect("valid model"),
            error_rng: streams.stream(stream::ERROR),
            reward_rng: streams.stream(stream::REWARD),
        }
    }

    /// Variance of `U(-2, 2)`.
    pub const ERROR_VAR: f64 = 4.0 / 3.0;
}

impl Environment for NaiveFailureEnv {
    fn dim(&self) -> usize {
        1
    }

    fn num_actions(&self) -> usize {
        2
    }

    fn reward_model(&self) -> &RewardModel {
        &self.model
    }

    fn step(&mut self, t: usize) -> EnvStep {
        let x = DVector::from_element(1, 1.0);
        let eps = self.error_rng.random_range(-2.0..2.0);
        let eta = self.reward_rng.random_range(-0.1..0.1);
        EnvStep {
            round_index: t,
            noisy_context: DVector::from_element(1, 1.0 + eps),
            mean_rewards: self.model.mean_rewards(&x),
            true_context: x,
            error_cov: DMatrix::from_element(1, 1, Self::ERROR_VAR),
            reward_noise: eta,
        }
    }
}

/// Stationary two-action policy: action 1 with probability 2/3 when
/// `x̃ > threshold`, else 1/3.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdPolicy {
    pub threshold: f64,
}

impl ThresholdPolicy {
    pub fn new(threshold: f64) -> Self {
        Self { threshold }
    }

    pub fn distribution(&self, noisy_context: f64) -> PolicyDistribution {
        let probs = if noisy_context > self.threshold {
            vec![1.0 / 3.0, 2.0 / 3.0]
        } else {
            vec![2.0 / 3.0, 1.0 / 3.0]
        };
        PolicyDistribution::new(probs).expect("valid split")
    }
}

impl Policy for ThresholdPolicy {
    fn name(&self) -> &str {
        "threshold"
    }

    fn num_actions(&self) -> usize {
        2
    }

    fn decide(&self, noisy_context: &DVector<f64>, _rng: &mut dyn RngCore) -> Result<PolicyDistribution> {
        crate::policies::check_dim(1, noisy_context.len(), 0)?;
        Ok(self.distribution(noisy_context[0]))
    }

    fn update(&mut self, _round: &ObservedRound) -> Result<()> {
        Ok(())
    }
}

/// `d = 2`, `θ1 = (1, 0)`, `θ0 = (-1, 0)`, `x` uniform on four points and
/// `ε = ±ρ0·x[0]·(1, 1)`. The error never flips the optimal action, yet
/// ridge regression on `x̃` converges to a rotated parameter.
///
/// The error covariance handed to policies is the marginal
/// `E[εεᵀ] = ρ0²·E[x[0]²]·11ᵀ`, so it carries no information about `x`.
pub struct RlsFailureEnv {
    model: RewardModel,
    rho0: f64,
    sigma_eta: f64,
    error_cov: DMatrix<f64>,
    context_rng: ChaCha8Rng,
    error_rng: ChaCha8Rng,
    reward_rng: ChaCha8Rng,
}

impl RlsFailureEnv {
    pub const SUPPORT: [[f64; 2]; 4] = [[1.0, 3.0], [-3.0, 1.0], [-1.0, -3.0], [3.0, -1.0]];

    pub fn new(rho0: f64, sigma_eta_sq: f64, streams: RngStreams) -> Self {
        // E[x[0]²] = (1 + 9 + 1 + 9) / 4
        let scale = rho0 * rho0 * 5.0;
        Self {
            model: RewardModel::from_rows(&[&[-1.0, 0.0], &[1.0, 0.0]]).expect("valid model"),
            rho0,
            sigma_eta: sigma_eta_sq.sqrt(),
            error_cov: DMatrix::from_element(2, 2, scale),
            context_rng: streams.stream(stream::CONTEXT),
            error_rng: streams.stream(stream::ERROR),
            reward_rng: streams.stream(stream::REWARD),
        }
    }
}

impl Environment for RlsFailureEnv {
    fn dim(&self) -> usize {
        2
    }

    fn num_actions(&self) -> usize {
        2
    }

    fn reward_model(&self) -> &RewardModel {
        &self.model
    }

    fn step(&mut self, t: usize) -> EnvStep {
        let p = Self::SUPPORT[self.context_rng.random_range(0..4)];
        let x = DVector::from_vec(p.to_vec());
        let sign = if self.error_rng.random::<bool>() { 1.0 } else { -1.0 };
        let e = sign * self.rho0 * p[0];
        let eta = self.sigma_eta * self.reward_rng.sample::<f64, _>(StandardNormal);
        EnvStep {
            round_index: t,
            noisy_context: DVector::from_vec(vec![p[0] + e, p[1] + e]),
            mean_rewards: self.model.mean_rewards(&x),
            true_context: x,
            error_cov: self.error_cov.clone(),
            reward_noise: eta,
        }
    }
}

/// `d = 1`, `θ = (-1, 1)`, `x = ±0.2`, `x̃ = ±1` agreeing in sign with
/// probability 0.6. No policy on `x̃` can avoid linear regret.
pub struct SignFlipEnv {
    model: RewardModel,
    context_rng: ChaCha8Rng,
    error_rng: ChaCha8Rng,
}

impl SignFlipEnv {
    /// `E[(x̃ - x)²] = 0.6·0.8² + 0.4·1.2²`.
    pub const ERROR_VAR: f64 = 0.96;

    pub fn new(streams: RngStreams) -> Self {
        Self {
            model: RewardModel::from_rows(&[&[-1.0], &[1.0]]).expect("valid model"),
            context_rng: streams.stream(stream::CONTEXT),
            error_rng: streams.stream(stream::ERROR),
        }
    }
}

impl Environment for SignFlipEnv {
    fn dim(&self) -> usize {
        1
    }

    fn num_actions(&self) -> usize {
        2
    }

    fn reward_model(&self) -> &RewardModel {
        &self.model
    }

    fn step(&mut self, t: usize) -> EnvStep {
        let sign = if self.context_rng.random::<bool>() { 1.0 } else { -1.0 };
        let agree = self.error_rng.random::<f64>() < 0.6;
        let x = DVector::from_element(1, 0.2 * sign);
        let noisy = if agree { sign } else { -sign };
        EnvStep {
            round_index: t,
            noisy_context: DVector::from_element(1, noisy),
            mean_rewards: self.model.mean_rewards(&x),
            true_context: x,
            error_cov: DMatrix::from_element(1, 1, Self::ERROR_VAR),
            reward_noise: 0.0,
        }
    }
}
