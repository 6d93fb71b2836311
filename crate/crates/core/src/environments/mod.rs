//! Ground-truth simulators.
//!
//! An [`Environment`] emits one [`EnvStep`] per round: the hidden true context,
//! the noisy context the policy sees, the error covariance handed to the
//! policy, and the mean reward of every action together with the reward noise
//! drawn once for that round.
//!
//! Randomness is split into purpose streams of one ChaCha generator per
//! replication (see [`RngStreams`]), so adding a consumer of one stream does
//! not shift the draws of another.

mod counterexamples;
mod heartsteps;
mod synthetic;

pub use counterexamples::{SignFlipEnv, NaiveFailureEnv, RlsFailureEnv, ThresholdPolicy};
pub use heartsteps::{HeartStepsConfig, HeartStepsEnv, ZFeature};
pub use synthetic::{SyntheticConfig, SyntheticEnv};

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::domain::RewardModel;
use crate::error::{MebError, Result};
use crate::linalg;

/// Stream ids for [`RngStreams::stream`].
pub mod stream {
    pub const CONTEXT: u64 = 1;
    pub const ERROR: u64 = 2;
    pub const REWARD: u64 = 3;
    pub const POLICY_SAMPLE: u64 = 4;
    pub const POLICY_INTERNAL: u64 = 5;
    pub const ESTVAR: u64 = 6;
}

/// Purpose-split generators derived from one 64-bit seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RngStreams {
    seed: u64,
}

impl RngStreams {
    pub fn new(seed: u64) -> Self {
        Self { seed }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self, id: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(id);
        rng
    }
}

/// Everything the simulator produces for one round.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvStep {
    pub round_index: usize,
    /// `x_t`, never shown to a policy.
    pub true_context: DVector<f64>,
    /// `x̃_t`.
    pub noisy_context: DVector<f64>,
    /// `Σ_{e,t}` as handed to the policy.
    pub error_cov: DMatrix<f64>,
    /// `⟨θ*_a, x_t⟩` per action.
    pub mean_rewards: Vec<f64>,
    /// `η_t`, shared by all actions.
    pub reward_noise: f64,
}

impl EnvStep {
    /// Realized reward had `action` been played.
    pub fn reward(&self, action: usize) -> f64 {
        self.mean_rewards[action] + self.reward_noise
    }
}

pub trait Environment: Send {
    fn dim(&self) -> usize;

    fn num_actions(&self) -> usize;

    fn reward_model(&self) -> &RewardModel;

    /// Draws round `t`. Rounds must be requested in order starting at 1.
    fn step(&mut self, t: usize) -> EnvStep;

    /// Informs the environment of the action played in the last step.
    fn observe_action(&mut self, _action: usize) {}

    /// True when the context process depends on past actions.
    fn violates_contextual_assumption(&self) -> bool {
        false
    }
}

pub(crate) fn standard_normal_vec(rng: &mut impl Rng, d: usize) -> DVector<f64> {
    DVector::from_fn(d, |_, _| rng.sample::<f64, _>(StandardNormal))
}

/// An estimated error covariance: `Σ` plus a random symmetric perturbation of
/// operator norm `c·√(d/t)/d`, projected back onto the PSD cone.
pub fn estvar_feed(true_sigma: &DMatrix<f64>, t: usize, rng: &mut impl Rng, decay_scale: f64) -> DMatrix<f64> {
    let d = true_sigma.nrows();
    if decay_scale == 0.0 {
        return true_sigma.clone();
    }
    let a = DMatrix::from_fn(d, d, |_, _| rng.sample::<f64, _>(StandardNormal));
    let g = (&a + a.transpose()) * 0.5;
    let norm = linalg::symmetric_operator_norm(&g);
    let target = decay_scale * (d as f64 / t.max(1) as f64).sqrt() / d as f64;
    let perturbation = if norm > 0.0 { g * (target / norm) } else { g };
    linalg::project_psd(&(true_sigma + perturbation))
}

/// Environment selection with its parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum EnvSpec {
    Synthetic(SyntheticConfig),
    Heartsteps(HeartStepsConfig),
    NaiveFailure {
        #[serde(default)]
        threshold: f64,
    },
    RlsFailure {
        #[serde(default = "default_rls_rho0")]
        rho0: f64,
        #[serde(default = "default_rls_noise")]
        sigma_eta_sq: f64,
    },
    SignFlip,
}

fn default_rls_rho0() -> f64 {
    0.9
}

fn default_rls_noise() -> f64 {
    0.01
}

impl EnvSpec {
    pub fn name(&self) -> &'static str {
        match self {
            EnvSpec::Synthetic(_) => "synthetic",
            EnvSpec::Heartsteps(_) => "heartsteps",
            EnvSpec::NaiveFailure { .. } => "naive-failure",
            EnvSpec::RlsFailure { .. } => "rls-failure",
            EnvSpec::SignFlip => "sign-flip",
        }
    }

    /// Preset by name, as used by `--env`.
    pub fn preset(name: &str) -> Result<Self> {
        Ok(match name {
            "synthetic" => EnvSpec::Synthetic(SyntheticConfig::default()),
            "heartsteps" => EnvSpec::Heartsteps(HeartStepsConfig::default()),
            "naive-failure" => EnvSpec::NaiveFailure { threshold: 0.0 },
            "rls-failure" => EnvSpec::RlsFailure {
                rho0: default_rls_rho0(),
                sigma_eta_sq: default_rls_noise(),
            },
            "sign-flip" => EnvSpec::SignFlip,
            other => return Err(MebError::ConfigInvalid(format!("unknown environment `{other}`"))),
        })
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            EnvSpec::Synthetic(c) => c.validate(),
            EnvSpec::Heartsteps(c) => c.validate(),
            EnvSpec::RlsFailure { rho0, sigma_eta_sq } => {
                if !(*rho0 >= 0.0 && *rho0 < 1.0) || !(*sigma_eta_sq >= 0.0) {
                    return Err(MebError::ConfigInvalid("rls-failure needs 0 <= rho0 < 1, sigma_eta_sq >= 0".into()));
                }
                Ok(())
            }
            EnvSpec::NaiveFailure { threshold } if !threshold.is_finite() => {
                Err(MebError::ConfigInvalid("threshold must be finite".into()))
            }
            _ => Ok(()),
        }
    }

    /// Reward-noise variance, used for the TS/UCB defaults.
    pub fn reward_noise_var(&self) -> f64 {
        match self {
            EnvSpec::Synthetic(c) => c.sigma_eta_sq,
            EnvSpec::Heartsteps(c) => c.sigma_eta_sq,
            // Var U(-0.1, 0.1)
            EnvSpec::NaiveFailure { .. } => 0.01 / 3.0,
            EnvSpec::RlsFailure { sigma_eta_sq, .. } => *sigma_eta_sq,
            EnvSpec::SignFlip => 0.0,
        }
    }

    pub fn build(&self, streams: RngStreams) -> Result<Box<dyn Environment>> {
        self.validate()?;
        Ok(match self {
            EnvSpec::Synthetic(c) => Box::new(SyntheticEnv::new(c.clone(), streams)?),
            EnvSpec::Heartsteps(c) => Box::new(HeartStepsEnv::new(c.clone(), streams)?),
            EnvSpec::NaiveFailure { .. } => Box::new(NaiveFailureEnv::new(streams)),
            EnvSpec::RlsFailure { rho0, sigma_eta_sq } => {
                Box::new(RlsFailureEnv::new(*rho0, *sigma_eta_sq, streams))
            }
            EnvSpec::SignFlip => Box::new(SignFlipEnv::new(streams)),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn estvar_zero_scale_is_identity() {
        let s = DMatrix::identity(3, 3) * 0.25;
        let mut rng = RngStreams::new(1).stream(stream::ESTVAR);
        assert_eq!(estvar_feed(&s, 5, &mut rng, 0.0), s);
    }

    #[test]
    fn estvar_is_symmetric_and_scales() {
        let s = DMatrix::identity(4, 4);
        let mut rng = RngStreams::new(2).stream(stream::ESTVAR);
        for t in [1, 4, 100] {
            let e = estvar_feed(&s, t, &mut rng, 0.5);
            assert_eq!(e, e.transpose());
            // the identity has margin 1, so no projection happens here
            let n = linalg::symmetric_operator_norm(&(e - &s));
            let expected = 0.5 * (4.0 / t as f64).sqrt() / 4.0;
            approx::assert_relative_eq!(n, expected, epsilon = 1e-12);
        }
    }

    #[test]
    fn streams_are_independent_and_repeatable() {
        let s = RngStreams::new(42);
        let a: u64 = s.stream(stream::CONTEXT).random();
        let b: u64 = s.stream(stream::CONTEXT).random();
        let c: u64 = s.stream(stream::ERROR).random();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn presets_round_trip_names() {
        for name in ["synthetic", "heartsteps", "naive-failure", "rls-failure", "sign-flip"] {
            assert_eq!(EnvSpec::preset(name).unwrap().name(), name);
        }
        assert!(EnvSpec::preset("nope").is_err());
    }
}
