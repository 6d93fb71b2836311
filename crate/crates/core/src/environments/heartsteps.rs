use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{stream, EnvStep, Environment, RngStreams};
use crate::domain::RewardModel;
use crate::error::{MebError, Result};

/// Distribution of one feature in `Z_t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "dist", rename_all = "kebab-case")]
pub enum ZFeature {
    Gaussian { mean: f64, sd: f64 },
    Bernoulli { p: f64 },
}

impl ZFeature {
    fn draw(&self, rng: &mut impl Rng) -> f64 {
        match *self {
            ZFeature::Gaussian { mean, sd } => mean + sd * rng.sample::<f64, _>(StandardNormal),
            ZFeature::Bernoulli { p } => f64::from(u8::from(rng.random::<f64>() < p)),
        }
    }
}

/// Mobile-health style environment with an action-driven burden state.
///
/// The context is `x = (I, Z, B)` with availability `I`, features `Z` and
/// burden `B_{t+1} = λ B_t + 1{A_t = 1}`. Only the burden is observed with
/// noise. Rewards are `xᵀα + a·f(x)ᵀβ + η`, where `f` selects the
/// treatment-moderating coordinates of `x`.
///
/// The feature distributions and parameters are parametric stand-ins chosen
/// by the caller; the defaults are illustrative values, not fitted ones.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HeartStepsConfig {
    pub lambda_burden: f64,
    pub availability_prob: f64,
    pub z_features: Vec<ZFeature>,
    /// Length `2 + z_features.len()`.
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
    /// Indices into `x` forming `f(x)`, same length as `beta`.
    pub treatment_features: Vec<usize>,
    pub sigma_eta_sq: f64,
    /// Variance of the burden measurement error.
    pub sigma_eps_sq: f64,
    pub initial_burden: f64,
}

impl Default for HeartStepsConfig {
    fn default() -> Self {
        Self {
            lambda_burden: 0.5,
            availability_prob: 0.8,
            z_features: vec![
                // prior 30-minute step count (standardized log scale)
                ZFeature::Gaussian { mean: 0.0, sd: 1.0 },
                // yesterday's step count
                ZFeature::Gaussian { mean: 0.0, sd: 1.0 },
                // location at home/work
                ZFeature::Bernoulli { p: 0.4 },
                // current temperature
                ZFeature::Gaussian { mean: 0.0, sd: 1.0 },
                // step variation level
                ZFeature::Bernoulli { p: 0.5 },
            ],
            alpha: vec![0.5, 0.4, 0.3, 0.1, 0.05, 0.1, -0.2],
            beta: vec![0.6, 0.4, -0.5],
            treatment_features: vec![3, 5, 6],
            sigma_eta_sq: 1.0,
            sigma_eps_sq: 1.0,
            initial_burden: 0.0,
        }
    }
}

impl HeartStepsConfig {
    pub fn dim(&self) -> usize {
        self.z_features.len() + 2
    }

    pub fn burden_index(&self) -> usize {
        self.dim() - 1
    }

    pub fn reward_model(&self) -> Result<RewardModel> {
        let alpha = DVector::from_vec(self.alpha.clone());
        let mut treated = alpha.clone();
        for (&i, &b) in self.treatment_features.iter().zip(&self.beta) {
            treated[i] += b;
        }
        RewardModel::new(vec![alpha, treated])
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.dim();
        let bad = |m: &str| Err(MebError::ConfigInvalid(m.to_string()));
        if !(0.0..1.0).contains(&self.lambda_burden) {
            return bad("lambda_burden must lie in [0, 1)");
        }
        if !(0.0..=1.0).contains(&self.availability_prob) {
            return bad("availability_prob must lie in [0, 1]");
        }
        if self.alpha.len() != d {
            return Err(MebError::ConfigInvalid(format!("alpha must have length {d}")));
        }
        if self.beta.len() != self.treatment_features.len() || self.treatment_features.iter().any(|&i| i >= d) {
            return bad("beta and treatment_features must match and index into x");
        }
        if !(self.sigma_eta_sq >= 0.0) || !(self.sigma_eps_sq >= 0.0) || !(self.initial_burden >= 0.0) {
            return bad("variances and initial burden must be >= 0");
        }
        for z in &self.z_features {
            match *z {
                ZFeature::Gaussian { sd, .. } if !(sd >= 0.0) => return bad("feature sd must be >= 0"),
                ZFeature::Bernoulli { p } if !(0.0..=1.0).contains(&p) => return bad("feature p must lie in [0, 1]"),
                _ => {}
            }
        }
        Ok(())
    }
}

pub struct HeartStepsEnv {
    config: HeartStepsConfig,
    model: RewardModel,
    burden: f64,
    error_cov: DMatrix<f64>,
    context_rng: ChaCha8Rng,
    error_rng: ChaCha8Rng,
    reward_rng: ChaCha8Rng,
}

impl HeartStepsEnv {
    pub fn new(config: HeartStepsConfig, streams: RngStreams) -> Result<Self> {
        config.validate()?;
        let d = config.dim();
        let mut error_cov = DMatrix::zeros(d, d);
        error_cov[(d - 1, d - 1)] = config.sigma_eps_sq;
        Ok(Self {
            model: config.reward_model()?,
            burden: config.initial_burden,
            error_cov,
            context_rng: streams.stream(stream::CONTEXT),
            error_rng: streams.stream(stream::ERROR),
            reward_rng: streams.stream(stream::REWARD),
            config,
        })
    }

    /// Current true burden `B_t`.
    pub fn burden(&self) -> f64 {
        self.burden
    }
}

impl Environment for HeartStepsEnv {
    fn dim(&self) -> usize {
        self.config.dim()
    }

    fn num_actions(&self) -> usize {
        2
    }

    fn reward_model(&self) -> &RewardModel {
        &self.model
    }

    fn step(&mut self, t: usize) -> EnvStep {
        let d = self.config.dim();
        let mut x = DVector::zeros(d);
        x[0] = f64::from(u8::from(self.context_rng.random::<f64>() < self.config.availability_prob));
        for (i, z) in self.config.z_features.iter().enumerate() {
            x[i + 1] = z.draw(&mut self.context_rng);
        }
        x[d - 1] = self.burden;
        let mut noisy = x.clone();
        noisy[d - 1] += self.config.sigma_eps_sq.sqrt() * self.error_rng.sample::<f64, _>(StandardNormal);
        let eta = self.config.sigma_eta_sq.sqrt() * self.reward_rng.sample::<f64, _>(StandardNormal);
        EnvStep {
            round_index: t,
            mean_rewards: self.model.mean_rewards(&x),
            true_context: x,
            noisy_context: noisy,
            error_cov: self.error_cov.clone(),
            reward_noise: eta,
        }
    }

    fn observe_action(&mut self, action: usize) {
        self.burden = self.config.lambda_burden * self.burden + f64::from(u8::from(action == 1));
    }

    fn violates_contextual_assumption(&self) -> bool {
        true
    }
}
