use nalgebra::{Cholesky, DMatrix, DVector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{standard_normal_vec, stream, EnvStep, Environment, RngStreams};
use crate::domain::RewardModel;
use crate::error::{MebError, Result};

/// Gaussian contexts, isotropic Gaussian measurement error, Gaussian reward noise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SyntheticConfig {
    /// One parameter vector per action.
    pub thetas: Vec<Vec<f64>>,
    pub mu_x: Vec<f64>,
    /// Context covariance rows; identity when absent.
    pub context_cov: Option<Vec<Vec<f64>>>,
    /// `Σe = sigma_e_sq · I`.
    pub sigma_e_sq: f64,
    pub sigma_eta_sq: f64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self {
            thetas: vec![vec![5.0, 6.0, 4.0, 6.0, 4.0], vec![6.0, 5.0, 5.0, 5.0, 5.0]],
            mu_x: vec![1.0; 5],
            context_cov: None,
            sigma_e_sq: 0.25,
            sigma_eta_sq: 1.0,
        }
    }
}

impl SyntheticConfig {
    pub fn dim(&self) -> usize {
        self.mu_x.len()
    }

    pub fn error_cov(&self) -> DMatrix<f64> {
        DMatrix::identity(self.dim(), self.dim()) * self.sigma_e_sq
    }

    pub fn reward_model(&self) -> Result<RewardModel> {
        RewardModel::new(self.thetas.iter().map(|t| DVector::from_vec(t.clone())).collect())
    }

    fn context_factor(&self) -> Result<DMatrix<f64>> {
        let d = self.dim();
        let Some(rows) = &self.context_cov else {
            return Ok(DMatrix::identity(d, d));
        };
        if rows.len() != d || rows.iter().any(|r| r.len() != d) {
            return Err(MebError::ConfigInvalid(format!("context_cov must be {d}x{d}")));
        }
        let m = DMatrix::from_fn(d, d, |i, j| rows[i][j]);
        Cholesky::new(m)
            .map(|c| c.l())
            .ok_or_else(|| MebError::ConfigInvalid("context_cov must be positive definite".into()))
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.dim();
        if d == 0 {
            return Err(MebError::ConfigInvalid("mu_x must be nonempty".into()));
        }
        if self.thetas.len() < 2 || self.thetas.iter().any(|t| t.len() != d) {
            return Err(MebError::ConfigInvalid(format!(
                "need at least two thetas, each of length {d}"
            )));
        }
        if !(self.sigma_e_sq >= 0.0) || !(self.sigma_eta_sq >= 0.0) {
            return Err(MebError::ConfigInvalid("noise variances must be >= 0".into()));
        }
        self.context_factor().map(|_| ())
    }
}

pub struct SyntheticEnv {
    config: SyntheticConfig,
    model: RewardModel,
    mu: DVector<f64>,
    factor: DMatrix<f64>,
    error_cov: DMatrix<f64>,
    context_rng: ChaCha8Rng,
    error_rng: ChaCha8Rng,
    reward_rng: ChaCha8Rng,
}

impl SyntheticEnv {
    pub fn new(config: SyntheticConfig, streams: RngStreams) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            model: config.reward_model()?,
            mu: DVector::from_vec(config.mu_x.clone()),
            factor: config.context_factor()?,
            error_cov: config.error_cov(),
            context_rng: streams.stream(stream::CONTEXT),
            error_rng: streams.stream(stream::ERROR),
            reward_rng: streams.stream(stream::REWARD),
            config,
        })
    }

    pub fn config(&self) -> &SyntheticConfig {
        &self.config
    }
}

impl Environment for SyntheticEnv {
    fn dim(&self) -> usize {
        self.mu.len()
    }

    fn num_actions(&self) -> usize {
        self.model.num_actions()
    }

    fn reward_model(&self) -> &RewardModel {
        &self.model
    }

    fn step(&mut self, t: usize) -> EnvStep {
        let d = self.mu.len();
        let x = &self.mu + &self.factor * standard_normal_vec(&mut self.context_rng, d);
        let eps = standard_normal_vec(&mut self.error_rng, d) * self.config.sigma_e_sq.sqrt();
        let eta = self.reward_rng.sample::<f64, _>(StandardNormal) * self.config.sigma_eta_sq.sqrt();
        EnvStep {
            round_index: t,
            noisy_context: &x + eps,
            mean_rewards: self.model.mean_rewards(&x),
            true_context: x,
            error_cov: self.error_cov.clone(),
            reward_noise: eta,
        }
    }
}
