use nalgebra::{Cholesky, DMatrix, DVector};
use rand::RngCore;

use super::{check_dim, Policy};
use crate::domain::{argmax_lowest, MinProb, ObservedRound, PolicyDistribution};
use crate::error::{MebError, Result};

#[derive(Debug, Clone, PartialEq)]
struct Arm {
    gram: DMatrix<f64>,
    xr: DVector<f64>,
    gram_inv: DMatrix<f64>,
    mean: DVector<f64>,
}

/// Linear UCB on the noisy contexts, clipped to a minimum selection probability.
#[derive(Debug, Clone, PartialEq)]
pub struct UcbState {
    arms: Vec<Arm>,
    bonus_scale: f64,
    regularizer: f64,
    p0: MinProb,
    round: usize,
}

impl UcbState {
    /// `regularizer` is `l`, `bonus_scale` is `C`.
    pub fn new(dim: usize, num_actions: usize, regularizer: f64, bonus_scale: f64, p0: MinProb) -> Result<Self> {
        if !(regularizer > 0.0) || !(bonus_scale >= 0.0) {
            return Err(MebError::ConfigInvalid("UCB needs l > 0 and C >= 0".into()));
        }
        if num_actions < 2 {
            return Err(MebError::ConfigInvalid("at least two actions are required".into()));
        }
        let arm = Arm {
            gram: DMatrix::identity(dim, dim) * regularizer,
            xr: DVector::zeros(dim),
            gram_inv: DMatrix::identity(dim, dim) / regularizer,
            mean: DVector::zeros(dim),
        };
        Ok(Self {
            arms: vec![arm; num_actions],
            bonus_scale,
            regularizer,
            p0,
            round: 0,
        })
    }

    pub fn regularizer(&self) -> f64 {
        self.regularizer
    }

    /// Optimistic scores `⟨V⁻¹b, x̃⟩ + C √(x̃ᵀ V⁻¹ x̃)`.
    pub fn scores(&self, x: &DVector<f64>) -> Vec<f64> {
        self.arms
            .iter()
            .map(|arm| {
                let width = x.dot(&(&arm.gram_inv * x)).max(0.0).sqrt();
                arm.mean.dot(x) + self.bonus_scale * width
            })
            .collect()
    }
}

impl Policy for UcbState {
    fn name(&self) -> &str {
        "ucb"
    }

    fn num_actions(&self) -> usize {
        self.arms.len()
    }

    fn decide(&self, x: &DVector<f64>, _rng: &mut dyn RngCore) -> Result<PolicyDistribution> {
        let t = self.round + 1;
        check_dim(self.arms[0].mean.len(), x.len(), t)?;
        let k = self.arms.len();
        let best = argmax_lowest(&self.scores(x));
        Ok(PolicyDistribution::clipped(k, best, self.p0.at(t, k)))
    }

    fn update(&mut self, round: &ObservedRound) -> Result<()> {
        let d = self.arms[0].mean.len();
        check_dim(d, round.dim(), round.round_index)?;
        let x = &round.noisy_context;
        let num_actions = self.arms.len();
        let arm = self
            .arms
            .get_mut(round.action)
            .ok_or(MebError::ActionOutOfRange {
                action: round.action,
                num_actions,
            })?;
        for j in 0..d {
            for i in 0..d {
                arm.gram[(i, j)] += x[i] * x[j];
            }
            arm.xr[j] += x[j] * round.reward;
        }
        arm.gram_inv = Cholesky::new(arm.gram.clone())
            .ok_or(MebError::SingularDesign {
                action: round.action,
                condition: f64::INFINITY,
            })?
            .inverse();
        arm.mean = &arm.gram_inv * &arm.xr;
        self.round += 1;
        Ok(())
    }

    fn theta_hat(&self) -> Option<Vec<DVector<f64>>> {
        Some(self.arms.iter().map(|a| a.mean.clone()).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn fresh_state_ties_to_action_zero() {
        let s = UcbState::new(1, 2, 1.0, 1.0, MinProb::Constant(0.2)).unwrap();
        let x = DVector::from_element(1, 1.0);
        assert_eq!(s.scores(&x), vec![1.0, 1.0]);
        let d = s.decide(&x, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        assert_eq!(d.probs(), &[0.8, 0.2]);
    }

    #[test]
    fn zero_bonus_is_greedy_on_ridge_means() {
        let mut s = UcbState::new(1, 2, 1.0, 0.0, MinProb::Constant(0.1)).unwrap();
        s.update(&ObservedRound {
            noisy_context: DVector::from_element(1, 1.0),
            action: 1,
            reward: 2.0,
            propensity: 0.5,
            error_cov: DMatrix::zeros(1, 1),
            round_index: 1,
        })
        .unwrap();
        let x = DVector::from_element(1, 1.0);
        let scores = s.scores(&x);
        assert_eq!(scores[0], 0.0);
        approx::assert_relative_eq!(scores[1], 1.0, epsilon = 1e-12);
        let d = s.decide(&x, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        assert_eq!(d.probs(), &[0.1, 0.9]);
    }

    #[test]
    fn full_clipping_is_uniform() {
        let s = UcbState::new(2, 2, 1.0, 1.0, MinProb::Constant(0.5)).unwrap();
        let d = s
            .decide(&DVector::from_vec(vec![0.2, 0.7]), &mut ChaCha8Rng::seed_from_u64(0))
            .unwrap();
        assert_eq!(d.probs(), &[0.5, 0.5]);
    }
}
