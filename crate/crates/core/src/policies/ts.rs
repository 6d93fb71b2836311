use nalgebra::{Cholesky, DMatrix, DVector};
use rand::{Rng, RngCore};
use rand_distr::StandardNormal;

use super::{check_dim, Policy};
use crate::domain::{argmax_lowest, MinProb, ObservedRound, PolicyDistribution};
use crate::error::{MebError, Result};

#[derive(Debug, Clone, PartialEq)]
struct Posterior {
    // l I + Σ 1{a} x̃ x̃ᵀ
    gram: DMatrix<f64>,
    // Σ 1{a} x̃ r
    xr: DVector<f64>,
    mean: DVector<f64>,
    cov: DMatrix<f64>,
    // lower Cholesky factor of `cov`
    cov_factor: DMatrix<f64>,
}

/// Linear Thompson sampling with Gaussian priors on the noisy contexts,
/// clipped to a minimum selection probability.
#[derive(Debug, Clone, PartialEq)]
pub struct TsState {
    arms: Vec<Posterior>,
    prior_var: f64,
    reward_var: f64,
    p0: MinProb,
    round: usize,
}

fn lower_factor(cov: &DMatrix<f64>) -> DMatrix<f64> {
    match Cholesky::new(cov.clone()) {
        Some(c) => c.l(),
        None => {
            // numerically semidefinite: fall back to a symmetric square root
            let eig = nalgebra::SymmetricEigen::new(cov.clone());
            let roots = eig.eigenvalues.map(|l| l.max(0.0).sqrt());
            &eig.eigenvectors * DMatrix::from_diagonal(&roots)
        }
    }
}

impl TsState {
    /// `prior_var` is `l`, `reward_var` is `ρ`.
    pub fn new(dim: usize, num_actions: usize, prior_var: f64, reward_var: f64, p0: MinProb) -> Result<Self> {
        if !(prior_var > 0.0) || !(reward_var > 0.0) {
            return Err(MebError::ConfigInvalid("TS prior and reward variances must be > 0".into()));
        }
        if num_actions < 2 {
            return Err(MebError::ConfigInvalid("at least two actions are required".into()));
        }
        let cov = DMatrix::identity(dim, dim) * prior_var;
        let arm = Posterior {
            gram: DMatrix::identity(dim, dim) * prior_var,
            xr: DVector::zeros(dim),
            mean: DVector::zeros(dim),
            cov_factor: lower_factor(&cov),
            cov,
        };
        Ok(Self {
            arms: vec![arm; num_actions],
            prior_var,
            reward_var,
            p0,
            round: 0,
        })
    }

    pub fn posterior_mean(&self, action: usize) -> &DVector<f64> {
        &self.arms[action].mean
    }

    pub fn posterior_cov(&self, action: usize) -> &DMatrix<f64> {
        &self.arms[action].cov
    }

    pub fn prior_var(&self) -> f64 {
        self.prior_var
    }

    /// The greedy-on-sample action, without clipping.
    pub fn sample_action(&self, x: &DVector<f64>, rng: &mut dyn RngCore) -> usize {
        let d = x.len();
        let scores: Vec<f64> = self
            .arms
            .iter()
            .map(|arm| {
                let z = DVector::from_fn(d, |_, _| rng.sample::<f64, _>(StandardNormal));
                let draw = &arm.mean + &arm.cov_factor * z;
                draw.dot(x)
            })
            .collect();
        argmax_lowest(&scores)
    }
}

impl Policy for TsState {
    fn name(&self) -> &str {
        "ts"
    }

    fn num_actions(&self) -> usize {
        self.arms.len()
    }

    fn decide(&self, x: &DVector<f64>, rng: &mut dyn RngCore) -> Result<PolicyDistribution> {
        let t = self.round + 1;
        check_dim(self.arms[0].mean.len(), x.len(), t)?;
        let k = self.arms.len();
        let best = self.sample_action(x, rng);
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
        let inv = Cholesky::new(arm.gram.clone())
            .ok_or(MebError::SingularDesign {
                action: round.action,
                condition: f64::INFINITY,
            })?
            .inverse();
        arm.mean = &inv * &arm.xr;
        arm.cov = inv * self.reward_var;
        arm.cov_factor = lower_factor(&arm.cov);
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
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn round(t: usize, x: f64, a: usize, r: f64) -> ObservedRound {
        ObservedRound {
            noisy_context: DVector::from_element(1, x),
            action: a,
            reward: r,
            propensity: 0.5,
            error_cov: DMatrix::zeros(1, 1),
            round_index: t,
        }
    }

    #[test]
    fn single_update_posterior() {
        let mut s = TsState::new(1, 2, 1.0, 1.0, MinProb::Constant(0.2)).unwrap();
        let before = s.arms[1].clone();
        s.update(&round(1, 2.0, 0, 6.0)).unwrap();
        assert_relative_eq!(s.posterior_mean(0)[0], 12.0 / 5.0, epsilon = 1e-12);
        assert_relative_eq!(s.posterior_cov(0)[(0, 0)], 1.0 / 5.0, epsilon = 1e-12);
        assert_eq!(s.arms[1], before);
    }

    #[test]
    fn seeded_decisions_repeat() {
        let s = TsState::new(2, 2, 1.0, 1.0, MinProb::Constant(0.2)).unwrap();
        let x = DVector::from_vec(vec![0.3, -0.1]);
        let a: Vec<_> = {
            let mut rng = ChaCha8Rng::seed_from_u64(7);
            (0..20).map(|_| s.decide(&x, &mut rng).unwrap()).collect()
        };
        let b: Vec<_> = {
            let mut rng = ChaCha8Rng::seed_from_u64(7);
            (0..20).map(|_| s.decide(&x, &mut rng).unwrap()).collect()
        };
        assert_eq!(a, b);
    }

    #[test]
    fn collapsed_posterior_is_greedy() {
        let mut s = TsState::new(1, 2, 1.0, 1e-14, MinProb::Constant(0.1)).unwrap();
        for t in 1..=10 {
            s.update(&round(t, 1.0, (t + 1) % 2, if t % 2 == 0 { 1.0 } else { -1.0 })).unwrap();
        }
        // action 1 mean > 0 > action 0 mean
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let d = s.decide(&DVector::from_element(1, 1.0), &mut rng).unwrap();
            assert_eq!(d.probs(), &[0.1, 0.9]);
        }
    }
}
