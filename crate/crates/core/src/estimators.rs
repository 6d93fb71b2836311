//! Reward-model estimators under context measurement error.
//!
//! Every estimator is a function of per-action running sums kept in
//! [`SufficientStats`]. The batch functions over a [`History`] absorb the
//! rounds in order into fresh statistics, so the incremental path used by the
//! online policies and the batch path agree bit for bit.
//!
//! * [`rls_estimate`]: ridge regression on the noisy contexts (attenuated).
//! * [`naive_me_estimate`]: subtracts the error covariance of each taken round.
//! * [`weighted_me_estimate`]: importance-weighted moments against a
//!   data-independent reference policy, corrected by the reference-weighted
//!   error covariance. Consistent when the policy depends on the noisy context.
//! * [`weighted_me_estimate_estvar`]: same, with estimated error covariances.
//! * [`weighted_moments`]: the generic importance-weighted moment average.

use nalgebra::{DMatrix, DVector};

use crate::domain::{History, ObservedRound, ReferencePolicy, UniformReference};
use crate::error::{MebError, Result};
use crate::linalg::{self, SymSolve};

/// Which estimator a policy plugs into its decision rule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EstimatorKind {
    /// Importance-weighted measurement-error correction.
    Weighted,
    /// Unweighted per-action measurement-error correction.
    Naive,
    /// Ridge regression on the noisy contexts.
    Rls { lambda: f64 },
}

#[derive(Debug, Clone, PartialEq)]
struct ActionStats {
    taken: usize,
    // Σ_τ w_τ 1{a_τ=a} x̃ x̃ᵀ
    weighted_gram: DMatrix<f64>,
    // Σ_τ w_τ 1{a_τ=a} x̃ r
    weighted_xr: DVector<f64>,
    // Σ_τ π^nd_τ(a) Σ_{e,τ}, over every round
    weighted_errcov: DMatrix<f64>,
    // Σ_τ 1{a_τ=a} x̃ x̃ᵀ
    gram: DMatrix<f64>,
    // Σ_τ 1{a_τ=a} x̃ r
    xr: DVector<f64>,
    // Σ_τ 1{a_τ=a} (x̃ x̃ᵀ - Σ_{e,τ})
    naive_gram: DMatrix<f64>,
}

impl ActionStats {
    fn zeros(d: usize) -> Self {
        Self {
            taken: 0,
            weighted_gram: DMatrix::zeros(d, d),
            weighted_xr: DVector::zeros(d),
            weighted_errcov: DMatrix::zeros(d, d),
            gram: DMatrix::zeros(d, d),
            xr: DVector::zeros(d),
            naive_gram: DMatrix::zeros(d, d),
        }
    }
}

/// Running per-action sums behind every estimator.
#[derive(Debug, Clone, PartialEq)]
pub struct SufficientStats {
    dim: usize,
    count: usize,
    actions: Vec<ActionStats>,
}

/// Estimates for every action plus conditioning diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorReport {
    pub theta_hat: Vec<DVector<f64>>,
    pub condition_number: Vec<f64>,
    pub regularizer_used: Vec<f64>,
}

impl SufficientStats {
    pub fn new(dim: usize, num_actions: usize) -> Self {
        Self {
            dim,
            count: 0,
            actions: (0..num_actions).map(|_| ActionStats::zeros(dim)).collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_actions(&self) -> usize {
        self.actions.len()
    }

    /// Number of rounds absorbed (`t`).
    pub fn count(&self) -> usize {
        self.count
    }

    /// Number of absorbed rounds that took `action`.
    pub fn taken(&self, action: usize) -> usize {
        self.actions[action].taken
    }

    pub fn weighted_gram(&self, action: usize) -> &DMatrix<f64> {
        &self.actions[action].weighted_gram
    }

    pub fn weighted_xr(&self, action: usize) -> &DVector<f64> {
        &self.actions[action].weighted_xr
    }

    pub fn weighted_errcov(&self, action: usize) -> &DMatrix<f64> {
        &self.actions[action].weighted_errcov
    }

    /// Adds one round to the running sums.
    pub fn absorb_round(
        &mut self,
        round: &ObservedRound,
        reference: &dyn ReferencePolicy,
    ) -> Result<()> {
        let d = self.dim;
        let t = round.round_index;
        if round.dim() != d {
            return Err(MebError::DimensionMismatch {
                round: t,
                expected: d,
                found: round.dim(),
            });
        }
        if round.error_cov.nrows() != d || round.error_cov.ncols() != d {
            return Err(MebError::DimensionMismatch {
                round: t,
                expected: d,
                found: round.error_cov.nrows(),
            });
        }
        if round.action >= self.actions.len() {
            return Err(MebError::ActionOutOfRange {
                action: round.action,
                num_actions: self.actions.len(),
            });
        }
        if !(round.propensity > 0.0) {
            return Err(MebError::NonPositivePropensity {
                round: t,
                propensity: round.propensity,
            });
        }

        let x = &round.noisy_context;
        let r = round.reward;
        let sigma = &round.error_cov;
        let w = reference.prob(t, round.action) / round.propensity;

        for (a, st) in self.actions.iter_mut().enumerate() {
            let p = reference.prob(t, a);
            for j in 0..d {
                for i in 0..d {
                    st.weighted_errcov[(i, j)] += p * sigma[(i, j)];
                }
            }
        }

        let st = &mut self.actions[round.action];
        st.taken += 1;
        for j in 0..d {
            for i in 0..d {
                let xx = x[i] * x[j];
                st.weighted_gram[(i, j)] += w * xx;
                st.gram[(i, j)] += xx;
                st.naive_gram[(i, j)] += xx - sigma[(i, j)];
            }
            st.weighted_xr[j] += w * x[j] * r;
            st.xr[j] += x[j] * r;
        }
        self.count += 1;
        Ok(())
    }

    /// Functional form of [`absorb_round`](Self::absorb_round).
    pub fn absorbed(mut self, round: &ObservedRound, reference: &dyn ReferencePolicy) -> Result<Self> {
        self.absorb_round(round, reference)?;
        Ok(self)
    }

    /// The error-corrected weighted design `Σ̂_{x̃,a} − (1/t) Σ π^nd(a) Σ_e` and
    /// moment vector `Σ̂_{x̃,r,a}`.
    pub fn weighted_system(&self, action: usize) -> (DMatrix<f64>, DVector<f64>) {
        let st = &self.actions[action];
        let t = self.count as f64;
        let d = self.dim;
        let m = DMatrix::from_fn(d, d, |i, j| {
            st.weighted_gram[(i, j)] / t - st.weighted_errcov[(i, j)] / t
        });
        let v = DVector::from_fn(d, |i, _| st.weighted_xr[i] / t);
        (m, v)
    }

    fn solve(
        &self,
        action: usize,
        kind: EstimatorKind,
        fallback: bool,
    ) -> Result<SymSolve> {
        if action >= self.actions.len() {
            return Err(MebError::ActionOutOfRange {
                action,
                num_actions: self.actions.len(),
            });
        }
        let st = &self.actions[action];
        let (m, v) = match kind {
            EstimatorKind::Weighted => {
                if st.taken == 0 {
                    return Err(MebError::NoDataForAction { action });
                }
                self.weighted_system(action)
            }
            EstimatorKind::Naive => {
                if st.taken == 0 {
                    return Err(MebError::NoDataForAction { action });
                }
                (st.naive_gram.clone(), st.xr.clone())
            }
            EstimatorKind::Rls { lambda } => {
                if !(lambda >= 0.0) {
                    return Err(MebError::ConfigInvalid(format!("ridge lambda {lambda} < 0")));
                }
                let m = DMatrix::from_fn(self.dim, self.dim, |i, j| {
                    if i == j {
                        lambda + st.gram[(i, j)]
                    } else {
                        st.gram[(i, j)]
                    }
                });
                (m, st.xr.clone())
            }
        };
        let solved = if fallback {
            linalg::solve_symmetric_regularized(&m, &v)
        } else {
            linalg::solve_symmetric(&m, &v)
        };
        solved.map_err(|s| MebError::SingularDesign {
            action,
            condition: s.condition,
        })
    }

    /// Estimate for one action; refuses ill-conditioned designs.
    pub fn estimate(&self, action: usize, kind: EstimatorKind) -> Result<DVector<f64>> {
        self.solve(action, kind, false).map(|s| s.solution)
    }

    /// Estimates for every action, optionally falling back to a small ridge
    /// when a design is ill-conditioned.
    pub fn report(&self, kind: EstimatorKind, fallback: bool) -> Result<EstimatorReport> {
        let mut rep = EstimatorReport {
            theta_hat: Vec::with_capacity(self.actions.len()),
            condition_number: Vec::with_capacity(self.actions.len()),
            regularizer_used: Vec::with_capacity(self.actions.len()),
        };
        for a in 0..self.actions.len() {
            let s = self.solve(a, kind, fallback)?;
            rep.theta_hat.push(s.solution);
            rep.condition_number.push(s.condition);
            rep.regularizer_used.push(s.regularizer);
        }
        Ok(rep)
    }
}

fn stats_from_history(history: &History, reference: &dyn ReferencePolicy) -> Result<SufficientStats> {
    let d = history.dim().unwrap_or(0);
    let mut stats = SufficientStats::new(d, history.num_actions);
    for r in &history.rounds {
        stats.absorb_round(r, reference)?;
    }
    Ok(stats)
}

fn history_dim_or(history: &History, fallback: usize) -> usize {
    history.dim().unwrap_or(fallback)
}

/// Ridge estimate `(λI + Σ 1{a} x̃x̃ᵀ)⁻¹ Σ 1{a} x̃ r` on the noisy contexts.
///
/// `dim` is only consulted for an empty history.
pub fn rls_estimate(history: &History, action: usize, lambda: f64, dim: usize) -> Result<DVector<f64>> {
    if history.is_empty() {
        if !(lambda > 0.0) {
            return Err(MebError::NoDataForAction { action });
        }
        return Ok(DVector::zeros(history_dim_or(history, dim)));
    }
    let stats = stats_from_history(history, &UniformReference::new(history.num_actions))?;
    stats.estimate(action, EstimatorKind::Rls { lambda })
}

/// `(Σ 1{a}(x̃x̃ᵀ − Σ_e))⁻¹ Σ 1{a} x̃ r`.
pub fn naive_me_estimate(history: &History, action: usize) -> Result<DVector<f64>> {
    if history.is_empty() {
        return Err(MebError::NoDataForAction { action });
    }
    let stats = stats_from_history(history, &UniformReference::new(history.num_actions))?;
    stats.estimate(action, EstimatorKind::Naive)
}

/// Importance-weighted measurement-error estimate against `reference`.
pub fn weighted_me_estimate(
    history: &History,
    action: usize,
    reference: &dyn ReferencePolicy,
) -> Result<DVector<f64>> {
    if history.is_empty() {
        return Err(MebError::NoDataForAction { action });
    }
    let stats = stats_from_history(history, reference)?;
    stats.estimate(action, EstimatorKind::Weighted)
}

/// Result of [`weighted_me_estimate_estvar`].
#[derive(Debug, Clone, PartialEq)]
pub struct EstVarEstimate {
    pub theta: DVector<f64>,
    /// `‖(1/t) Σ π^nd_τ(a)(Σ̂_{e,τ} − Σ_{e,τ})‖₂`, when the true covariances are known.
    pub delta_norm: Option<f64>,
}

/// Weighted estimate where each round carries an estimated error covariance.
///
/// If `true_covs` (one per round, in order) is supplied, also reports the
/// norm of the reference-weighted average covariance estimation error.
pub fn weighted_me_estimate_estvar(
    history: &History,
    action: usize,
    reference: &dyn ReferencePolicy,
    true_covs: Option<&[DMatrix<f64>]>,
) -> Result<EstVarEstimate> {
    let theta = weighted_me_estimate(history, action, reference)?;
    let delta_norm = match true_covs {
        None => None,
        Some(covs) => {
            if covs.len() != history.len() {
                return Err(MebError::DimensionMismatch {
                    round: 0,
                    expected: history.len(),
                    found: covs.len(),
                });
            }
            let d = theta.len();
            let mut delta = DMatrix::<f64>::zeros(d, d);
            for (r, sigma) in history.rounds.iter().zip(covs) {
                let p = reference.prob(r.round_index, action);
                delta += (&r.error_cov - sigma) * p;
            }
            delta /= history.len() as f64;
            Some(linalg::symmetric_operator_norm(&delta))
        }
    };
    Ok(EstVarEstimate { theta, delta_norm })
}

/// A moment function `f(x̃, r)`.
pub type MomentFn<'a> = &'a dyn Fn(&DVector<f64>, f64) -> f64;

/// `(1/T) Σ_t W_t f_j(x̃_t, r_t)` with `W_t = 1{A_t=a₀} π^nd(A_t)/π_t(A_t)`.
pub fn weighted_moments(
    history: &History,
    target_action: usize,
    reference: &dyn ReferencePolicy,
    moment_fns: &[MomentFn<'_>],
) -> Result<Vec<f64>> {
    let mut sums = vec![0.0; moment_fns.len()];
    for r in &history.rounds {
        if !(r.propensity > 0.0) {
            return Err(MebError::NonPositivePropensity {
                round: r.round_index,
                propensity: r.propensity,
            });
        }
        if r.action != target_action {
            continue;
        }
        let w = reference.prob(r.round_index, r.action) / r.propensity;
        for (s, f) in sums.iter_mut().zip(moment_fns) {
            *s += w * f(&r.noisy_context, r.reward);
        }
    }
    if !history.is_empty() {
        let n = history.len() as f64;
        for s in &mut sums {
            *s /= n;
        }
    }
    Ok(sums)
}
