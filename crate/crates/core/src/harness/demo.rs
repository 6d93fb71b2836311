//! The small counterexample constructions, packaged as reproducible runs.

use rand::Rng;

use super::config::{AlgorithmSpec, ExperimentConfig, Setting};
use super::runner::{run_experiment, RunResult};
use crate::domain::{ObservedRound, UniformReference};
use crate::environments::{stream, EnvSpec, Environment, NaiveFailureEnv, RngStreams, ThresholdPolicy};
use crate::error::{MebError, Result};
use crate::estimators::{EstimatorKind, SufficientStats};

/// Estimates of `θ0` under the fixed threshold policy at each checkpoint.
#[derive(Debug, Clone, PartialEq)]
pub struct NaiveFailureRun {
    pub threshold: f64,
    pub seed: u64,
    pub checkpoints: Vec<usize>,
    pub weighted: Vec<f64>,
    pub naive: Vec<f64>,
}

/// Plays the threshold policy on the `x ≡ 1` environment for `max(checkpoints)`
/// rounds, recording both estimates of `θ0 = -1` at each checkpoint.
pub fn naive_failure_run(threshold: f64, seed: u64, checkpoints: &[usize]) -> Result<NaiveFailureRun> {
    let mut sorted = checkpoints.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    let horizon = sorted.last().copied().unwrap_or(0);
    let streams = RngStreams::new(seed);
    let mut env = NaiveFailureEnv::new(streams);
    let mut sample_rng = streams.stream(stream::POLICY_SAMPLE);
    let policy = ThresholdPolicy::new(threshold);
    let reference = UniformReference::new(2);
    let mut stats = SufficientStats::new(1, 2);
    let (mut weighted, mut naive) = (Vec::new(), Vec::new());

    for t in 1..=horizon {
        let step = env.step(t);
        let dist = policy.distribution(step.noisy_context[0]);
        let action = dist.sample_with(sample_rng.random::<f64>());
        stats.absorb_round(
            &ObservedRound {
                reward: step.reward(action),
                propensity: dist.prob(action),
                noisy_context: step.noisy_context,
                error_cov: step.error_cov,
                action,
                round_index: t,
            },
            &reference,
        )?;
        if sorted.binary_search(&t).is_ok() {
            weighted.push(stats.estimate(0, EstimatorKind::Weighted)?[0]);
            naive.push(stats.estimate(0, EstimatorKind::Naive)?[0]);
        }
    }
    Ok(NaiveFailureRun {
        threshold,
        seed,
        checkpoints: sorted,
        weighted,
        naive,
    })
}

/// Population limit of the naive estimate of `θ0` under the threshold policy.
///
/// With `x̃ ~ U(-1, 3)` and `π(0 | x̃) = 2/3` below the threshold, `1/3` above,
/// the limit is `-E[π0 x̃] / E[π0 (x̃² - 4/3)]`.
pub fn naive_failure_limit(threshold: f64) -> f64 {
    let c = threshold.clamp(-1.0, 3.0);
    let int1 = |a: f64, b: f64| (b * b - a * a) / 2.0;
    let int2 = |a: f64, b: f64| (b * b * b - a * a * a) / 3.0 - NaiveFailureEnv::ERROR_VAR * (b - a);
    let num = 2.0 / 3.0 * int1(-1.0, c) + 1.0 / 3.0 * int1(c, 3.0);
    let den = 2.0 / 3.0 * int2(-1.0, c) + 1.0 / 3.0 * int2(c, 3.0);
    -num / den
}

fn demo_config(env: EnvSpec, algorithm: AlgorithmSpec, t: usize, n_exp: usize, base_seed: u64) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::new(env, algorithm, t);
    cfg.n_exp = n_exp;
    cfg.base_seed = base_seed;
    cfg.schedule.setting = Setting::Standard;
    cfg
}

/// Per-seed cumulative standard regret at `T/2` and `T`.
#[derive(Debug, Clone, PartialEq)]
pub struct RegretGrowth {
    pub algorithm: String,
    pub horizon: usize,
    pub at_half: Vec<f64>,
    pub at_end: Vec<f64>,
}

impl RegretGrowth {
    fn from_result(res: &RunResult) -> Self {
        let t = res.config.t;
        Self {
            algorithm: res.config.algorithm.name().to_string(),
            horizon: t,
            at_half: res.replications.iter().map(|r| r.cumulative_standard[t / 2 - 1]).collect(),
            at_end: res.replications.iter().map(|r| r.cumulative_standard[t - 1]).collect(),
        }
    }

    pub fn median_end(&self) -> f64 {
        median(&self.at_end)
    }

    /// Median over seeds of `regret(T) / regret(T/2)`.
    pub fn median_growth_ratio(&self) -> f64 {
        let ratios: Vec<f64> = self.at_end.iter().zip(&self.at_half).map(|(e, h)| e / h).collect();
        median(&ratios)
    }
}

pub fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// UCB, TS and MEB on the ridge-failure construction, standard setting.
pub fn rls_failure(t: usize, n_exp: usize, base_seed: u64) -> Result<Vec<RegretGrowth>> {
    if t < 2 {
        return Err(MebError::ConfigInvalid("rls-failure demo needs t >= 2".into()));
    }
    let env = EnvSpec::preset("rls-failure")?;
    ["ucb", "ts", "meb"]
        .into_iter()
        .map(|name| {
            let cfg = demo_config(env.clone(), AlgorithmSpec::preset(name)?, t, n_exp, base_seed);
            run_experiment(&cfg).map(|r| RegretGrowth::from_result(&r))
        })
        .collect()
}

/// MEB on the construction where the noisy context hides the optimal action.
pub fn sign_flip(t: usize, n_exp: usize, base_seed: u64) -> Result<RunResult> {
    let cfg = demo_config(EnvSpec::SignFlip, AlgorithmSpec::Meb, t, n_exp, base_seed);
    run_experiment(&cfg)
}

/// Slope of the mean cumulative standard regret, `regret(T) / T`.
pub fn standard_regret_slope(res: &RunResult) -> f64 {
    res.final_round().std_regret_mean / res.rounds.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn naive_limit_matches_hand_value() {
        // threshold 0.5: -0.30208.. / 0.19791..
        approx::assert_relative_eq!(naive_failure_limit(0.5), -0.302083333 / 0.197916667, epsilon = 1e-6);
    }

    #[test]
    fn median_even_and_odd() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
    }
}
