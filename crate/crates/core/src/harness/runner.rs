use rand::Rng;
use rayon::prelude::*;

use super::config::{AlgorithmSpec, ExperimentConfig};
use crate::domain::{ObservedRound, PolicyDistribution};
use crate::environments::{estvar_feed, stream, RngStreams, ThresholdPolicy};
use crate::error::{MebError, Result};
use crate::estimators::EstimatorKind;
use crate::evaluation::{clipped_benchmark, standard_benchmark, RegretLedger};
use crate::policies::{MebState, Policy, TsState, UcbState};

/// Environment variable capping replication parallelism; `0` runs sequentially.
pub const THREADS_ENV: &str = "MEB_THREADS";

/// Per-round series of one replication.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplicationTrace {
    pub seed: u64,
    pub cumulative_standard: Vec<f64>,
    pub cumulative_clipped: Vec<f64>,
    /// `max_a ‖θ̂_a − θ*_a‖₂`, NaN when the algorithm keeps no estimate.
    pub max_est_error: Vec<f64>,
    pub fallbacks: Vec<usize>,
}

impl ReplicationTrace {
    pub fn horizon(&self) -> usize {
        self.cumulative_standard.len()
    }

    /// Cumulative clipped-benchmark regret over `T`.
    pub fn average_clipped(&self) -> f64 {
        self.cumulative_clipped.last().map_or(0.0, |c| c / self.horizon() as f64)
    }

    pub fn average_standard(&self) -> f64 {
        self.cumulative_standard.last().map_or(0.0, |c| c / self.horizon() as f64)
    }
}

/// Per-round mean and sample standard deviation over replications.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundAggregate {
    pub std_regret_mean: f64,
    pub std_regret_sd: f64,
    pub clip_regret_mean: f64,
    pub clip_regret_sd: f64,
    /// Mean of cumulative clipped regret divided by `t`.
    pub avg_regret: f64,
    pub est_err_mean: f64,
    pub est_err_sd: f64,
    pub fallbacks: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub config: ExperimentConfig,
    pub config_hash: String,
    pub seeds: Vec<u64>,
    /// The `context_scale` applied to what policies observe.
    pub normalization: f64,
    pub violates_contextual_assumption: bool,
    /// Index `t - 1`.
    pub rounds: Vec<RoundAggregate>,
    pub replications: Vec<ReplicationTrace>,
}

impl RunResult {
    /// Average clipped regret at `T`, averaged over replications.
    pub fn average_regret(&self) -> f64 {
        self.rounds.last().map_or(0.0, |r| r.avg_regret)
    }

    pub fn final_round(&self) -> &RoundAggregate {
        self.rounds.last().expect("non-empty run")
    }
}

/// Builds the configured policy for an environment of the given shape.
pub fn build_policy(config: &ExperimentConfig, dim: usize, num_actions: usize) -> Result<Box<dyn Policy>> {
    let schedule = config.exploration_schedule();
    let noise = config.env.reward_noise_var();
    // TS/UCB default to ρ = C = σ_η²; a noiseless environment still needs ρ > 0
    let noise_default = if noise > 0.0 { noise } else { 1e-6 };
    Ok(match &config.algorithm {
        AlgorithmSpec::Meb => Box::new(MebState::new(dim, num_actions, schedule, EstimatorKind::Weighted)?),
        AlgorithmSpec::MebNaive => Box::new(MebState::new(dim, num_actions, schedule, EstimatorKind::Naive)?),
        AlgorithmSpec::RlsMeb { lambda } => Box::new(MebState::new(
            dim,
            num_actions,
            schedule,
            EstimatorKind::Rls { lambda: *lambda },
        )?),
        AlgorithmSpec::Ts { prior_var, reward_var } => Box::new(TsState::new(
            dim,
            num_actions,
            *prior_var,
            reward_var.unwrap_or(noise_default),
            config.schedule.min_prob(),
        )?),
        AlgorithmSpec::Ucb { regularizer, bonus_scale } => Box::new(UcbState::new(
            dim,
            num_actions,
            *regularizer,
            bonus_scale.unwrap_or(noise),
            config.schedule.min_prob(),
        )?),
        AlgorithmSpec::Threshold { threshold } => Box::new(ThresholdPolicy::new(*threshold)),
        AlgorithmSpec::ClippedOracle => {
            return Err(MebError::ConfigInvalid("the clipped oracle is not a policy".into()))
        }
    })
}

/// Runs replication `index` of `config`.
pub fn run_replication(config: &ExperimentConfig, index: usize) -> Result<ReplicationTrace> {
    let seed = config.base_seed.wrapping_add(index as u64);
    run_seeded(config, seed).map_err(|e| MebError::ReplicationFailed {
        replicate: index,
        seed,
        source: Box::new(e),
    })
}

fn run_seeded(config: &ExperimentConfig, seed: u64) -> Result<ReplicationTrace> {
    let streams = RngStreams::new(seed);
    let mut env = config.env.build(streams)?;
    let (d, k) = (env.dim(), env.num_actions());
    let schedule = config.exploration_schedule();
    let scale = config.context_scale;
    let mut policy = match config.algorithm {
        AlgorithmSpec::ClippedOracle => None,
        _ => Some(build_policy(config, d, k)?),
    };
    let mut sample_rng = streams.stream(stream::POLICY_SAMPLE);
    let mut internal_rng = streams.stream(stream::POLICY_INTERNAL);
    let mut estvar_rng = streams.stream(stream::ESTVAR);

    let horizon = config.t;
    let mut ledger = RegretLedger::with_capacity(horizon);
    let mut max_est_error = Vec::with_capacity(horizon);
    let mut fallbacks = Vec::with_capacity(horizon);

    for t in 1..=horizon {
        let step = env.step(t);
        let model = env.reward_model();
        let p0 = schedule.p0(t, k);
        let std_bench = standard_benchmark(model, &step.true_context);
        let clip_bench = clipped_benchmark(model, &step.true_context, p0);

        let observed_x = &step.noisy_context * scale;
        let mut observed_cov = &step.error_cov * (scale * scale);
        if let Some(c) = config.estvar_scale {
            observed_cov = estvar_feed(&observed_cov, t, &mut estvar_rng, c);
        }

        let dist: PolicyDistribution = match policy.as_deref() {
            Some(p) => p.decide(&observed_x, &mut internal_rng)?,
            None => clip_bench.clone(),
        };
        let action = dist.sample_with(sample_rng.random::<f64>());
        let reward = step.reward(action);

        // estimates refer to the scaled context, so θ̂·s is comparable to θ*
        let theta_hat = policy
            .as_deref()
            .and_then(|p| p.theta_hat())
            .map(|th| th.into_iter().map(|v| v * scale).collect::<Vec<_>>());
        ledger.record_round(&std_bench, &clip_bench, &dist, model, &step.true_context, theta_hat.as_deref())?;
        max_est_error.push(
            ledger
                .estimation_errors
                .last()
                .and_then(|e| e.as_ref())
                .map_or(f64::NAN, |v| v.iter().copied().fold(0.0, f64::max)),
        );

        if let Some(p) = policy.as_mut() {
            p.update(&ObservedRound {
                noisy_context: observed_x,
                action,
                reward,
                propensity: dist.prob(action),
                error_cov: observed_cov,
                round_index: t,
            })?;
        }
        env.observe_action(action);
        fallbacks.push(policy.as_deref().map_or(0, |p| p.singular_fallbacks()));
    }

    let RegretLedger {
        cumulative_standard,
        cumulative_clipped,
        ..
    } = ledger;
    for v in cumulative_standard.iter().chain(&cumulative_clipped) {
        if !v.is_finite() {
            return Err(MebError::InvalidDistribution("non-finite regret".into()));
        }
    }
    Ok(ReplicationTrace {
        seed,
        cumulative_standard,
        cumulative_clipped,
        max_est_error,
        fallbacks,
    })
}

fn thread_cap() -> Option<usize> {
    std::env::var(THREADS_ENV).ok().and_then(|v| v.trim().parse().ok())
}

fn mean_sd(values: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = values.clone().count();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.clone().sum::<f64>() / n as f64;
    if n < 2 {
        return (mean, 0.0);
    }
    let ss: f64 = values.map(|v| (v - mean) * (v - mean)).sum();
    (mean, (ss / (n - 1) as f64).sqrt())
}

/// Aggregates replication traces in replicate order.
pub fn aggregate(traces: &[ReplicationTrace]) -> Vec<RoundAggregate> {
    let horizon = traces.first().map_or(0, ReplicationTrace::horizon);
    (0..horizon)
        .map(|i| {
            let (std_regret_mean, std_regret_sd) = mean_sd(traces.iter().map(|tr| tr.cumulative_standard[i]));
            let (clip_regret_mean, clip_regret_sd) = mean_sd(traces.iter().map(|tr| tr.cumulative_clipped[i]));
            let (est_err_mean, est_err_sd) = mean_sd(traces.iter().map(|tr| tr.max_est_error[i]));
            let fallbacks = traces.iter().map(|tr| tr.fallbacks[i] as f64).sum::<f64>() / traces.len() as f64;
            RoundAggregate {
                std_regret_mean,
                std_regret_sd,
                clip_regret_mean,
                clip_regret_sd,
                avg_regret: clip_regret_mean / (i + 1) as f64,
                est_err_mean,
                est_err_sd,
                fallbacks,
            }
        })
        .collect()
}

/// Runs every replication of `config` and aggregates them.
///
/// Replications run on a rayon pool capped by `MEB_THREADS` (`0` means
/// sequential). Results are collected and reduced in replicate order, so the
/// output does not depend on the thread count.
pub fn run_experiment(config: &ExperimentConfig) -> Result<RunResult> {
    config.validate()?;
    let n = config.n_exp;
    let traces: Vec<ReplicationTrace> = match thread_cap() {
        Some(0) => (0..n).map(|i| run_replication(config, i)).collect::<Result<_>>()?,
        Some(cap) => rayon::ThreadPoolBuilder::new()
            .num_threads(cap)
            .build()
            .map_err(|e| MebError::ConfigInvalid(e.to_string()))?
            .install(|| (0..n).into_par_iter().map(|i| run_replication(config, i)).collect::<Result<_>>())?,
        None => (0..n).into_par_iter().map(|i| run_replication(config, i)).collect::<Result<_>>()?,
    };
    let violates = config
        .env
        .build(RngStreams::new(config.base_seed))?
        .violates_contextual_assumption();
    Ok(RunResult {
        rounds: aggregate(&traces),
        config_hash: config.hash(),
        seeds: config.seeds(),
        normalization: config.context_scale,
        violates_contextual_assumption: violates,
        replications: traces,
        config: config.clone(),
    })
}
