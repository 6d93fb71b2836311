//! Property suites runnable from the command line.
//!
//! Each check draws its own randomized cases from a fixed seed and reports a
//! count of violations. The integration tests cover the same ground with
//! independent oracles; these exist so a built binary can check itself.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::config::{AlgorithmSpec, ExperimentConfig};
use super::output::emit_csv;
use super::runner::run_experiment;
use crate::domain::{argmax_lowest, ExplorationSchedule, History, MinProb, ObservedRound, UniformReference, UpdateTimes};
use crate::environments::EnvSpec;
use crate::error::Result;
use crate::estimators::{naive_me_estimate, rls_estimate, weighted_me_estimate, weighted_moments, EstimatorKind};
use crate::policies::{MebState, Policy};

#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl CheckOutcome {
    fn new(name: &'static str, passed: bool, detail: String) -> Self {
        Self { name, passed, detail }
    }
}

fn gaussian_vec(rng: &mut ChaCha8Rng, d: usize) -> DVector<f64> {
    DVector::from_fn(d, |_, _| rng.sample(StandardNormal))
}

fn random_psd(rng: &mut ChaCha8Rng, d: usize, scale: f64) -> DMatrix<f64> {
    let a = DMatrix::from_fn(d, d, |_, _| rng.sample::<f64, _>(StandardNormal));
    &a * a.transpose() * scale
}

/// Random two-action history; `propensity` overrides the drawn propensities.
pub fn random_history(
    rng: &mut ChaCha8Rng,
    d: usize,
    t: usize,
    noise_scale: f64,
    propensity: Option<f64>,
) -> History {
    let mut h = History::new(2);
    for i in 1..=t {
        let action = rng.random_range(0..2);
        h.push(ObservedRound {
            noisy_context: gaussian_vec(rng, d),
            action,
            reward: rng.sample(StandardNormal),
            propensity: propensity.unwrap_or_else(|| rng.random_range(0.1..0.9)),
            error_cov: random_psd(rng, d, noise_scale),
            round_index: i,
        });
    }
    h
}

fn prefix(h: &History, t: usize) -> History {
    History::from_rounds(h.num_actions, h.rounds[..t].to_vec())
}

fn rel_close(a: &DVector<f64>, b: &DVector<f64>, tol: f64) -> bool {
    (a - b).norm() <= tol * (1.0 + b.norm())
}

/// The online policy's estimates equal the batch estimator on every prefix.
pub fn check_incremental_matches_batch(cases: usize, seed: u64) -> Result<CheckOutcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut compared, mut mismatches) = (0usize, 0usize);
    for _ in 0..cases {
        let d = rng.random_range(1..=3);
        let t = rng.random_range(1..=50);
        let h = random_history(&mut rng, d, t, 0.1, None);
        let schedule = ExplorationSchedule::new(0, MinProb::Constant(0.1), UpdateTimes::Every);
        let mut meb = MebState::new(d, 2, schedule, EstimatorKind::Weighted)?;
        for (i, r) in h.rounds.iter().enumerate() {
            meb.update(r)?;
            let p = prefix(&h, i + 1);
            let online = meb.theta_hat().expect("meb keeps estimates");
            for (a, th) in online.iter().enumerate() {
                if let Ok(batch) = weighted_me_estimate(&p, a, &UniformReference::new(2)) {
                    compared += 1;
                    if &batch != th {
                        mismatches += 1;
                    }
                }
            }
        }
    }
    Ok(CheckOutcome::new(
        "incremental-vs-batch",
        mismatches == 0 && compared > 0,
        format!("{mismatches} mismatches in {compared} comparisons"),
    ))
}

/// Weighted reduces to naive when propensities equal the reference, the error
/// covariance is constant and each action was taken a reference share of the
/// rounds; to ridge-free least squares when the error covariance vanishes.
pub fn check_reductions(cases: usize, seed: u64) -> Result<CheckOutcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut failures = 0usize;
    let mut compared = 0usize;
    for _ in 0..cases {
        let d = rng.random_range(1..=3);
        let half = rng.random_range(4..=25);
        let mut h = random_history(&mut rng, d, 2 * half, 0.1, Some(0.5));
        // balanced actions and a constant Σe, so Σ_τ π^nd Σe = n_a Σe
        let sigma = random_psd(&mut rng, d, 0.1);
        for (i, r) in h.rounds.iter_mut().enumerate() {
            r.action = i % 2;
            r.error_cov = sigma.clone();
        }
        let mut h0 = h.clone();
        for r in &mut h0.rounds {
            r.error_cov = DMatrix::zeros(d, d);
        }
        for a in 0..2 {
            if let (Ok(w), Ok(n)) = (weighted_me_estimate(&h, a, &UniformReference::new(2)), naive_me_estimate(&h, a)) {
                compared += 1;
                failures += usize::from(!rel_close(&w, &n, 1e-8));
            }
            if let (Ok(w), Ok(r)) = (weighted_me_estimate(&h0, a, &UniformReference::new(2)), rls_estimate(&h0, a, 0.0, d)) {
                compared += 1;
                failures += usize::from(!rel_close(&w, &r, 1e-8));
            }
        }
    }
    Ok(CheckOutcome::new(
        "estimator-reductions",
        failures == 0 && compared > 0,
        format!("{failures} failures in {compared} comparisons"),
    ))
}

/// A context error admissible for a two-action gap never flips the argmax.
pub fn check_argmax_invariance(cases: usize, seed: u64) -> CheckOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut violations = 0usize;
    for _ in 0..cases {
        let d = rng.random_range(1..=6);
        let rho: f64 = rng.random_range(0.0..0.99);
        let th0 = gaussian_vec(&mut rng, d);
        let th1 = gaussian_vec(&mut rng, d);
        let x = gaussian_vec(&mut rng, d);
        let delta = &th1 - &th0;
        let gap = delta.dot(&x);
        let mut eps = gaussian_vec(&mut rng, d);
        // rescale so that |<δθ, ε>| <= ρ |<δθ, x>|
        let proj = delta.dot(&eps);
        if proj.abs() > 0.0 {
            let u: f64 = rng.random();
            eps *= u * rho * gap.abs() / proj.abs();
        }
        let clean = argmax_lowest(&[th0.dot(&x), th1.dot(&x)]);
        let xn = &x + &eps;
        let noisy = argmax_lowest(&[th0.dot(&xn), th1.dot(&xn)]);
        if gap != 0.0 && clean != noisy {
            violations += 1;
        }
    }
    CheckOutcome::new(
        "argmax-invariance",
        violations == 0,
        format!("{violations} violations in {cases} triples"),
    )
}

/// Entrywise Monte Carlo check of `E[w 1{A=a} x̃x̃ᵀ] = π^nd(a)(xxᵀ + Σe)`
/// under a policy that depends on `x̃`.
pub fn check_moment_identity(draws: usize, seed: u64) -> Result<CheckOutcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = 2;
    let x = DVector::from_vec(vec![0.7, -0.4]);
    let sigma = DMatrix::from_row_slice(2, 2, &[0.5, 0.1, 0.1, 0.3]);
    let chol = sigma.clone().cholesky().expect("positive definite").l();
    let mut h = History::new(2);
    for t in 1..=draws {
        let z = gaussian_vec(&mut rng, d);
        let xt = &x + &chol * z;
        // action 1 likelier when the first coordinate is large
        let p1 = if xt[0] > 0.5 { 0.8 } else { 0.3 };
        let action = usize::from(rng.random::<f64>() < p1);
        let propensity = if action == 1 { p1 } else { 1.0 - p1 };
        h.push(ObservedRound {
            noisy_context: xt,
            action,
            reward: 0.0,
            propensity,
            error_cov: sigma.clone(),
            round_index: t,
        });
    }
    let reference = UniformReference::new(2);
    let target = (&x * x.transpose() + &sigma) * 0.5;
    let mut worst: f64 = 0.0;
    for a in 0..2 {
        for i in 0..d {
            for j in i..d {
                let f = move |v: &DVector<f64>, _r: f64| v[i] * v[j];
                let g = move |v: &DVector<f64>, _r: f64| (v[i] * v[j]).powi(2);
                let m = weighted_moments(&h, a, &reference, &[&f])?[0];
                // second moment of w 1{A=a} x̃_i x̃_j, for the standard error
                let mut sq = 0.0;
                for r in &h.rounds {
                    if r.action == a {
                        let w = 0.5 / r.propensity;
                        sq += w * w * g(&r.noisy_context, r.reward);
                    }
                }
                let n = draws as f64;
                let var = (sq / n - m * m).max(0.0);
                let se = (var / n).sqrt();
                worst = worst.max((m - target[(i, j)]).abs() / se);
            }
        }
    }
    Ok(CheckOutcome::new(
        "moment-identity",
        worst <= 4.0,
        format!("largest deviation {worst:.2} standard errors at N = {draws}"),
    ))
}

/// Same config and seed give byte-identical CSV output.
pub fn check_determinism(seed: u64) -> Result<CheckOutcome> {
    let mut cfg = ExperimentConfig::new(EnvSpec::preset("synthetic")?, AlgorithmSpec::Meb, 300);
    cfg.n_exp = 3;
    cfg.base_seed = seed;
    cfg.schedule.warmup = Some(20);
    let dir = std::env::temp_dir().join(format!("meb-selftest-{}-{seed}", std::process::id()));
    std::fs::create_dir_all(&dir)?;
    let (a, b) = (dir.join("a.csv"), dir.join("b.csv"));
    emit_csv(&run_experiment(&cfg)?, &a, 1)?;
    emit_csv(&run_experiment(&cfg)?, &b, 1)?;
    let same = std::fs::read(&a)? == std::fs::read(&b)?;
    std::fs::remove_dir_all(&dir)?;
    Ok(CheckOutcome::new(
        "determinism",
        same,
        if same { "identical bytes".into() } else { "outputs differ".into() },
    ))
}

/// The clipped benchmark run as an algorithm has zero clipped regret.
pub fn check_clipped_oracle(seed: u64) -> Result<CheckOutcome> {
    let mut cfg = ExperimentConfig::new(EnvSpec::preset("synthetic")?, AlgorithmSpec::ClippedOracle, 500);
    cfg.n_exp = 2;
    cfg.base_seed = seed;
    let res = run_experiment(&cfg)?;
    let worst = res.rounds.iter().map(|r| r.clip_regret_mean.abs()).fold(0.0, f64::max);
    Ok(CheckOutcome::new(
        "clipped-oracle",
        worst == 0.0,
        format!("max |clipped regret| {worst:e}"),
    ))
}

/// Every suite with its default size.
pub fn run_all(seed: u64) -> Result<Vec<CheckOutcome>> {
    Ok(vec![
        check_incremental_matches_batch(200, seed)?,
        check_reductions(200, seed)?,
        check_argmax_invariance(10_000, seed),
        check_moment_identity(100_000, seed)?,
        check_clipped_oracle(seed)?,
        check_determinism(seed)?,
    ])
}
