use meb::environments::{
    estvar_feed, EnvSpec, Environment, HeartStepsConfig, HeartStepsEnv, NaiveFailureEnv, RlsFailureEnv, RngStreams,
    SyntheticConfig, SyntheticEnv, ThresholdPolicy,
};
use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const N: usize = 100_000;

/// Mean and standard error of a sample.
fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, (var / n).sqrt())
}

fn within_4se(xs: &[f64], target: f64) -> bool {
    let (m, se) = mean_se(xs);
    (m - target).abs() <= 4.0 * se
}

#[test]
fn synthetic_noiseless() {
    let cfg = SyntheticConfig {
        sigma_e_sq: 0.0,
        sigma_eta_sq: 0.0,
        ..SyntheticConfig::default()
    };
    let mut env = SyntheticEnv::new(cfg.clone(), RngStreams::new(1)).unwrap();
    for t in 1..=50 {
        let s = env.step(t);
        assert_eq!(s.noisy_context, s.true_context);
        for (a, th) in cfg.thetas.iter().enumerate() {
            assert_eq!(s.reward(a), DVector::from_vec(th.clone()).dot(&s.true_context));
        }
    }
}

#[test]
fn synthetic_moments() {
    let cfg = SyntheticConfig {
        sigma_e_sq: 0.5,
        ..SyntheticConfig::default()
    };
    let d = cfg.dim();
    let mut env = SyntheticEnv::new(cfg.clone(), RngStreams::new(2)).unwrap();
    let steps: Vec<_> = (1..=N).map(|t| env.step(t)).collect();
    for i in 0..d {
        let xs: Vec<f64> = steps.iter().map(|s| s.noisy_context[i]).collect();
        assert!(within_4se(&xs, cfg.mu_x[i]), "mean of coordinate {i}");
        for j in i..d {
            let prods: Vec<f64> = steps
                .iter()
                .map(|s| {
                    let e = &s.noisy_context - &s.true_context;
                    e[i] * e[j]
                })
                .collect();
            let target = if i == j { cfg.sigma_e_sq } else { 0.0 };
            assert!(within_4se(&prods, target), "error covariance ({i}, {j})");
        }
    }
    assert_eq!(steps[0].error_cov, DMatrix::identity(d, d) * 0.5);
}

#[test]
fn heartsteps_burden_recursion() {
    let decay = |initial: f64, action: usize, n: usize| {
        let cfg = HeartStepsConfig {
            initial_burden: initial,
            ..HeartStepsConfig::default()
        };
        let mut env = HeartStepsEnv::new(cfg, RngStreams::new(0)).unwrap();
        for t in 1..=n {
            env.step(t);
            env.observe_action(action);
        }
        env.burden()
    };
    assert_eq!(decay(1.0, 0, 3), 0.125);
    assert!((decay(0.0, 1, 200) - 2.0).abs() < 1e-12);
}

#[test]
fn heartsteps_zero_decay_and_noise_placement() {
    let cfg = HeartStepsConfig {
        lambda_burden: 0.0,
        ..HeartStepsConfig::default()
    };
    let b = cfg.burden_index();
    let mut env = HeartStepsEnv::new(cfg, RngStreams::new(4)).unwrap();
    for (t, a) in [1usize, 0, 0, 1, 1, 0].into_iter().enumerate() {
        let s = env.step(t + 1);
        for i in 0..b {
            assert_eq!(s.noisy_context[i], s.true_context[i]);
        }
        assert_eq!(s.error_cov[(b, b)], 1.0);
        assert_eq!(s.error_cov.sum(), 1.0);
        env.observe_action(a);
        assert_eq!(env.burden(), a as f64);
    }
}

#[test]
fn naive_failure_moments_and_rewards() {
    let mut env = NaiveFailureEnv::new(RngStreams::new(5));
    let steps: Vec<_> = (1..=N).map(|t| env.step(t)).collect();
    let xs: Vec<f64> = steps.iter().map(|s| s.noisy_context[0]).collect();
    assert!(within_4se(&xs, 1.0));
    let sq: Vec<f64> = xs.iter().map(|x| (x - 1.0).powi(2)).collect();
    assert!(within_4se(&sq, 4.0 / 3.0));
    for s in &steps {
        assert!((-1.1..=-0.9).contains(&s.reward(0)));
        assert!((0.9..=1.1).contains(&s.reward(1)));
    }
    let pol = ThresholdPolicy::new(0.3);
    assert_eq!(pol.distribution(0.31).prob(1), 2.0 / 3.0);
    assert_eq!(pol.distribution(0.3).prob(1), 1.0 / 3.0);
}

#[test]
fn rls_failure_construction() {
    let mut env = RlsFailureEnv::new(0.9, 0.01, RngStreams::new(6));
    let mut counts = [0usize; 4];
    let mut errors: Vec<Vec<[u64; 2]>> = vec![Vec::new(); 4];
    for t in 1..=N {
        let s = env.step(t);
        let x = [s.true_context[0], s.true_context[1]];
        let k = RlsFailureEnv::SUPPORT.iter().position(|p| *p == x).expect("support point");
        counts[k] += 1;
        let e = &s.noisy_context - &s.true_context;
        let key = [e[0].to_bits(), e[1].to_bits()];
        if !errors[k].contains(&key) {
            errors[k].push(key);
        }
    }
    for c in counts {
        let p = c as f64 / N as f64;
        assert!((p - 0.25).abs() < 4.0 * (0.1875 / N as f64).sqrt(), "frequency {p}");
    }
    assert!(errors.iter().all(|e| e.len() == 2));

    // all eight (x, ε) pairs satisfy the gap condition with ρ = 0.9
    let delta = [2.0, 0.0];
    for p in RlsFailureEnv::SUPPORT {
        for sign in [1.0, -1.0] {
            let e = sign * 0.9 * p[0];
            let lhs = (delta[0] * e + delta[1] * e).abs();
            let rhs = 0.9 * (delta[0] * p[0] + delta[1] * p[1]).abs();
            assert!(lhs <= rhs + 1e-12);
        }
    }
}

#[test]
fn estvar_perturbation_scales_with_root_t() {
    let sigma = DMatrix::identity(3, 3) * 2.0;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mean_norm = |t: usize, rng: &mut ChaCha8Rng| {
        (0..2000)
            .map(|_| {
                let s = estvar_feed(&sigma, t, rng, 1.0);
                assert_eq!(s, s.transpose());
                (s - &sigma).norm()
            })
            .sum::<f64>()
            / 2000.0
    };
    let n1 = mean_norm(1, &mut rng);
    let n4 = mean_norm(4, &mut rng);
    assert!((n4 / n1 - 0.5).abs() < 0.05, "ratio {}", n4 / n1);
    assert_eq!(estvar_feed(&sigma, 9, &mut rng, 0.0), sigma);
}

#[test]
fn reward_noise_is_shared_and_centered() {
    let mut env = SyntheticEnv::new(SyntheticConfig::default(), RngStreams::new(8)).unwrap();
    let eta: Vec<f64> = (1..=N).map(|t| env.step(t).reward_noise).collect();
    assert!(within_4se(&eta, 0.0));
    let s = env.step(N + 1);
    assert_eq!(s.reward(1) - s.mean_rewards[1], s.reward(0) - s.mean_rewards[0]);
}

#[test]
fn replay_is_bit_identical() {
    for name in ["synthetic", "heartsteps", "naive-failure", "rls-failure", "sign-flip"] {
        let spec = EnvSpec::preset(name).unwrap();
        let run = || {
            let mut env = spec.build(RngStreams::new(11)).unwrap();
            (1..=200)
                .map(|t| {
                    let s = env.step(t);
                    env.observe_action(t % 2);
                    s
                })
                .collect::<Vec<_>>()
        };
        assert_eq!(run(), run(), "{name}");
    }
}
