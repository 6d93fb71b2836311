use meb::domain::{ExplorationSchedule, MinProb, ObservedRound, UpdateTimes};
use meb::estimators::EstimatorKind;
use meb::policies::{MebState, Policy, TsState, UcbState};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn v(xs: &[f64]) -> DVector<f64> {
    DVector::from_column_slice(xs)
}

fn rng() -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(3)
}

fn obs(t: usize, x: &[f64], a: usize, r: f64, prop: f64, sigma: f64) -> ObservedRound {
    ObservedRound {
        noisy_context: v(x),
        action: a,
        reward: r,
        propensity: prop,
        error_cov: DMatrix::identity(x.len(), x.len()) * sigma,
        round_index: t,
    }
}

fn schedule(t0: usize, p0: f64, update: UpdateTimes) -> ExplorationSchedule {
    ExplorationSchedule::new(t0, MinProb::Constant(p0), update)
}

#[test]
fn meb_decide_examples() {
    let s = MebState::new(1, 2, schedule(10, 0.2, UpdateTimes::Every), EstimatorKind::Weighted).unwrap();
    assert_eq!(s.decide(&v(&[0.3]), &mut rng()).unwrap().probs(), &[0.5, 0.5]);

    let mut s = MebState::new(1, 2, schedule(0, 0.2, UpdateTimes::Every), EstimatorKind::Weighted).unwrap();
    s.set_theta(vec![Some(v(&[1.0])), Some(v(&[-1.0]))]);
    assert_eq!(s.decide(&v(&[0.3]), &mut rng()).unwrap().probs(), &[0.8, 0.2]);
    s.set_theta(vec![Some(v(&[0.7])), Some(v(&[0.7]))]);
    assert_eq!(s.decide(&v(&[-4.0]), &mut rng()).unwrap().probs(), &[0.8, 0.2]);
}

#[test]
fn meb_refreshes_only_at_powers_of_two() {
    let mut s = MebState::new(1, 2, schedule(0, 0.2, UpdateTimes::Powers(2)), EstimatorKind::Weighted).unwrap();
    let mut last = s.theta_hat().unwrap();
    for t in 1..=40 {
        let x = 0.5 + 0.1 * t as f64;
        s.update(&obs(t, &[x], t % 2, 2.0 * x, 0.5, 0.0)).unwrap();
        let now = s.theta_hat().unwrap();
        if !t.is_power_of_two() || t == 1 {
            assert_eq!(now, last, "estimate moved at t = {t}");
        }
        last = now;
    }
    assert!((last[0][0] - 2.0).abs() < 1e-6);
}

#[test]
fn meb_singular_refresh_keeps_estimate() {
    let mut s = MebState::new(2, 2, schedule(0, 0.2, UpdateTimes::Every), EstimatorKind::Weighted).unwrap();
    let before = s.theta_hat().unwrap();
    // collinear contexts on action 0 and none on action 1
    s.update(&obs(1, &[1.0, 1.0], 0, 1.0, 0.5, 0.0)).unwrap();
    s.update(&obs(2, &[2.0, 2.0], 0, 2.0, 0.5, 0.0)).unwrap();
    assert_eq!(s.theta_hat().unwrap(), before);
    assert_eq!(s.singular_fallbacks(), 2);
    assert!(!s.is_learned());
}

#[test]
fn meb_rejects_out_of_order_rounds() {
    let mut s = MebState::new(1, 2, schedule(0, 0.2, UpdateTimes::Every), EstimatorKind::Weighted).unwrap();
    assert!(s.update(&obs(2, &[1.0], 0, 1.0, 0.5, 0.0)).is_err());
}

#[test]
fn meb_uses_warmup_rounds_for_estimates() {
    let mut s = MebState::new(1, 2, schedule(100, 0.2, UpdateTimes::Every), EstimatorKind::Naive).unwrap();
    s.update(&obs(1, &[1.0], 0, 3.0, 0.5, 0.0)).unwrap();
    s.update(&obs(2, &[1.0], 1, -1.0, 0.5, 0.0)).unwrap();
    let th = s.theta_hat().unwrap();
    assert_eq!((th[0][0], th[1][0]), (3.0, -1.0));
    // still in warm-up
    assert_eq!(s.decide(&v(&[1.0]), &mut rng()).unwrap().probs(), &[0.5, 0.5]);
}

#[test]
fn ts_posterior_hand_value() {
    let mut s = TsState::new(1, 2, 1.0, 1.0, MinProb::Constant(0.2)).unwrap();
    s.update(&obs(1, &[2.0], 0, 6.0, 0.5, 0.0)).unwrap();
    approx::assert_relative_eq!(s.posterior_mean(0)[0], 12.0 / 5.0, epsilon = 1e-14);
    approx::assert_relative_eq!(s.posterior_cov(0)[(0, 0)], 1.0 / 5.0, epsilon = 1e-14);
    assert_eq!(s.posterior_mean(1)[0], 0.0);
    assert_eq!(s.posterior_cov(1)[(0, 0)], 1.0);
}

#[test]
fn ts_grouping_does_not_matter() {
    let r1 = obs(1, &[1.0, -0.5], 0, 0.3, 0.5, 0.0);
    let r2 = obs(2, &[0.2, 0.9], 0, -1.1, 0.5, 0.0);
    let mut s = TsState::new(2, 2, 1.0, 0.5, MinProb::Constant(0.2)).unwrap();
    s.update(&r1).unwrap();
    s.update(&r2).unwrap();
    // batch formula: V = I + Σ x xᵀ, μ = V⁻¹ b, Σ = ρ V⁻¹
    let gram = DMatrix::identity(2, 2) + &r1.noisy_context * r1.noisy_context.transpose()
        + &r2.noisy_context * r2.noisy_context.transpose();
    let b = &r1.noisy_context * r1.reward + &r2.noisy_context * r2.reward;
    let inv = gram.try_inverse().unwrap();
    approx::assert_relative_eq!(s.posterior_mean(0), &(&inv * b), epsilon = 1e-12);
    approx::assert_relative_eq!(s.posterior_cov(0), &(inv * 0.5), epsilon = 1e-12);
}

#[test]
fn ts_fresh_state_is_exchangeable() {
    let s = TsState::new(2, 2, 1.0, 1.0, MinProb::Constant(0.1)).unwrap();
    let mut r = rng();
    let n = 20_000;
    let ones = (0..n).filter(|_| s.sample_action(&v(&[0.4, -0.8]), &mut r) == 1).count() as f64;
    let p = ones / n as f64;
    // within 4 standard errors of 1/2
    assert!((p - 0.5).abs() < 4.0 * (0.25 / n as f64).sqrt(), "p = {p}");
}

#[test]
fn ts_is_seed_deterministic() {
    let mut s = TsState::new(2, 3, 1.0, 1.0, MinProb::Constant(0.1)).unwrap();
    s.update(&obs(1, &[1.0, 0.0], 2, 1.0, 0.5, 0.0)).unwrap();
    let x = v(&[0.3, 0.7]);
    let a: Vec<_> = (0..5).map(|_| s.decide(&x, &mut rng()).unwrap()).collect();
    assert!(a.windows(2).all(|w| w[0] == w[1]));
}

#[test]
fn ts_collapsed_posterior_is_greedy() {
    let mut s = TsState::new(1, 2, 1.0, 1e-12, MinProb::Constant(0.1)).unwrap();
    s.update(&obs(1, &[1.0], 0, -1.0, 0.5, 0.0)).unwrap();
    s.update(&obs(2, &[1.0], 1, 1.0, 0.5, 0.0)).unwrap();
    let mut r = rng();
    for _ in 0..100 {
        assert_eq!(s.decide(&v(&[0.5]), &mut r).unwrap().probs(), &[0.1, 0.9]);
    }
}

#[test]
fn ucb_examples() {
    let s = UcbState::new(1, 2, 1.0, 1.0, MinProb::Constant(0.2)).unwrap();
    assert_eq!(s.scores(&v(&[1.0])), vec![1.0, 1.0]);
    assert_eq!(s.decide(&v(&[1.0]), &mut rng()).unwrap().probs(), &[0.8, 0.2]);

    let half = UcbState::new(1, 2, 1.0, 1.0, MinProb::Constant(0.5)).unwrap();
    assert_eq!(half.decide(&v(&[1.0]), &mut rng()).unwrap().probs(), &[0.5, 0.5]);
}

#[test]
fn ucb_without_bonus_is_greedy_on_ridge() {
    let mut s = UcbState::new(1, 2, 1.0, 0.0, MinProb::Constant(0.2)).unwrap();
    s.update(&obs(1, &[1.0], 1, 4.0, 0.5, 0.0)).unwrap();
    // ridge mean for action 1: 4 / (1 + 1)
    let sc = s.scores(&v(&[1.0]));
    assert_eq!(sc[0], 0.0);
    approx::assert_relative_eq!(sc[1], 2.0, epsilon = 1e-12);
    assert_eq!(s.decide(&v(&[1.0]), &mut rng()).unwrap().probs(), &[0.2, 0.8]);
}

#[test]
fn decaying_min_prob() {
    let p = MinProb::Decaying;
    assert_eq!(p.at(1, 2), 0.5);
    approx::assert_relative_eq!(p.at(1000, 2), 0.1, epsilon = 1e-12);
    approx::assert_relative_eq!(p.at(1000, 3), 0.1, epsilon = 1e-12);
    assert_eq!(p.at(8, 3), 1.0 / 3.0);
}

fn theta_strategy(k: usize, d: usize) -> impl Strategy<Value = Vec<DVector<f64>>> {
    prop::collection::vec(prop::collection::vec(-3.0f64..3.0, d), k)
        .prop_map(|rows| rows.into_iter().map(DVector::from_vec).collect())
}

proptest! {
    #[test]
    fn two_action_paths_agree(
        thetas in theta_strategy(2, 3),
        x in prop::collection::vec(-2.0f64..2.0, 3),
        p0 in 0.01f64..0.5,
    ) {
        let mut s = MebState::new(3, 2, schedule(0, p0, UpdateTimes::Every), EstimatorKind::Weighted).unwrap();
        s.set_theta(thetas.into_iter().map(Some).collect());
        let x = DVector::from_vec(x);
        prop_assert_eq!(s.decide(&x, &mut rng()).unwrap(), s.decide_binary(&x).unwrap());
    }

    #[test]
    fn common_scaling_keeps_decision(
        thetas in theta_strategy(4, 2),
        x in prop::collection::vec(-2.0f64..2.0, 2),
        c in 0.01f64..100.0,
    ) {
        let x = DVector::from_vec(x);
        let mut a = MebState::new(2, 4, schedule(0, 0.1, UpdateTimes::Every), EstimatorKind::Weighted).unwrap();
        let mut b = a.clone();
        let scores: Vec<f64> = thetas.iter().map(|t| t.dot(&x)).collect();
        a.set_theta(thetas.iter().cloned().map(Some).collect());
        b.set_theta(thetas.iter().map(|t| Some(t * c)).collect());
        // skip near-ties, where scaling can reorder in the last bit
        let mut sorted = scores.clone();
        sorted.sort_by(f64::total_cmp);
        prop_assume!(sorted[3] - sorted[2] > 1e-9);
        prop_assert_eq!(a.greedy_action(&x), b.greedy_action(&x));
    }

    #[test]
    fn every_distribution_respects_min_prob(
        xs in prop::collection::vec(prop::collection::vec(-1.0f64..1.0, 2), 1..30),
        rewards in prop::collection::vec(-1.0f64..1.0, 30),
        k in 2usize..5,
        p0_frac in 0.05f64..1.0,
    ) {
        let p0 = p0_frac / k as f64;
        let mut pols: Vec<Box<dyn Policy>> = vec![
            Box::new(MebState::new(2, k, schedule(3, p0, UpdateTimes::Every), EstimatorKind::Weighted).unwrap()),
            Box::new(TsState::new(2, k, 1.0, 1.0, MinProb::Constant(p0)).unwrap()),
            Box::new(UcbState::new(2, k, 1.0, 1.0, MinProb::Constant(p0)).unwrap()),
        ];
        let mut r = rng();
        for (i, x) in xs.iter().enumerate() {
            let x = DVector::from_vec(x.clone());
            for p in pols.iter_mut() {
                let dist = p.decide(&x, &mut r).unwrap();
                prop_assert!(dist.min_prob() >= p0 - 1e-15);
                let a = i % k;
                p.update(&ObservedRound {
                    noisy_context: x.clone(),
                    action: a,
                    reward: rewards[i],
                    propensity: dist.prob(a),
                    error_cov: DMatrix::identity(2, 2) * 0.01,
                    round_index: i + 1,
                }).unwrap();
            }
        }
    }
}
