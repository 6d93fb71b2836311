use meb::domain::{PolicyDistribution, RewardModel};
use meb::evaluation::{
    clipped_benchmark, instantaneous_regret, max_estimation_error, oracle_action, standard_benchmark, RegretLedger,
};
use nalgebra::DVector;
use proptest::prelude::*;

fn x1(v: f64) -> DVector<f64> {
    DVector::from_element(1, v)
}

#[test]
fn hand_values() {
    let m = RewardModel::from_rows(&[&[-1.0], &[1.0]]).unwrap();
    let bench = standard_benchmark(&m, &x1(0.2));
    assert_eq!(bench.probs(), &[0.0, 1.0]);
    let r = instantaneous_regret(&bench, &PolicyDistribution::uniform(2), &m, &x1(0.2)).unwrap();
    approx::assert_relative_eq!(r, 0.2, epsilon = 1e-15);

    let clip = clipped_benchmark(&m, &x1(0.2), 0.2);
    assert_eq!(instantaneous_regret(&clip, &clip, &m, &x1(0.2)).unwrap(), 0.0);
}

#[test]
fn ledger_accumulates() {
    let m = RewardModel::from_rows(&[&[-1.0], &[1.0]]).unwrap();
    let mut ledger = RegretLedger::new();
    let uni = PolicyDistribution::uniform(2);
    for v in [0.2, -0.4, 1.0] {
        let x = x1(v);
        let th = [DVector::from_element(1, 0.0), DVector::from_element(1, 1.5)];
        ledger
            .record_round(&standard_benchmark(&m, &x), &clipped_benchmark(&m, &x, 0.1), &uni, &m, &x, Some(&th))
            .unwrap();
    }
    // uniform loses |x| against the oracle each round
    approx::assert_relative_eq!(ledger.cumulative_standard[2], 1.6, epsilon = 1e-14);
    approx::assert_relative_eq!(ledger.average_standard(), 1.6 / 3.0, epsilon = 1e-14);
    approx::assert_relative_eq!(ledger.cumulative_clipped[2], 0.8 * 1.6, epsilon = 1e-14);
    assert_eq!(ledger.max_estimation_errors()[0], Some(1.0));
    assert_eq!(
        max_estimation_error(&[x1(0.0), x1(1.5)], &m),
        1.0
    );
}

#[test]
fn mismatched_shapes_are_rejected() {
    let m = RewardModel::from_rows(&[&[-1.0], &[1.0]]).unwrap();
    let three = PolicyDistribution::uniform(3);
    assert!(instantaneous_regret(&three, &three, &m, &x1(1.0)).is_err());
    let two = PolicyDistribution::uniform(2);
    assert!(instantaneous_regret(&two, &two, &m, &DVector::zeros(2)).is_err());
}

proptest! {
    #[test]
    fn two_action_clipped_identity(
        th0 in prop::collection::vec(-2.0f64..2.0, 2),
        th1 in prop::collection::vec(-2.0f64..2.0, 2),
        x in prop::collection::vec(-2.0f64..2.0, 2),
        chosen in 0usize..2,
        p0 in 0.0f64..0.5,
    ) {
        let m = RewardModel::from_rows(&[&th0, &th1]).unwrap();
        let x = DVector::from_vec(x);
        let policy = PolicyDistribution::clipped(2, chosen, p0);
        let bench = clipped_benchmark(&m, &x, p0);
        let r = instantaneous_regret(&bench, &policy, &m, &x).unwrap();
        let gap = (m.theta(1) - m.theta(0)).dot(&x).abs();
        let wrong = f64::from(u8::from(chosen != oracle_action(&m, &x)));
        prop_assert!((r - (1.0 - 2.0 * p0) * wrong * gap).abs() <= 1e-12 * (1.0 + gap));
    }

    #[test]
    fn standard_regret_is_nonnegative(
        rows in prop::collection::vec(prop::collection::vec(-2.0f64..2.0, 3), 2..5),
        x in prop::collection::vec(-2.0f64..2.0, 3),
        raw in prop::collection::vec(0.01f64..1.0, 5),
    ) {
        let k = rows.len();
        let refs: Vec<&[f64]> = rows.iter().map(Vec::as_slice).collect();
        let m = RewardModel::from_rows(&refs).unwrap();
        let x = DVector::from_vec(x);
        let total: f64 = raw[..k].iter().sum();
        let policy = PolicyDistribution::new(raw[..k].iter().map(|p| p / total).collect()).unwrap();
        let r = instantaneous_regret(&standard_benchmark(&m, &x), &policy, &m, &x).unwrap();
        prop_assert!(r >= -1e-12);
    }
}
