//! Importance-weighted moments of the observed data under an adaptive,
//! context-dependent policy. Weighting to the uniform reference makes
//! `E[w 1{A=a} x̃ x̃ᵀ] = π(a) (x xᵀ + Σe)` hold even though the logging
//! policy looked at `x̃`.

use meb::domain::{History, ObservedRound, UniformReference};
use meb::estimators::weighted_moments;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn main() -> meb::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let x = 0.7;
    let sigma = 0.5;
    let mut h = History::new(2);
    for t in 1..=200_000 {
        let xt = x + sigma * rng.sample::<f64, _>(StandardNormal);
        let p1 = 1.0 / (1.0 + (-3.0 * xt).exp());
        let a = usize::from(rng.random::<f64>() < p1);
        h.push(ObservedRound {
            noisy_context: DVector::from_element(1, xt),
            action: a,
            reward: 0.0,
            propensity: if a == 1 { p1 } else { 1.0 - p1 },
            error_cov: DMatrix::from_element(1, 1, sigma * sigma),
            round_index: t,
        });
    }
    let first = |v: &DVector<f64>, _: f64| v[0];
    let second = |v: &DVector<f64>, _: f64| v[0] * v[0];
    for a in 0..2 {
        let m = weighted_moments(&h, a, &UniformReference::new(2), &[&first, &second])?;
        let raw: Vec<f64> = h.rounds.iter().filter(|r| r.action == a).map(|r| r.noisy_context[0]).collect();
        println!(
            "action {a}: weighted E[x̃] {:.4} (target {:.4}), E[x̃²] {:.4} (target {:.4}); unweighted mean {:.4}",
            m[0],
            0.5 * x,
            m[1],
            0.5 * (x * x + sigma * sigma),
            raw.iter().sum::<f64>() / raw.len() as f64,
        );
    }
    Ok(())
}
