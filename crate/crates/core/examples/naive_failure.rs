//! A fixed threshold policy on `x̃` with uniform context noise.
//!
//! The per-action naive correction subtracts `Σe` on every round where the
//! action was taken, but the policy picks action 0 more often when `x̃` is
//! small, so the noise on those rounds is not centered. The weighted
//! estimator reweights to the uniform reference and recovers `θ0 = -1`.
//!
//! cargo run --release --example naive_failure

use meb::harness::demo::{median, naive_failure_limit, naive_failure_run};

fn main() -> meb::Result<()> {
    let checkpoints = [100, 1_000, 10_000, 100_000];
    let seeds = 20;
    for threshold in [-0.5, 0.0, 0.5] {
        println!("threshold {threshold:+.1}, naive limit {:.4}", naive_failure_limit(threshold));
        let runs: Vec<_> = (0..seeds)
            .map(|s| naive_failure_run(threshold, s, &checkpoints))
            .collect::<meb::Result<_>>()?;
        for (i, t) in checkpoints.iter().enumerate() {
            let w: Vec<f64> = runs.iter().map(|r| r.weighted[i]).collect();
            let n: Vec<f64> = runs.iter().map(|r| r.naive[i]).collect();
            println!("  t={t:>6}  weighted {:+.4}  naive {:+.4}", median(&w), median(&n));
        }
    }
    Ok(())
}
