//! Without a bound on how much the error can move the reward gap, no policy
//! on `x̃` escapes linear regret: here `x̃` has the wrong sign 40% of the time.
//!
//! cargo run --release --example sign_flip

use meb::harness::demo::{sign_flip, standard_regret_slope};

fn main() -> meb::Result<()> {
    for t in [1_000, 5_000, 10_000] {
        let res = sign_flip(t, 20, 0)?;
        println!(
            "T={t:>6}  standard regret {:9.2}  slope {:.4}",
            res.final_round().std_regret_mean,
            standard_regret_slope(&res)
        );
    }
    Ok(())
}
