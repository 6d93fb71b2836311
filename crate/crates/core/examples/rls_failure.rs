//! Two actions in the plane where the context error never flips the best
//! action, yet least squares on `x̃` learns a rotated parameter. TS and UCB
//! keep paying linear regret; MEB does not.
//!
//! cargo run --release --example rls_failure -- [t] [n_exp]

use meb::harness::demo::rls_failure;

fn main() -> meb::Result<()> {
    let mut args = std::env::args().skip(1).map(|s| s.parse::<usize>().ok());
    let t = args.next().flatten().unwrap_or(10_000);
    let n = args.next().flatten().unwrap_or(20);
    println!("T={t}, {n} seeds");
    for g in rls_failure(t, n, 0)? {
        println!(
            "{:>4}: median R(T) {:8.1}  R(T)/T {:.3}  R(T)/R(T/2) {:.3}",
            g.algorithm,
            g.median_end(),
            g.median_end() / t as f64,
            g.median_growth_ratio()
        );
    }
    Ok(())
}
