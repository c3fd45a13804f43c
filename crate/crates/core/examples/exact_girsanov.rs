//! A small exact instance: build `Q`, compare marginals, and check that the shifted
//! process is a `Q`-martingale.
//!
//! Run with `cargo run --release --example exact_girsanov`.

use bmg::girsanov::{fixture_exact_synthetic, run_girsanov};

fn main() -> bmg::Result<()> {
    let fx = fixture_exact_synthetic(11)?;
    let p = &fx.process;
    println!(
        "{} paths, {} steps, increments within ±{} lattice steps, drift q = {}",
        p.size(),
        fx.steps,
        fx.half_width,
        p.q()
    );
    let (b, _) = run_girsanov(p, 1e-10)?;
    println!("hypotheses hold: {}", b.assumptions.all_pass());
    println!("M(T) = {:?}", b.m_total.0);
    println!("Q(T) = {:?}", b.q_total.0);
    println!("marginal gap {:.2e} over {} points", b.theorem6.max_gap, b.theorem6.rows.len());
    println!("w~ is a Q-martingale: {} (max gap {:.2e})", b.theorem7.martingale.pass, b.theorem7.martingale.max_gap);
    Ok(())
}
