//! Discretized Brownian walk with drift: change of measure and its checks.
//!
//! Run with `cargo run --release --example brownian_walk`.

use std::time::Instant;

use bmg::girsanov::{fixture_brownian_walk, run_girsanov, BrownianParams};

fn main() -> bmg::Result<()> {
    let started = Instant::now();
    let params = BrownianParams::default();
    let f = fixture_brownian_walk(&params)?;
    println!(
        "pitch {} (requested {}), sigma {} steps, support ±{}, drift {} steps per dt",
        f.pitch, params.delta, f.sigma_units, f.half_width, f.shift_per_step
    );
    println!("edge masses {:.3e} / {:.3e}, declared tolerance {:.3e}", f.trailing_tail, f.leading_tail, f.tolerance);

    let (b, _) = run_girsanov(&f.process, f.tolerance)?;
    let a = &b.assumptions;
    println!("A1a null integrals  max {:.3e}", a.a1a.max_norm);
    println!("A1b density ratio   max {:.3e}", a.a1b.max_gap);
    println!("A1c g(w~) martingale max {:.3e}", a.a1c.max_gap);
    println!("A2  w~ g(w~)        max {:.3e}", a.a2.max_gap);
    println!("marginals Q vs M    max {:.3e} over {} rows", b.theorem6.max_gap, b.theorem6.rows.len());
    println!("Q(T) - M(T)         max {:.3e}", b.theorem6.mass_gap);
    println!("w~ under Q          max {:.3e}", b.theorem7.martingale.max_gap);
    println!(
        "proof identities    {:.3e} {:.3e} {:.3e}",
        b.theorem7.chain_i.max_gap, b.theorem7.chain_ii.max_gap, b.theorem7.chain_iii.max_gap
    );
    println!("all pass: {} ({:.2?})", b.pass(), started.elapsed());
    Ok(())
}
