//! Substitution `∫ f·F dμ = ∫ f dM` and change of variable `∫ g(f) dM = Σ g(c)·M_f({c})`
//! on a seeded random corpus.
//!
//! Run with `cargo run --release --example identities`.

use bmg::birkhoff::{check_change_of_variable, check_substitution, EngineOptions};
use bmg::corpus::finite_case;
use bmg::func::eval_terms;

fn main() -> bmg::Result<()> {
    let eps = 1e-9;
    let (mut worst_sub, mut worst_cov) = (0.0f64, 0.0f64);
    for i in 0..100 {
        let c = finite_case(2024, i);
        let opts = EngineOptions::default().with_norm(c.norm);
        let sub = check_substitution(&c.f, &c.big_f, &c.mu, eps, &opts)?;
        let g = |x: f64| eval_terms(&c.g, x);
        let cov = check_change_of_variable(&g, &c.f, &c.m, eps, &opts)?;
        assert!(sub.holds() && cov.holds());
        worst_sub = worst_sub.max(sub.gap);
        worst_cov = worst_cov.max(cov.gap);
    }
    println!("100 cases: substitution max gap {worst_sub:.2e}, change of variable max gap {worst_cov:.2e}");
    Ok(())
}
