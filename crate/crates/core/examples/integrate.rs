//! B₁ and B₂ integrals on a finite space and on a grid, with their certificates.
//!
//! Run with `cargo run --release --example integrate`.

use bmg::birkhoff::{b1_integrate, b2_integrate, EngineOptions};
use bmg::func::{ScalarTable, Term, VectorFunction, VectorTable};
use bmg::measure::{ScalarMeasure, VectorMeasure};
use bmg::space::SpaceModel;
use bmg::Norm;

fn main() -> bmg::Result<()> {
    let opts = EngineOptions::default();

    // two atoms: μ = (1/4, 3/4), F(a) = (1, 0), F(b) = (0, 2)
    let space = SpaceModel::finite(["a", "b"])?;
    let mu = ScalarMeasure::new(space.clone(), vec![0.25, 0.75])?;
    let big_f = VectorTable::new(vec![vec![1.0, 0.0], vec![0.0, 2.0]])?;
    let r = b1_integrate(&big_f, &mu, &space.whole(), 1e-12, &opts)?;
    println!("finite B1  ∫F dμ = {:?}  bound {:e}", r.value.coords(), r.certified_bound);

    let m = VectorMeasure::from_rows(space.clone(), vec![vec![1.0, 0.0], vec![0.0, 2.0]], Norm::L2)?;
    let f = ScalarTable(vec![2.0, -1.0]);
    let r = b2_integrate(&f, &m, &space.whole(), 1e-12, &opts)?;
    println!("finite B2  ∫f dM = {:?}", r.value.coords());

    // [0, 1] in four cells under Lebesgue measure: F(t) = (t³, sin πt)
    let grid = SpaceModel::grid(0.0, 1.0, 4)?;
    let leb = ScalarMeasure::lebesgue(grid.clone());
    let big_f = VectorFunction::Terms(vec![
        vec![Term::Poly(vec![0.0, 0.0, 0.0, 1.0])],
        vec![Term::Sin { amp: 1.0, freq: std::f64::consts::PI, phase: 0.0 }],
    ]);
    for eps in [1e-2, 1e-4, 1e-6] {
        let r = match b1_integrate(&big_f, &leb, &grid.whole(), eps, &opts) {
            Err(e) if e.is_non_convergence() => {
                // the bound is first order, so blocks grow like 1/eps
                println!("grid B1  eps {eps:.0e}: {e}; retrying with 4·10⁶ blocks");
                let wide = EngineOptions { max_blocks: 4_000_000, ..opts };
                b1_integrate(&big_f, &leb, &grid.whole(), eps, &wide)?
            }
            r => r?,
        };
        let exact = [0.25, 2.0 / std::f64::consts::PI];
        let err = Norm::L2.dist(r.value.coords(), &exact);
        println!(
            "grid B1  eps {eps:.0e}: {:>8} blocks, bound {:.2e}, error vs closed form {:.2e}",
            r.partition.len(),
            r.certified_bound,
            err
        );
    }
    Ok(())
}
