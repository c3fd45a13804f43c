//! The band-layered partition: blocks split where `|f|` crosses an integer, with the
//! double sum certified against `2·eps`.
//!
//! Run with `cargo run --release --example layered`.

use bmg::birkhoff::{layered_partition, EngineOptions};
use bmg::func::{ScalarFunction, Term, VectorFunction};
use bmg::measure::ScalarMeasure;
use bmg::space::{Block, SpaceModel};

fn main() -> bmg::Result<()> {
    let space = SpaceModel::grid(-1.0, 1.0, 2)?;
    let mu = ScalarMeasure::lebesgue(space);
    // f(t) = 2.5·t sweeps bands 1, 2 and 3 on both sides of 0
    let f = ScalarFunction::Terms(vec![Term::Poly(vec![0.0, 2.5])]);
    let big_f = VectorFunction::Terms(vec![vec![Term::Exp { amp: 1.0, rate: 1.0 }]]);
    let eps = 1e-4;
    let lp = layered_partition(&f, &big_f, &mu, eps, &EngineOptions::default())?;
    println!("{} blocks, certified double sum {:.3e} (limit {:.1e})", lp.partition.len(), lp.certified_double_sum, 2.0 * eps);
    let mut current = 0;
    for (block, &band) in lp.partition.blocks().iter().zip(&lp.bands) {
        if band != current {
            if let Block::Interval { lo, .. } = block {
                println!("  band {band} starts at t = {lo:+.4}");
            }
            current = band;
        }
    }
    Ok(())
}
