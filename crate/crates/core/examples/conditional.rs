//! Conditional expectation on a partition, its factorization through `f`, and the tower law.
//!
//! Run with `cargo run --release --example conditional`.

use bmg::birkhoff::EngineOptions;
use bmg::conditional::{conditional_expectation, sigma_of, SubSigmaAlgebra};
use bmg::func::{ScalarTable, VectorTable};
use bmg::measure::ScalarMeasure;
use bmg::space::{AtomSet, Partition, SpaceModel};

fn main() -> bmg::Result<()> {
    let space = SpaceModel::finite(["a", "b", "c", "d", "e"])?;
    let mu = ScalarMeasure::new(space.clone(), vec![0.1, 0.3, 0.2, 0.4, 0.0])?;
    let big_f = VectorTable::new(vec![vec![1.0, 0.0], vec![3.0, 1.0], vec![-2.0, 4.0], vec![0.0, 1.0], vec![9.0, 9.0]])?;
    let opts = EngineOptions::default();

    // σ(f) for f taking the values 0, 0, 1, 1, 2
    let f = ScalarTable(vec![0.0, 0.0, 1.0, 1.0, 2.0]);
    let by_f = sigma_of(&space, &f)?;
    let z = conditional_expectation(&big_f, &mu, &by_f, 1e-12, &opts)?;
    for (c, h) in z.factor().expect("σ(f) keeps its levels") {
        println!("E(F | f = {c}) = {:?}", h.coords());
    }
    println!("null blocks: {:?}", z.null_blocks());

    // tower: E(E(F | fine) | coarse) = E(F | coarse)
    let fine = SubSigmaAlgebra::from_partition(Partition::new(
        space.clone(),
        vec![AtomSet::new([0]), AtomSet::new([1]), AtomSet::new([2, 3]), AtomSet::new([4])],
    )?);
    let coarse = SubSigmaAlgebra::from_partition(Partition::new(
        space.clone(),
        vec![AtomSet::new([0, 1, 2, 3]), AtomSet::new([4])],
    )?);
    let inner = conditional_expectation(&big_f, &mu, &fine, 1e-12, &opts)?;
    let inner_table = VectorTable::new((0..space.len()).map(|a| inner.at_atom(a).coords().to_vec()).collect())?;
    let tower = conditional_expectation(&inner_table, &mu, &coarse, 1e-12, &opts)?;
    let direct = conditional_expectation(&big_f, &mu, &coarse, 1e-12, &opts)?;
    println!(
        "tower: {:?} vs direct {:?}",
        tower.block_values()[0].coords(),
        direct.block_values()[0].coords()
    );
    Ok(())
}
