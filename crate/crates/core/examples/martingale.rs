//! Martingale checks for path processes against their natural filtration.
//!
//! Run with `cargo run --release --example martingale`.

use bmg::girsanov::{build_filtration, is_martingale, ProcessModel};
use bmg::measure::{ScalarMeasure, VectorMeasure};
use bmg::space::SpaceModel;
use bmg::{Norm, VectorValue};

fn two_step(masses: [f64; 4]) -> bmg::Result<ProcessModel> {
    let space = SpaceModel::finite(["uu", "ud", "du", "dd"])?;
    let p = ScalarMeasure::new(space, masses.to_vec())?;
    let m = VectorMeasure::diagonal(&p, &VectorValue::new(vec![1.0, -0.5], Norm::L2));
    let w = vec![vec![0.0; 4], vec![1.0, 1.0, -1.0, -1.0], vec![2.0, 0.0, 0.0, -2.0]];
    ProcessModel::paths(m, vec![0.0, 1.0, 2.0], w, 0.0, 1.0)
}

fn main() -> bmg::Result<()> {
    for (name, masses) in [("fair coin", [0.25; 4]), ("mean reverting", [0.125, 0.375, 0.375, 0.125])] {
        let p = two_step(masses)?;
        let filt = build_filtration(&p)?;
        let x: Vec<Vec<f64>> = (0..=p.last()).map(|k| p.values(k).expect("path process")).collect();
        let r = is_martingale(&x, p.measure().expect("path process"), &filt, 1e-12)?;
        println!("{name:>15}: martingale {} (max gap {:.3e} over {} blocks)", r.pass, r.max_gap, r.checked);
    }
    Ok(())
}
