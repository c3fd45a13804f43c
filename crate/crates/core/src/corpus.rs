//! Seeded random cases: finite spaces for the integration identities, nested partitions
//! for conditional expectations, and grid integrands for the certified engines.
//!
//! Case `i` of seed `s` is drawn from its own ChaCha stream, so any case can be rebuilt
//! alone and corpora of different sizes share their common prefix.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::func::{ScalarTable, Term, VectorTable};
use crate::measure::{ScalarMeasure, VectorMeasure};
use crate::space::{AtomSet, Partition, SpaceModel, SpaceRef};
use crate::vector::Norm;

pub const MAX_ATOMS: usize = 64;
pub const MAX_DIM: usize = 4;

fn case_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64 + 1);
    rng
}

fn labels(n: usize) -> SpaceRef {
    SpaceModel::finite((0..n).map(|i| format!("a{i}"))).expect("distinct labels")
}

/// Masses in `[0, 1)`, with roughly one atom in eight left null.
fn masses(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| if rng.gen_bool(0.125) { 0.0 } else { rng.gen() }).collect()
}

fn rows(rng: &mut ChaCha8Rng, n: usize, d: usize, scale: f64) -> Vec<Vec<f64>> {
    (0..n).map(|_| (0..d).map(|_| rng.gen_range(-scale..scale)).collect()).collect()
}

/// A random real function: a cubic plus, half the time, a sine.
fn random_terms(rng: &mut ChaCha8Rng) -> Vec<Term> {
    let mut terms = vec![Term::Poly((0..4).map(|_| rng.gen_range(-1.0..1.0)).collect())];
    if rng.gen_bool(0.5) {
        terms.push(Term::Sin {
            amp: rng.gen_range(-1.0..1.0),
            freq: rng.gen_range(0.5..3.0),
            phase: rng.gen_range(0.0..std::f64::consts::TAU),
        });
    }
    terms
}

/// `(f, F, μ, M, g)` on a finite space.
#[derive(Debug, Clone)]
pub struct FiniteCase {
    pub space: SpaceRef,
    pub norm: Norm,
    pub mu: ScalarMeasure,
    /// Scalar `f`; takes few distinct values so its level sets merge atoms.
    pub f: ScalarTable,
    pub big_f: VectorTable,
    pub m: VectorMeasure,
    /// Outer function `g` applied to `f`.
    pub g: Vec<Term>,
}

pub fn finite_case(seed: u64, index: usize) -> FiniteCase {
    let mut rng = case_rng(seed, index);
    let n = rng.gen_range(1..=MAX_ATOMS);
    let d = rng.gen_range(1..=MAX_DIM);
    let norm = Norm::ALL[index % 3];
    let space = labels(n);
    let levels: Vec<f64> = (0..rng.gen_range(1..=n.min(8))).map(|_| rng.gen_range(-3.0..3.0)).collect();
    let f = (0..n).map(|_| *levels.choose(&mut rng).unwrap()).collect();
    let mu = ScalarMeasure::new(space.clone(), masses(&mut rng, n)).unwrap();
    let big_f = VectorTable::new(rows(&mut rng, n, d, 2.0)).unwrap();
    let m = VectorMeasure::from_rows(space.clone(), rows(&mut rng, n, d, 1.0), norm).unwrap();
    let g = random_terms(&mut rng);
    FiniteCase { space, norm, mu, f: ScalarTable(f), big_f, m, g }
}

/// Two nested partitions `coarse ⊆ fine` with data for every conditional-expectation law.
#[derive(Debug, Clone)]
pub struct NestedCase {
    pub space: SpaceRef,
    pub norm: Norm,
    pub mu: ScalarMeasure,
    pub coarse: Partition,
    pub fine: Partition,
    pub big_f: VectorTable,
    pub big_g: VectorTable,
    pub alpha: f64,
    pub beta: f64,
    /// Scalar constant on every coarse block.
    pub h: ScalarTable,
}

pub fn nested_case(seed: u64, index: usize) -> NestedCase {
    let mut rng = case_rng(seed, index);
    let n = rng.gen_range(2..=MAX_ATOMS);
    let d = rng.gen_range(1..=MAX_DIM);
    let norm = Norm::ALL[index % 3];
    let space = labels(n);
    let fine_count = rng.gen_range(1..=n.min(12));
    let coarse_count = rng.gen_range(1..=fine_count);
    // every fine label is used at least once, then the rest are random
    let mut fine_of: Vec<usize> = (0..n).map(|i| if i < fine_count { i } else { rng.gen_range(0..fine_count) }).collect();
    fine_of.shuffle(&mut rng);
    let coarse_of_fine: Vec<usize> =
        (0..fine_count).map(|j| if j < coarse_count { j } else { rng.gen_range(0..coarse_count) }).collect();
    let group = |count: usize, key: &dyn Fn(usize) -> usize| -> Vec<AtomSet> {
        (0..count).map(|b| AtomSet::new((0..n).filter(|&a| key(a) == b))).filter(|s| !s.is_empty()).collect()
    };
    let fine = Partition::new(space.clone(), group(fine_count, &|a| fine_of[a])).unwrap();
    let coarse = Partition::new(space.clone(), group(coarse_count, &|a| coarse_of_fine[fine_of[a]])).unwrap();
    let mu = ScalarMeasure::new(space.clone(), masses(&mut rng, n)).unwrap();
    let big_f = VectorTable::new(rows(&mut rng, n, d, 2.0)).unwrap();
    let big_g = VectorTable::new(rows(&mut rng, n, d, 2.0)).unwrap();
    let block_h: Vec<f64> = (0..coarse_count).map(|_| rng.gen_range(-3.0..3.0)).collect();
    let h = (0..n).map(|a| block_h[coarse_of_fine[fine_of[a]]]).collect();
    NestedCase {
        space,
        norm,
        mu,
        coarse,
        fine,
        big_f,
        big_g,
        alpha: rng.gen_range(-2.0..2.0),
        beta: rng.gen_range(-2.0..2.0),
        h: ScalarTable(h),
    }
}

/// A smooth integrand on a grid, one term list per coordinate, and a scalar `f`.
#[derive(Debug, Clone)]
pub struct GridCase {
    pub space: SpaceRef,
    pub mu: ScalarMeasure,
    pub coords: Vec<Vec<Term>>,
    /// Linear scalar with `|f| < 3`, so it crosses up to three bands.
    pub f: Vec<Term>,
    /// `10^-(2 + index mod 5)`: the decades 1e-2 to 1e-6 in turn.
    pub eps: f64,
}

/// Intervals of width at most 1, densities at most 1.5, and coordinates that are cubics
/// with coefficients in `(-1, 1)` or sines with frequency below 3. The first-order
/// certificate needs about `(∫ (‖F'‖·dμ/dt)^½ dt)² / eps` blocks, which at `eps = 1e-6`
/// can exceed the default budget of 10⁶ by a small factor.
pub fn grid_case(seed: u64, index: usize) -> GridCase {
    let mut rng = case_rng(seed, index);
    let a = rng.gen_range(-1.0..0.0);
    let b = a + rng.gen_range(0.5..=1.0);
    let cells = rng.gen_range(1..=8);
    let space = SpaceModel::grid(a, b, cells).unwrap();
    let width = (b - a) / cells as f64;
    let mu = if rng.gen_bool(0.5) {
        ScalarMeasure::lebesgue(space.clone())
    } else {
        ScalarMeasure::new(space.clone(), (0..cells).map(|_| width * rng.gen_range(0.25..1.5)).collect()).unwrap()
    };
    let d = rng.gen_range(1..=3);
    let coords = (0..d)
        .map(|_| {
            if rng.gen_bool(0.5) {
                vec![Term::Poly((0..rng.gen_range(1..=4)).map(|_| rng.gen_range(-1.0..1.0)).collect())]
            } else {
                vec![Term::Sin {
                    amp: rng.gen_range(-1.0..1.0),
                    freq: rng.gen_range(0.5..3.0),
                    phase: rng.gen_range(0.0..std::f64::consts::TAU),
                }]
            }
        })
        .collect();
    let f = vec![Term::Poly(vec![rng.gen_range(-1.0..1.0), rng.gen_range(-2.0..2.0)])];
    let eps = 10f64.powi(-2 - (index % 5) as i32);
    GridCase { space, mu, coords, f, eps }
}
