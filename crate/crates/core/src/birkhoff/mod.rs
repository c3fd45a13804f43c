//! B₁ and B₂ integration engines.
//!
//! `b1_integrate` sums `F(t)·μ(A)` for a vector function against a scalar measure and
//! `b2_integrate` sums `f(t)·M(A)` for a scalar function against a vector measure. On a
//! finite space the atomic partition is already finest, so both return the exact atom
//! sum with bound 0. On a grid the block partition is refined until every sampled tag
//! choice moves the sum by at most `eps` in total.

mod checks;
mod layered;
mod quad;
pub(crate) mod refine;

pub use checks::{check_change_of_variable, check_substitution, IdentityCheck};
pub use layered::{layered_partition, LayeredPartition};

use crate::error::{BmgError, Result};
use crate::func::{ScalarFn, VectorFn};
use crate::measure::{ScalarMeasure, VectorMeasure};
use crate::space::{same_space, AtomSet, Block, Point, SpaceModel, SpaceRef, TaggedPartition};
use crate::vector::{Norm, VectorValue};

use refine::{diameter, refine, Piece, RefineParams, Refined};

/// Knobs shared by both engines.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EngineOptions {
    /// Candidate tags sampled per block (midpoint, both ends, then random interior points).
    pub tag_samples: usize,
    /// Refinement budget in blocks.
    pub max_blocks: usize,
    pub seed: u64,
    /// Norm attached to B₁ results (B₂ results use the measure's norm).
    pub norm: Norm,
}

impl Default for EngineOptions {
    fn default() -> Self {
        EngineOptions { tag_samples: 8, max_blocks: 1_000_000, seed: 0, norm: Norm::L2 }
    }
}

impl EngineOptions {
    pub fn with_seed(self, seed: u64) -> Self {
        EngineOptions { seed, ..self }
    }

    pub fn with_norm(self, norm: Norm) -> Self {
        EngineOptions { norm, ..self }
    }
}

#[derive(Debug, Clone)]
pub struct IntegrationResult {
    pub value: VectorValue,
    /// Upper bound on how far any sampled tagged sum over `partition` strays from `value`.
    pub certified_bound: f64,
    pub partition: TaggedPartition,
    pub refinement_rounds: usize,
}

/// Per-block terms `‖F(t_j)μ(E_j) − ∫_{E_j} F dμ‖` for one tagged partition.
#[derive(Debug, Clone)]
pub struct DiscrepancyReport {
    pub terms: Vec<f64>,
    pub sum: f64,
    /// Accumulated certified error of the block integrals (0 on finite spaces).
    pub inner_bound: f64,
    pub partition: TaggedPartition,
}

fn check_eps(eps: f64) -> Result<()> {
    if eps > 0.0 && eps.is_finite() {
        Ok(())
    } else {
        Err(BmgError::InvalidInput(format!("tolerance must be positive, got {eps}")))
    }
}

fn check_set(space: &SpaceModel, set: &AtomSet) -> Result<()> {
    match set.ids().last() {
        Some(&i) if i >= space.len() => Err(BmgError::InvalidInput(format!("set index {i} is outside the space"))),
        _ => Ok(()),
    }
}

fn pieces_of(space: &SpaceModel, set: &AtomSet) -> Vec<Piece> {
    set.iter()
        .map(|c| {
            let (lo, hi) = space.cell_bounds(c);
            Piece { cell: c, lo, hi }
        })
        .collect()
}

fn tagged_from(space: &SpaceRef, r: &Refined) -> TaggedPartition {
    let blocks = r
        .pieces
        .iter()
        .map(|e| Block::Interval { cell: e.piece.cell, lo: e.piece.lo, hi: e.piece.hi })
        .collect();
    let tags = r.pieces.iter().map(|e| Point::Real(0.5 * (e.piece.lo + e.piece.hi))).collect();
    TaggedPartition::new(space.clone(), blocks, tags).expect("midpoints lie inside their pieces")
}

/// Refinement of `F` against `mu` starting from `init`; shared by B₁, the conditional
/// expectation, the discrepancy inner integrals and the layered partition.
pub(crate) fn b1_refine<F: VectorFn + ?Sized>(
    f: &F,
    mu: &ScalarMeasure,
    init: Vec<Piece>,
    eps: f64,
    opts: &EngineOptions,
) -> Result<Refined> {
    let dim = f.dim();
    let norm = opts.norm;
    let params = RefineParams { eps, samples: opts.tag_samples.max(3), max_blocks: opts.max_blocks, seed: opts.seed, dim };
    let mut buf = Vec::new();
    let buf_cell = std::cell::RefCell::new(&mut buf);
    refine(init, params, |piece, tags, out| {
        let mass = mu.of_block(&Block::Interval { cell: piece.cell, lo: piece.lo, hi: piece.hi });
        let mut vals = buf_cell.borrow_mut();
        vals.clear();
        vals.resize(tags.len() * dim, 0.0);
        for (j, &t) in tags.iter().enumerate() {
            f.eval_into(Point::Real(t), &mut vals[j * dim..(j + 1) * dim]);
        }
        for (o, x) in out.iter_mut().zip(&vals[..dim]) {
            *o = x * mass;
        }
        if mass == 0.0 { 0.0 } else { diameter(&vals, dim, norm) * mass }
    })
}

/// B₁ integral `∫_A F dμ`.
pub fn b1_integrate<F: VectorFn + ?Sized>(
    f: &F,
    mu: &ScalarMeasure,
    set: &AtomSet,
    eps: f64,
    opts: &EngineOptions,
) -> Result<IntegrationResult> {
    check_eps(eps)?;
    check_set(mu.space(), set)?;
    let dim = f.dim();
    let space = mu.space().clone();
    if space.is_finite() {
        let mut value = VectorValue::zeros(dim, opts.norm);
        let mut row = vec![0.0; dim];
        for i in set.iter() {
            f.eval_into(Point::Atom(i), &mut row);
            let m = mu.atom(i);
            for (v, x) in value.coords_mut().iter_mut().zip(&row) {
                *v += x * m;
            }
        }
        return Ok(IntegrationResult {
            value,
            certified_bound: 0.0,
            partition: TaggedPartition::atomic_on(space, set),
            refinement_rounds: 0,
        });
    }
    let r = b1_refine(f, mu, pieces_of(&space, set), eps, opts)?;
    Ok(IntegrationResult {
        value: VectorValue::new(r.value.clone(), opts.norm),
        certified_bound: r.bound,
        partition: tagged_from(&space, &r),
        refinement_rounds: r.rounds,
    })
}

/// B₂ integral `∫_A f dM`.
pub fn b2_integrate<S: ScalarFn + ?Sized>(
    f: &S,
    m: &VectorMeasure,
    set: &AtomSet,
    eps: f64,
    opts: &EngineOptions,
) -> Result<IntegrationResult> {
    check_eps(eps)?;
    let space = m.space().clone();
    check_set(&space, set)?;
    if space.is_finite() {
        let mut value = m.zero_value();
        for i in set.iter() {
            value.add_scaled(f.eval(Point::Atom(i)), m.atom(i));
        }
        return Ok(IntegrationResult {
            value,
            certified_bound: 0.0,
            partition: TaggedPartition::atomic_on(space, set),
            refinement_rounds: 0,
        });
    }
    let params = RefineParams {
        eps,
        samples: opts.tag_samples.max(3),
        max_blocks: opts.max_blocks,
        seed: opts.seed,
        dim: m.dim(),
    };
    let r = refine(pieces_of(&space, set), params, |piece, tags, out| {
        let mass = m.of_block(&Block::Interval { cell: piece.cell, lo: piece.lo, hi: piece.hi });
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        let mut at_mid = 0.0;
        for (j, &t) in tags.iter().enumerate() {
            let v = f.eval(Point::Real(t));
            if j == 0 {
                at_mid = v;
            }
            lo = lo.min(v);
            hi = hi.max(v);
        }
        for (o, c) in out.iter_mut().zip(mass.coords()) {
            *o = c * at_mid;
        }
        if mass.is_zero() { 0.0 } else { (hi - lo) * mass.norm() }
    })?;
    Ok(IntegrationResult {
        value: VectorValue::new(r.value.clone(), m.norm_tag()),
        certified_bound: r.bound,
        partition: tagged_from(&space, &r),
        refinement_rounds: r.rounds,
    })
}

/// The indefinite integral `A ↦ ∫_A F dμ`, tabulated on atoms/cells.
///
/// On grids each cell is integrated at `eps / cells` so the whole-space error stays
/// within `eps`.
pub fn indefinite<F: VectorFn + ?Sized>(
    f: &F,
    mu: &ScalarMeasure,
    eps: f64,
    opts: &EngineOptions,
) -> Result<VectorMeasure> {
    check_eps(eps)?;
    let space = mu.space().clone();
    let per_cell = eps / space.len() as f64;
    let values = (0..space.len())
        .map(|i| b1_integrate(f, mu, &AtomSet::new([i]), per_cell, opts).map(|r| r.value))
        .collect::<Result<Vec<_>>>()?;
    VectorMeasure::new(space, values)
}

/// Discrepancy of a tagged partition against the block integrals of `F`.
///
/// Block integrals are exact on finite spaces. On grids each block is integrated by
/// adaptive Gauss–Legendre at `inner_eps / blocks`; `inner_bound` accumulates the
/// estimated quadrature error.
pub fn discrepancy<F: VectorFn + ?Sized>(
    f: &F,
    mu: &ScalarMeasure,
    tp: &TaggedPartition,
    inner_eps: f64,
    opts: &EngineOptions,
) -> Result<DiscrepancyReport> {
    check_eps(inner_eps)?;
    same_space(mu.space(), tp.space())?;
    let dim = f.dim();
    let norm = opts.norm;
    let space = mu.space().clone();
    let per_block = inner_eps / tp.len().max(1) as f64;
    let mut terms = Vec::with_capacity(tp.len());
    let mut inner_bound = 0.0;
    let mut at_tag = vec![0.0; dim];
    for (block, tag) in tp.iter() {
        let integral = match (&*space, block) {
            (SpaceModel::Finite { .. }, Block::Atoms(s)) => b1_integrate(f, mu, s, per_block, opts)?,
            (SpaceModel::Grid { .. }, Block::Atoms(s)) => {
                let share = per_block / s.len() as f64;
                let mut value = vec![0.0; dim];
                let mut err = 0.0;
                for c in s.iter() {
                    let (lo, hi) = space.cell_bounds(c);
                    let (v, e) = quad::block_integral(f, mu, Piece { cell: c, lo, hi }, share, norm);
                    value.iter_mut().zip(&v).for_each(|(a, b)| *a += b);
                    err += e;
                }
                IntegrationResult {
                    value: VectorValue::new(value, norm),
                    certified_bound: err,
                    partition: tp.clone(),
                    refinement_rounds: 0,
                }
            }
            (SpaceModel::Grid { .. }, Block::Interval { cell, lo, hi }) => {
                let (value, err) =
                    quad::block_integral(f, mu, Piece { cell: *cell, lo: *lo, hi: *hi }, per_block, norm);
                IntegrationResult {
                    value: VectorValue::new(value, norm),
                    certified_bound: err,
                    partition: tp.clone(),
                    refinement_rounds: 0,
                }
            }
            (SpaceModel::Finite { .. }, Block::Interval { .. }) => {
                return Err(BmgError::InvalidInput("interval block on a finite space".into()))
            }
        };
        inner_bound += integral.certified_bound;
        f.eval_into(tag, &mut at_tag);
        let mass = mu.of_block(block);
        let riemann: Vec<f64> = at_tag.iter().map(|x| x * mass).collect();
        terms.push(norm.dist(&riemann, integral.value.coords()));
    }
    let sum = terms.iter().sum();
    Ok(DiscrepancyReport { terms, sum, inner_bound, partition: tp.clone() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::func::{vector_fn, ScalarTable, VectorTable};
    use crate::space::SpaceModel;

    fn two_atoms() -> (ScalarMeasure, VectorTable) {
        let s = SpaceModel::finite(["a", "b"]).unwrap();
        let mu = ScalarMeasure::new(s, vec![0.25, 0.75]).unwrap();
        let f = VectorTable::new(vec![vec![1.0, 0.0], vec![0.0, 2.0]]).unwrap();
        (mu, f)
    }

    #[test]
    fn b1_two_atom_example() {
        let (mu, f) = two_atoms();
        let r = b1_integrate(&f, &mu, &mu.space().whole(), 1e-3, &EngineOptions::default()).unwrap();
        assert_eq!(r.value.coords(), &[0.25, 1.5]);
        assert_eq!(r.certified_bound, 0.0);
        assert_eq!(r.partition.len(), 2);
    }

    #[test]
    fn b1_constant_integrand_on_grid_is_exact() {
        let g = SpaceModel::grid(0.0, 3.0, 4).unwrap();
        let mu = ScalarMeasure::lebesgue(g);
        let c = vector_fn(2, |_, out: &mut [f64]| out.copy_from_slice(&[2.0, -1.0]));
        let r = b1_integrate(&c, &mu, &mu.space().whole(), 1e-6, &EngineOptions::default()).unwrap();
        assert!((r.value.coords()[0] - 6.0).abs() < 1e-12);
        assert!((r.value.coords()[1] + 3.0).abs() < 1e-12);
        assert_eq!(r.certified_bound, 0.0);
        assert_eq!(r.refinement_rounds, 0);
    }

    #[test]
    fn b1_full_period_trig_vanishes() {
        let g = SpaceModel::grid(0.0, 2.0 * std::f64::consts::PI, 8).unwrap();
        let mu = ScalarMeasure::lebesgue(g);
        let f = vector_fn(2, |t: Point, out: &mut [f64]| {
            let x = t.real();
            out[0] = x.sin();
            out[1] = x.cos();
        });
        let r = b1_integrate(&f, &mu, &mu.space().whole(), 1e-4, &EngineOptions::default()).unwrap();
        assert!(r.certified_bound <= 1e-4);
        assert!(r.value.norm() <= 1e-4, "{}", r.value);
    }

    #[test]
    fn b2_examples() {
        let s = SpaceModel::finite(["a", "b"]).unwrap();
        let m = VectorMeasure::from_rows(s.clone(), vec![vec![1.0, 1.0], vec![3.0, 0.0]], Norm::L2).unwrap();
        let whole = s.whole();
        let opts = EngineOptions::default();
        let one = b2_integrate(&|_: Point| 1.0, &m, &whole, 1e-3, &opts).unwrap();
        assert_eq!(one.value, m.total());
        let zero = b2_integrate(&|_: Point| 0.0, &m, &whole, 1e-3, &opts).unwrap();
        assert!(zero.value.is_zero());
        let r = b2_integrate(&ScalarTable(vec![2.0, -1.0]), &m, &whole, 1e-3, &opts).unwrap();
        assert_eq!(r.value.coords(), &[-1.0, 2.0]);
    }

    #[test]
    fn indefinite_examples() {
        let (mu, f) = two_atoms();
        let opts = EngineOptions::default();
        let m = indefinite(&f, &mu, 1e-6, &opts).unwrap();
        assert_eq!(m.atom(0).coords(), &[0.25, 0.0]);
        assert_eq!(m.atom(1).coords(), &[0.0, 1.5]);
        assert_eq!(m.total().coords(), &[0.25, 1.5]);
        assert!(m.of_set(&AtomSet::empty()).is_zero());
        let zero = indefinite(&vector_fn(3, |_, o: &mut [f64]| o.fill(0.0)), &mu, 1e-6, &opts).unwrap();
        assert!(zero.total().is_zero());
    }

    #[test]
    fn discrepancy_on_atomic_partition_vanishes() {
        let (mu, f) = two_atoms();
        let tp = TaggedPartition::atomic_on(mu.space().clone(), &mu.space().whole());
        let r = discrepancy(&f, &mu, &tp, 1e-9, &EngineOptions::default()).unwrap();
        assert_eq!(r.sum, 0.0);
    }

    #[test]
    fn discrepancy_midpoint_linear_is_zero() {
        let g = SpaceModel::grid(0.0, 1.0, 2).unwrap();
        let mu = ScalarMeasure::lebesgue(g.clone());
        let f = vector_fn(1, |t: Point, o: &mut [f64]| o[0] = t.real());
        let tp = crate::space::Partition::atomic(g).tagged();
        let r = discrepancy(&f, &mu, &tp, 1e-10, &EngineOptions::default()).unwrap();
        assert!(r.sum <= 1e-14, "{}", r.sum);
    }

    #[test]
    fn discrepancy_left_tags_quadratic() {
        let g = SpaceModel::grid(0.0, 1.0, 2).unwrap();
        let mu = ScalarMeasure::lebesgue(g.clone());
        let f = vector_fn(1, |t: Point, o: &mut [f64]| o[0] = t.real() * t.real());
        let tp = crate::space::Partition::atomic(g).tagged().retag(|b| match b {
            Block::Interval { lo, .. } => Point::Real(*lo),
            _ => unreachable!(),
        }).unwrap();
        let r = discrepancy(&f, &mu, &tp, 1e-12, &EngineOptions::default()).unwrap();
        // cell integrals 1/24 and 7/24; left-tag terms 0·1/2 and (1/4)·1/2
        let expected = 1.0 / 24.0 + (7.0 / 24.0 - 1.0 / 8.0);
        assert!((r.sum - expected).abs() < 1e-13, "{} vs {}", r.sum, expected);
    }

    #[test]
    fn rejects_nonpositive_eps() {
        let (mu, f) = two_atoms();
        assert!(b1_integrate(&f, &mu, &mu.space().whole(), 0.0, &EngineOptions::default()).is_err());
    }
}
