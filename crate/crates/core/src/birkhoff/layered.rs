//! Partitions refining the bands `H_j = {j − 1 ≤ |f| < j}`.
//!
//! Inside band `j` the B₁ refinement of `F` runs with budget `eps / (j·2^j)`. Because
//! `|f| < j` there, each block's double-sum term `|f(t)|·‖F(t)μ(E) − ∫_E F dμ‖` is at most
//! `j` times the block's oscillation bound, so the whole double sum is at most
//! `Σ_j eps / 2^j ≤ eps`.

use std::collections::BTreeMap;

use crate::error::{BmgError, Result};
use crate::func::{ScalarFn, VectorFn};
use crate::measure::ScalarMeasure;
use crate::space::{Block, Point, TaggedPartition};

use super::refine::Piece;
use super::{b1_refine, check_eps, EngineOptions};

#[derive(Debug, Clone)]
pub struct LayeredPartition {
    pub partition: TaggedPartition,
    /// Band index `j ≥ 1` of every block, aligned with `partition.blocks()`.
    pub bands: Vec<usize>,
    /// Certified upper bound on the double sum over every tag choice the engine sampled.
    pub certified_double_sum: f64,
}

/// Band index `j` with `j − 1 ≤ |x| < j`.
pub fn band_of(x: f64) -> usize {
    x.abs().floor() as usize + 1
}

fn crossing<S: ScalarFn + ?Sized>(f: &S, mut a: f64, mut b: f64) -> f64 {
    let band_a = band_of(f.eval(Point::Real(a)));
    for _ in 0..200 {
        let m = a + 0.5 * (b - a);
        if !(a < m && m < b) {
            break;
        }
        if band_of(f.eval(Point::Real(m))) == band_a {
            a = m;
        } else {
            b = m;
        }
    }
    b
}

fn homogeneous<S: ScalarFn + ?Sized>(f: &S, lo: f64, hi: f64, probes: usize) -> bool {
    let b0 = band_of(f.eval(Point::Real(lo)));
    (1..probes).all(|i| {
        let t = lo + (hi - lo) * i as f64 / probes as f64;
        band_of(f.eval(Point::Real(t))) == b0
    })
}

/// Splits `[lo, hi)` at the sampled band changes of `f`.
fn split_by_band<S: ScalarFn + ?Sized>(f: &S, cell: usize, lo: f64, hi: f64, depth: usize, out: &mut Vec<Piece>) {
    const PROBES: usize = 16;
    if depth > 24 || homogeneous(f, lo, hi, PROBES) || !(lo < lo + 0.5 * (hi - lo)) {
        out.push(Piece { cell, lo, hi });
        return;
    }
    let mut cuts = vec![lo];
    let mut prev = lo;
    for i in 1..=PROBES {
        let t = if i == PROBES { hi } else { lo + (hi - lo) * i as f64 / PROBES as f64 };
        let t_eval = if i == PROBES { lo + (hi - lo) * (1.0 - f64::EPSILON) } else { t };
        if band_of(f.eval(Point::Real(prev))) != band_of(f.eval(Point::Real(t_eval))) {
            let c = crossing(f, prev, t_eval);
            if c > *cuts.last().unwrap() && c < hi {
                cuts.push(c);
            }
        }
        prev = t_eval;
    }
    cuts.push(hi);
    for w in cuts.windows(2) {
        if w[0] < w[1] {
            split_by_band(f, cell, w[0], w[1], depth + 1, out);
        }
    }
}

pub fn layered_partition<S, F>(
    f: &S,
    big_f: &F,
    mu: &ScalarMeasure,
    eps: f64,
    opts: &EngineOptions,
) -> Result<LayeredPartition>
where
    S: ScalarFn + ?Sized,
    F: VectorFn + ?Sized,
{
    check_eps(eps)?;
    let space = mu.space().clone();
    if space.is_finite() {
        let whole = space.whole();
        let partition = TaggedPartition::atomic_on(space.clone(), &whole);
        let bands = whole.iter().map(|i| band_of(f.eval(Point::Atom(i)))).collect();
        return Ok(LayeredPartition { partition, bands, certified_double_sum: 0.0 });
    }

    let mut by_band: BTreeMap<usize, Vec<Piece>> = BTreeMap::new();
    for cell in 0..space.len() {
        let (lo, hi) = space.cell_bounds(cell);
        let mut pieces = Vec::new();
        split_by_band(f, cell, lo, hi, 0, &mut pieces);
        for p in pieces {
            let j = band_of(f.eval(Point::Real(p.lo + 0.5 * (p.hi - p.lo))));
            by_band.entry(j).or_default().push(p);
        }
    }

    let mut blocks = Vec::new();
    let mut tags = Vec::new();
    let mut band_of_block = Vec::new();
    let mut certified = 0.0;
    for (j, pieces) in by_band {
        let budget = eps / (j as f64 * 2f64.powi(j.min(1000) as i32));
        if budget == 0.0 {
            return Err(BmgError::NonConvergence { best_bound: f64::INFINITY, requested: eps, blocks: 0 });
        }
        let refined = b1_refine(big_f, mu, pieces, budget, opts).map_err(|e| match e {
            BmgError::NonConvergence { best_bound, blocks, .. } => {
                BmgError::NonConvergence { best_bound, requested: budget, blocks }
            }
            e => e,
        })?;
        certified += j as f64 * refined.bound;
        for e in refined.pieces {
            blocks.push(Block::Interval { cell: e.piece.cell, lo: e.piece.lo, hi: e.piece.hi });
            tags.push(Point::Real(e.piece.lo + 0.5 * (e.piece.hi - e.piece.lo)));
            band_of_block.push(j);
        }
    }
    // TaggedPartition::new re-sorts blocks; carry the band through the sort.
    let mut order: Vec<usize> = (0..blocks.len()).collect();
    order.sort_by(|&a, &b| match (&blocks[a], &blocks[b]) {
        (Block::Interval { cell: ca, lo: la, .. }, Block::Interval { cell: cb, lo: lb, .. }) => {
            ca.cmp(cb).then(la.total_cmp(lb))
        }
        _ => unreachable!(),
    });
    let bands = order.iter().map(|&i| band_of_block[i]).collect();
    let partition = TaggedPartition::new(space, blocks, tags)?;
    if certified > 2.0 * eps {
        return Err(BmgError::NonConvergence { best_bound: certified, requested: 2.0 * eps, blocks: partition.len() });
    }
    Ok(LayeredPartition { partition, bands, certified_double_sum: certified })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::func::{vector_fn, ScalarTable};
    use crate::space::SpaceModel;

    #[test]
    fn constant_half_is_single_band_on_finite_space() {
        let s = SpaceModel::finite_n(3).unwrap();
        let mu = ScalarMeasure::new(s, vec![0.2, 0.3, 0.5]).unwrap();
        let f = vector_fn(2, |t: Point, o: &mut [f64]| {
            o[0] = t.atom() as f64;
            o[1] = 1.0;
        });
        let lp = layered_partition(&|_: Point| 0.5, &f, &mu, 1e-3, &EngineOptions::default()).unwrap();
        assert_eq!(lp.partition.len(), 3);
        assert!(lp.bands.iter().all(|&b| b == 1));
        assert_eq!(lp.certified_double_sum, 0.0);
    }

    #[test]
    fn bands_follow_abs_value() {
        let s = SpaceModel::finite_n(4).unwrap();
        let mu = ScalarMeasure::new(s, vec![0.25; 4]).unwrap();
        let f = ScalarTable(vec![0.5, -1.5, 0.99, 1.0]);
        let one = vector_fn(1, |_, o: &mut [f64]| o[0] = 1.0);
        let lp = layered_partition(&f, &one, &mu, 1e-3, &EngineOptions::default()).unwrap();
        assert_eq!(lp.bands, vec![1, 2, 1, 2]);
    }

    #[test]
    fn grid_pieces_do_not_straddle_bands() {
        let g = SpaceModel::grid(0.0, 1.0, 3).unwrap();
        let mu = ScalarMeasure::lebesgue(g);
        let f = |t: Point| 3.0 * t.real();
        let one = vector_fn(1, |_, o: &mut [f64]| o[0] = 1.0);
        let lp = layered_partition(&f, &one, &mu, 1e-3, &EngineOptions::default()).unwrap();
        for ((b, _), &j) in lp.partition.iter().zip(&lp.bands) {
            let Block::Interval { lo, hi, .. } = b else { panic!() };
            let mid = 0.5 * (lo + hi);
            assert_eq!(band_of(f(Point::Real(mid))), j);
            assert!(band_of(3.0 * lo) == j || (3.0 * lo - (j as f64 - 1.0)).abs() < 1e-12);
        }
        assert!(lp.certified_double_sum <= 2e-3);
    }
}
