//! Accurate integrals of `F` over single blocks, used for discrepancy terms.
//!
//! A 12-point and a 24-point Gauss–Legendre rule are compared on each piece; pieces whose
//! two estimates disagree by more than their share of the tolerance are bisected.

use std::num::NonZeroUsize;
use std::sync::OnceLock;

use gauss_quad::legendre::GaussLegendre;

use crate::func::VectorFn;
use crate::measure::ScalarMeasure;
use crate::space::{Block, Point};
use crate::vector::Norm;

use super::refine::Piece;

fn rules() -> &'static (GaussLegendre, GaussLegendre) {
    static RULES: OnceLock<(GaussLegendre, GaussLegendre)> = OnceLock::new();
    RULES.get_or_init(|| {
        (
            GaussLegendre::new(NonZeroUsize::new(12).unwrap()),
            GaussLegendre::new(NonZeroUsize::new(24).unwrap()),
        )
    })
}

fn apply<F: VectorFn + ?Sized>(rule: &GaussLegendre, f: &F, lo: f64, hi: f64, out: &mut [f64], scratch: &mut [f64]) {
    out.fill(0.0);
    let half = 0.5 * (hi - lo);
    let centre = 0.5 * (hi + lo);
    for &(x, w) in rule.as_node_weight_pairs() {
        f.eval_into(Point::Real(centre + half * x), scratch);
        for (o, s) in out.iter_mut().zip(scratch.iter()) {
            *o += w * s;
        }
    }
    out.iter_mut().for_each(|o| *o *= half);
}

/// `∫_piece F dμ` and an error estimate.
pub(crate) fn block_integral<F: VectorFn + ?Sized>(
    f: &F,
    mu: &ScalarMeasure,
    piece: Piece,
    tol: f64,
    norm: Norm,
) -> (Vec<f64>, f64) {
    let dim = f.dim();
    let (clo, chi) = mu.space().cell_bounds(piece.cell);
    let density = mu.of_block(&Block::Interval { cell: piece.cell, lo: clo, hi: chi }) / (chi - clo);
    let (coarse, fine) = rules();
    let mut total = vec![0.0; dim];
    let mut err = 0.0;
    let mut a = vec![0.0; dim];
    let mut b = vec![0.0; dim];
    let mut scratch = vec![0.0; dim];
    let mut stack = vec![(piece.lo, piece.hi, 0u32)];
    let width = piece.hi - piece.lo;
    while let Some((lo, hi, depth)) = stack.pop() {
        apply(coarse, f, lo, hi, &mut a, &mut scratch);
        apply(fine, f, lo, hi, &mut b, &mut scratch);
        let e = norm.dist(&a, &b) * density;
        let share = tol * (hi - lo) / width;
        let mid = lo + 0.5 * (hi - lo);
        if e <= share || depth >= 40 || !(lo < mid && mid < hi) {
            for (t, x) in total.iter_mut().zip(&b) {
                *t += x * density;
            }
            err += e;
        } else {
            stack.push((mid, hi, depth + 1));
            stack.push((lo, mid, depth + 1));
        }
    }
    (total, err)
}
