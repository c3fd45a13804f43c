//! Greedy bisection of grid blocks driven by sampled oscillation.
//!
//! Each block is evaluated at `k` candidate tags: the midpoint (the tag that goes into
//! the returned sum), the two ends, and `k - 3` pseudo-random interior points derived
//! from the seed and the block bounds. The evaluator reports the block's contribution at
//! the midpoint and an oscillation bound; the block with the largest bound is bisected
//! until the summed bound drops to `eps` or the block budget runs out.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{BmgError, Result};

/// A sub-interval of one base cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Piece {
    pub cell: usize,
    pub lo: f64,
    pub hi: f64,
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct Evaluated {
    pub piece: Piece,
    pub osc: f64,
}

pub(crate) struct Refined {
    /// Pieces in canonical `(cell, lo)` order.
    pub pieces: Vec<Evaluated>,
    pub value: Vec<f64>,
    pub bound: f64,
    pub rounds: usize,
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct RefineParams {
    pub eps: f64,
    pub samples: usize,
    pub max_blocks: usize,
    pub seed: u64,
    pub dim: usize,
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Candidate tags of `[lo, hi)`; index 0 is the midpoint.
pub(crate) fn sample_tags(lo: f64, hi: f64, k: usize, seed: u64, out: &mut Vec<f64>) {
    out.clear();
    let w = hi - lo;
    out.push(lo + 0.5 * w);
    out.push(lo);
    // largest representable point below hi, kept inside the half-open block
    let top = lo + w * (1.0 - f64::EPSILON);
    out.push(if top < hi { top } else { lo });
    if k > 3 {
        let s = splitmix(seed ^ splitmix(lo.to_bits()) ^ splitmix(hi.to_bits().rotate_left(17)));
        let mut rng = ChaCha8Rng::seed_from_u64(s);
        for _ in 3..k {
            out.push(lo + w * rng.gen::<f64>());
        }
    }
    out.truncate(k.max(1));
}

struct HeapItem {
    osc: f64,
    slot: usize,
}

impl PartialEq for HeapItem {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for HeapItem {}
impl PartialOrd for HeapItem {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for HeapItem {
    fn cmp(&self, other: &Self) -> Ordering {
        self.osc.total_cmp(&other.osc).then(other.slot.cmp(&self.slot))
    }
}

/// Live blocks plus their contributions, stored flat with stride `dim`.
struct Store {
    slots: Vec<Option<Evaluated>>,
    contrib: Vec<f64>,
    dim: usize,
}

impl Store {
    fn live(&self) -> impl Iterator<Item = (usize, &Evaluated)> {
        self.slots.iter().enumerate().filter_map(|(i, e)| e.as_ref().map(|e| (i, e)))
    }

    fn bound(&self) -> f64 {
        self.live().map(|(_, e)| e.osc).sum()
    }

    fn finish(self, rounds: usize) -> Refined {
        let mut order: Vec<(usize, Evaluated)> = self.live().map(|(i, e)| (i, *e)).collect();
        order.sort_by(|(_, a), (_, b)| a.piece.cell.cmp(&b.piece.cell).then(a.piece.lo.total_cmp(&b.piece.lo)));
        let dim = self.dim;
        let mut value = vec![0.0; dim];
        let mut bound = 0.0;
        for (i, e) in &order {
            for (v, c) in value.iter_mut().zip(&self.contrib[i * dim..(i + 1) * dim]) {
                *v += c;
            }
            bound += e.osc;
        }
        Refined { pieces: order.into_iter().map(|(_, e)| e).collect(), value, bound, rounds }
    }

    fn give_up(self, eps: f64, blocks: usize, rounds: usize) -> BmgError {
        let r = self.finish(rounds);
        BmgError::NonConvergence { best_bound: r.bound, requested: eps, blocks }
    }
}

/// Refines `init` until the summed oscillation bound is at most `params.eps`.
///
/// `eval(piece, tags, out)` writes the piece's contribution into `out` and returns its
/// oscillation bound.
pub(crate) fn refine<E>(init: Vec<Piece>, params: RefineParams, mut eval: E) -> Result<Refined>
where
    E: FnMut(Piece, &[f64], &mut [f64]) -> f64,
{
    let dim = params.dim;
    let mut tags = Vec::with_capacity(params.samples.max(3));
    let mut store = Store { slots: Vec::with_capacity(init.len()), contrib: Vec::new(), dim };
    let mut run = |store: &mut Store, slot: usize, piece: Piece| {
        sample_tags(piece.lo, piece.hi, params.samples, params.seed, &mut tags);
        if slot == store.slots.len() {
            store.slots.push(None);
            store.contrib.resize(store.contrib.len() + dim, 0.0);
        }
        let out = &mut store.contrib[slot * dim..(slot + 1) * dim];
        out.fill(0.0);
        let osc = eval(piece, &tags, out);
        store.slots[slot] = Some(Evaluated { piece, osc });
        osc
    };

    let mut heap = BinaryHeap::with_capacity(init.len());
    for p in init {
        let slot = store.slots.len();
        let osc = run(&mut store, slot, p);
        heap.push(HeapItem { osc, slot });
    }
    let mut live = store.slots.len();
    let mut running = store.bound();
    let mut rounds = 0;

    loop {
        if running <= params.eps {
            // drift check: recompute in a fixed order before accepting
            running = store.bound();
            if running <= params.eps {
                break;
            }
        }
        if live >= params.max_blocks {
            return Err(store.give_up(params.eps, live, rounds));
        }
        let Some(top) = heap.pop() else {
            return Err(store.give_up(params.eps, live, rounds));
        };
        if top.osc <= 0.0 {
            // nothing left to gain by splitting; only drift keeps running above eps
            running = store.bound();
            if running <= params.eps {
                break;
            }
            return Err(store.give_up(params.eps, live, rounds));
        }
        let parent = store.slots[top.slot].expect("heap entries point at live slots");
        let Piece { cell, lo, hi } = parent.piece;
        let mid = lo + 0.5 * (hi - lo);
        if !(lo < mid && mid < hi) {
            // interval at float resolution; keep it but stop offering it for splitting
            continue;
        }
        let right_slot = store.slots.len();
        let left = run(&mut store, top.slot, Piece { cell, lo, hi: mid });
        let right = run(&mut store, right_slot, Piece { cell, lo: mid, hi });
        running += left + right - parent.osc;
        rounds += 1;
        live += 1;
        heap.push(HeapItem { osc: left, slot: top.slot });
        heap.push(HeapItem { osc: right, slot: right_slot });
    }
    Ok(store.finish(rounds))
}

/// Largest pairwise distance among `k` points stored row-major with stride `dim`.
pub(crate) fn diameter(values: &[f64], dim: usize, norm: crate::vector::Norm) -> f64 {
    let k = values.len() / dim;
    let mut best: f64 = 0.0;
    for i in 0..k {
        for j in (i + 1)..k {
            best = best.max(norm.dist(&values[i * dim..(i + 1) * dim], &values[j * dim..(j + 1) * dim]));
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tags_stay_inside_and_are_reproducible() {
        let mut a = Vec::new();
        let mut b = Vec::new();
        sample_tags(0.25, 0.5, 8, 42, &mut a);
        sample_tags(0.25, 0.5, 8, 42, &mut b);
        assert_eq!(a, b);
        assert_eq!(a.len(), 8);
        assert_eq!(a[0], 0.375);
        assert!(a.iter().all(|&t| (0.25..0.5).contains(&t)));
    }

    #[test]
    fn budget_exhaustion_is_an_error() {
        let init = vec![Piece { cell: 0, lo: 0.0, hi: 1.0 }];
        let params = RefineParams { eps: 1e-9, samples: 4, max_blocks: 16, seed: 0, dim: 1 };
        let err = refine(init, params, |p, _, out| {
            out[0] = p.hi - p.lo;
            p.hi - p.lo
        }).err().unwrap();
        match err {
            BmgError::NonConvergence { best_bound, blocks, .. } => {
                assert_eq!(blocks, 16);
                assert!(best_bound > 1e-9);
            }
            e => panic!("unexpected {e:?}"),
        }
    }
}
