//! Sub-σ-algebras generated by partitions or functions, and conditional expectations.

use crate::birkhoff::{b1_integrate, EngineOptions};
use crate::error::{BmgError, Result};
use crate::func::{ScalarFn, VectorFn};
use crate::measure::{level_sets, ScalarMeasure};
use crate::space::{common_refinement, is_finer, AtomSet, Partition, Point, SpaceModel, SpaceRef};
use crate::vector::VectorValue;

/// A sub-σ-algebra given by its generating partition (its atoms).
#[derive(Debug, Clone, PartialEq)]
pub struct SubSigmaAlgebra {
    partition: Partition,
    /// For `σ(f)`: the value of `f` on each block, aligned with the blocks.
    levels: Option<Vec<f64>>,
}

impl SubSigmaAlgebra {
    pub fn from_partition(partition: Partition) -> Self {
        SubSigmaAlgebra { partition, levels: None }
    }

    /// `{∅, T}`
    pub fn trivial(space: SpaceRef) -> Self {
        Self::from_partition(Partition::trivial(space))
    }

    /// The full σ-algebra of the space.
    pub fn full(space: SpaceRef) -> Self {
        Self::from_partition(Partition::atomic(space))
    }

    pub fn partition(&self) -> &Partition {
        &self.partition
    }

    pub fn blocks(&self) -> &[AtomSet] {
        self.partition.blocks()
    }

    pub fn space(&self) -> &SpaceRef {
        self.partition.space()
    }

    pub fn levels(&self) -> Option<&[f64]> {
        self.levels.as_deref()
    }

    /// `self ⊆ other`, i.e. `other`'s blocks refine `self`'s.
    pub fn is_sub_of(&self, other: &SubSigmaAlgebra) -> Result<bool> {
        is_finer(&other.partition, &self.partition)
    }

    /// The σ-algebra generated by both.
    pub fn join(&self, other: &SubSigmaAlgebra) -> Result<SubSigmaAlgebra> {
        Ok(Self::from_partition(common_refinement(&self.partition, &other.partition)?))
    }

    /// `true` iff `g` takes one value on every block.
    pub fn measures<S: ScalarFn + ?Sized>(&self, g: &S) -> bool {
        let space = self.space();
        self.blocks().iter().all(|b| {
            let first = g.eval(space.representative(b.ids()[0]));
            b.iter().all(|i| g.eval(space.representative(i)) == first)
        })
    }
}

/// `σ(f)`: blocks are the level sets of `f` (tags of atoms, midpoints of cells).
pub fn sigma_of<S: ScalarFn + ?Sized>(space: &SpaceRef, f: &S) -> Result<SubSigmaAlgebra> {
    let groups = level_sets(space, f)?;
    let blocks: Vec<AtomSet> = groups.iter().map(|(_, s)| s.clone()).collect();
    let partition = Partition::new(space.clone(), blocks)?;
    let levels = partition
        .blocks()
        .iter()
        .map(|b| f.eval(space.representative(b.ids()[0])) + 0.0)
        .collect();
    Ok(SubSigmaAlgebra { partition, levels: Some(levels) })
}

/// `Z = E(F | ℰ)`: one value per generating block.
#[derive(Debug, Clone)]
pub struct ConditionalExpectation {
    sub: SubSigmaAlgebra,
    owner: Vec<usize>,
    values: Vec<VectorValue>,
    null_blocks: Vec<bool>,
    bounds: Vec<f64>,
}

impl ConditionalExpectation {
    pub fn sub_algebra(&self) -> &SubSigmaAlgebra {
        &self.sub
    }

    /// Values per generating block, aligned with `sub_algebra().blocks()`.
    pub fn block_values(&self) -> &[VectorValue] {
        &self.values
    }

    /// Blocks with `μ(B) = 0`; their value is fixed to zero.
    pub fn null_blocks(&self) -> &[bool] {
        &self.null_blocks
    }

    /// Certified error of each block integral (0 on finite spaces).
    pub fn block_bounds(&self) -> &[f64] {
        &self.bounds
    }

    pub fn at_atom(&self, i: usize) -> &VectorValue {
        &self.values[self.owner[i]]
    }

    /// The factor map `h` with `Z = h(f)`, when ℰ was built by [`sigma_of`].
    pub fn factor(&self) -> Option<Vec<(f64, VectorValue)>> {
        let levels = self.sub.levels()?;
        let mut h: Vec<(f64, VectorValue)> = levels.iter().copied().zip(self.values.iter().cloned()).collect();
        h.sort_by(|a, b| a.0.total_cmp(&b.0));
        Some(h)
    }

    /// `h(c)`, if `c` is a value of the generating function.
    pub fn factor_at(&self, c: f64) -> Option<&VectorValue> {
        let levels = self.sub.levels()?;
        levels.iter().position(|&l| l == c + 0.0).map(|b| &self.values[b])
    }
}

impl VectorFn for ConditionalExpectation {
    fn dim(&self) -> usize {
        self.values[0].dim()
    }

    fn eval_into(&self, t: Point, out: &mut [f64]) {
        let atom = match (t, &**self.sub.space()) {
            (Point::Atom(i), _) => i,
            (Point::Real(x), SpaceModel::Grid { a, b, cells }) => {
                let h = (b - a) / *cells as f64;
                (((x - a) / h).floor().max(0.0) as usize).min(cells - 1)
            }
            (Point::Real(_), SpaceModel::Finite { .. }) => panic!("real point on a finite space"),
        };
        out.copy_from_slice(self.at_atom(atom).coords());
    }
}

/// `E(F | ℰ)`: `(∫_B F dμ) / μ(B)` on each generating block `B`, zero on μ-null blocks.
///
/// On grids each block is integrated at `eps / blocks`.
pub fn conditional_expectation<F: VectorFn + ?Sized>(
    f: &F,
    mu: &ScalarMeasure,
    sub: &SubSigmaAlgebra,
    eps: f64,
    opts: &EngineOptions,
) -> Result<ConditionalExpectation> {
    if **mu.space() != **sub.space() {
        return Err(BmgError::MismatchedSpace);
    }
    let per_block = eps / sub.blocks().len() as f64;
    let mut values = Vec::with_capacity(sub.blocks().len());
    let mut null_blocks = Vec::with_capacity(values.capacity());
    let mut bounds = Vec::with_capacity(values.capacity());
    for block in sub.blocks() {
        let mass = mu.of_set(block);
        if mass == 0.0 {
            values.push(VectorValue::zeros(f.dim(), opts.norm));
            null_blocks.push(true);
            bounds.push(0.0);
            continue;
        }
        let r = b1_integrate(f, mu, block, per_block, opts)?;
        values.push(r.value.scale(1.0 / mass));
        null_blocks.push(false);
        bounds.push(r.certified_bound);
    }
    Ok(ConditionalExpectation {
        owner: sub.partition().owner_table(),
        sub: sub.clone(),
        values,
        null_blocks,
        bounds,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::func::{ScalarTable, VectorTable};

    fn four() -> (ScalarMeasure, VectorTable) {
        let s = crate::space::SpaceModel::finite(["a", "b", "c", "d"]).unwrap();
        let mu = ScalarMeasure::new(s, vec![1.0 / 8.0, 1.0 / 8.0, 2.0 / 8.0, 4.0 / 8.0]).unwrap();
        let f = VectorTable::new(vec![vec![1.0, 0.0], vec![3.0, 0.0], vec![0.0, 2.0], vec![0.0, 6.0]]).unwrap();
        (mu, f)
    }

    #[test]
    fn sigma_of_examples() {
        let s = crate::space::SpaceModel::finite(["a", "b", "c"]).unwrap();
        assert_eq!(sigma_of(&s, &|_: Point| 4.0).unwrap().blocks().len(), 1);
        assert_eq!(sigma_of(&s, &ScalarTable(vec![1.0, 2.0, 3.0])).unwrap().blocks().len(), 3);
        let e = sigma_of(&s, &ScalarTable(vec![1.0, 1.0, 2.0])).unwrap();
        assert_eq!(e.blocks(), &[AtomSet::new([0, 1]), AtomSet::new([2])]);
        assert_eq!(e.levels().unwrap(), &[1.0, 2.0]);
    }

    #[test]
    fn block_ratio_example() {
        let (mu, f) = four();
        let sub = SubSigmaAlgebra::from_partition(
            Partition::new(mu.space().clone(), vec![AtomSet::new([0, 1]), AtomSet::new([2, 3])]).unwrap(),
        );
        let z = conditional_expectation(&f, &mu, &sub, 1e-9, &EngineOptions::default()).unwrap();
        assert_eq!(z.block_values()[0].coords(), &[2.0, 0.0]);
        let second = z.block_values()[1].coords();
        assert_eq!(second[0], 0.0);
        assert!((second[1] - 14.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn trivial_and_full_algebras() {
        let (mu, f) = four();
        let opts = EngineOptions::default();
        let z = conditional_expectation(&f, &mu, &SubSigmaAlgebra::trivial(mu.space().clone()), 1e-9, &opts).unwrap();
        // ∫ F dμ = (1/8 + 3/8, 4/8 + 24/8) and μ(T) = 1
        assert_eq!(z.at_atom(3).coords(), &[0.5, 3.5]);
        let z = conditional_expectation(&f, &mu, &SubSigmaAlgebra::full(mu.space().clone()), 1e-9, &opts).unwrap();
        for i in 0..4 {
            assert_eq!(z.at_atom(i).coords(), f.rows()[i].as_slice());
        }
    }

    #[test]
    fn null_blocks_are_flagged_and_zero() {
        let s = crate::space::SpaceModel::finite_n(3).unwrap();
        let mu = ScalarMeasure::new(s.clone(), vec![0.0, 0.5, 0.5]).unwrap();
        let f = VectorTable::new(vec![vec![9.0], vec![1.0], vec![3.0]]).unwrap();
        let z = conditional_expectation(&f, &mu, &SubSigmaAlgebra::full(s), 1e-9, &EngineOptions::default()).unwrap();
        assert_eq!(z.null_blocks(), &[true, false, false]);
        assert!(z.at_atom(0).is_zero());
    }

    #[test]
    fn factor_map_matches_levels() {
        let (mu, f) = four();
        let g = ScalarTable(vec![5.0, 5.0, -1.0, -1.0]);
        let sub = sigma_of(mu.space(), &g).unwrap();
        let z = conditional_expectation(&f, &mu, &sub, 1e-9, &EngineOptions::default()).unwrap();
        for i in 0..4 {
            assert_eq!(z.factor_at(g.0[i]).unwrap(), z.at_atom(i));
        }
        let h = z.factor().unwrap();
        assert_eq!(h[0].0, -1.0);
    }
}
