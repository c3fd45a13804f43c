//! Measurable spaces, measurable sets, partitions and tagged partitions.
//!
//! A space is either a finite set of labelled atoms or an interval `[a, b)` cut into
//! equal base cells. In both cases the σ-algebra is generated by the atoms (cells), so
//! a measurable set is a canonical sorted list of atom/cell indices. The integration
//! engines may split grid cells further; those pieces are carried as [`Block::Interval`].

use std::collections::{BTreeMap, HashSet};
use std::sync::Arc;

use crate::error::{BmgError, Result};

/// Shared handle to a space. Partitions and measures compare spaces structurally.
pub type SpaceRef = Arc<SpaceModel>;

#[derive(Debug, Clone, PartialEq)]
pub enum SpaceModel {
    Finite { labels: Vec<String> },
    Grid { a: f64, b: f64, cells: usize },
}

impl SpaceModel {
    pub fn finite<S: Into<String>>(labels: impl IntoIterator<Item = S>) -> Result<SpaceRef> {
        let labels: Vec<String> = labels.into_iter().map(Into::into).collect();
        if labels.is_empty() {
            return Err(BmgError::InvalidInput("a finite space needs at least one atom".into()));
        }
        let mut seen = HashSet::new();
        for l in &labels {
            if !seen.insert(l.as_str()) {
                return Err(BmgError::InvalidInput(format!("duplicate atom id `{l}`")));
            }
        }
        Ok(Arc::new(SpaceModel::Finite { labels }))
    }

    /// A finite space with atoms labelled `0..n`.
    pub fn finite_n(n: usize) -> Result<SpaceRef> {
        Self::finite((0..n).map(|i| i.to_string()))
    }

    pub fn grid(a: f64, b: f64, cells: usize) -> Result<SpaceRef> {
        if !(a.is_finite() && b.is_finite() && a < b) {
            return Err(BmgError::InvalidInput(format!("grid interval [{a}, {b}] is empty or not finite")));
        }
        if cells == 0 {
            return Err(BmgError::InvalidInput("a grid needs at least one cell".into()));
        }
        Ok(Arc::new(SpaceModel::Grid { a, b, cells }))
    }

    /// Number of generating atoms (finite) or base cells (grid).
    pub fn len(&self) -> usize {
        match self {
            SpaceModel::Finite { labels } => labels.len(),
            SpaceModel::Grid { cells, .. } => *cells,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, SpaceModel::Finite { .. })
    }

    pub fn whole(&self) -> AtomSet {
        AtomSet((0..self.len()).collect())
    }

    pub fn label(&self, i: usize) -> String {
        match self {
            SpaceModel::Finite { labels } => labels[i].clone(),
            SpaceModel::Grid { .. } => format!("cell{i}"),
        }
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        match self {
            SpaceModel::Finite { labels } => labels.iter().position(|l| l == label),
            SpaceModel::Grid { cells, .. } => label
                .strip_prefix("cell")
                .and_then(|s| s.parse().ok())
                .filter(|i| i < cells),
        }
    }

    pub fn cell_width(&self) -> Option<f64> {
        match self {
            SpaceModel::Grid { a, b, cells } => Some((b - a) / *cells as f64),
            SpaceModel::Finite { .. } => None,
        }
    }

    /// Bounds `[lo, hi)` of base cell `i` of a grid.
    pub fn cell_bounds(&self, i: usize) -> (f64, f64) {
        match self {
            SpaceModel::Grid { a, b, cells } => {
                let h = (b - a) / *cells as f64;
                let lo = a + h * i as f64;
                let hi = if i + 1 == *cells { *b } else { a + h * (i + 1) as f64 };
                (lo, hi)
            }
            SpaceModel::Finite { .. } => panic!("cell_bounds on a finite space"),
        }
    }

    /// The base block of atom/cell `i`.
    pub fn base_block(&self, i: usize) -> Block {
        match self {
            SpaceModel::Finite { .. } => Block::Atoms(AtomSet(vec![i])),
            SpaceModel::Grid { .. } => {
                let (lo, hi) = self.cell_bounds(i);
                Block::Interval { cell: i, lo, hi }
            }
        }
    }

    /// The canonical representative point of atom/cell `i` (the atom, or the cell midpoint).
    pub fn representative(&self, i: usize) -> Point {
        match self {
            SpaceModel::Finite { .. } => Point::Atom(i),
            SpaceModel::Grid { .. } => {
                let (lo, hi) = self.cell_bounds(i);
                Point::Real(0.5 * (lo + hi))
            }
        }
    }

    /// Grid with every base cell split into `factor` equal parts.
    pub fn split_cells(&self, factor: usize) -> Result<SpaceRef> {
        match self {
            SpaceModel::Grid { a, b, cells } if factor >= 1 => Self::grid(*a, *b, cells * factor),
            SpaceModel::Grid { .. } => Err(BmgError::InvalidInput("split factor must be ≥ 1".into())),
            SpaceModel::Finite { .. } => Err(BmgError::InvalidInput("only grid cells can be split".into())),
        }
    }
}

pub(crate) fn same_space(a: &SpaceRef, b: &SpaceRef) -> Result<()> {
    if Arc::ptr_eq(a, b) || **a == **b {
        Ok(())
    } else {
        Err(BmgError::MismatchedSpace)
    }
}

/// A measurable set: canonical sorted, deduplicated list of atom/cell indices.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct AtomSet(Vec<usize>);

impl AtomSet {
    pub fn new(ids: impl IntoIterator<Item = usize>) -> Self {
        let mut v: Vec<usize> = ids.into_iter().collect();
        v.sort_unstable();
        v.dedup();
        AtomSet(v)
    }

    pub fn empty() -> Self {
        AtomSet(Vec::new())
    }

    pub fn ids(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, id: usize) -> bool {
        self.0.binary_search(&id).is_ok()
    }

    pub fn is_subset(&self, other: &AtomSet) -> bool {
        self.0.iter().all(|&i| other.contains(i))
    }

    pub fn intersection(&self, other: &AtomSet) -> AtomSet {
        AtomSet(self.0.iter().copied().filter(|&i| other.contains(i)).collect())
    }

    pub fn union(&self, other: &AtomSet) -> AtomSet {
        AtomSet::new(self.0.iter().chain(&other.0).copied())
    }

    pub fn complement(&self, n: usize) -> AtomSet {
        AtomSet((0..n).filter(|&i| !self.contains(i)).collect())
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().copied()
    }
}

impl FromIterator<usize> for AtomSet {
    fn from_iter<I: IntoIterator<Item = usize>>(iter: I) -> Self {
        AtomSet::new(iter)
    }
}

/// A point of `T`: an atom of a finite space or a real number in a grid interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Point {
    Atom(usize),
    Real(f64),
}

impl Point {
    pub fn atom(self) -> usize {
        match self {
            Point::Atom(i) => i,
            Point::Real(_) => panic!("expected an atom, found a real point"),
        }
    }

    pub fn real(self) -> f64 {
        match self {
            Point::Real(t) => t,
            Point::Atom(_) => panic!("expected a real point, found an atom"),
        }
    }
}

/// A block of a tagged partition: a union of atoms, or a sub-interval of one grid cell.
#[derive(Debug, Clone, PartialEq)]
pub enum Block {
    Atoms(AtomSet),
    Interval { cell: usize, lo: f64, hi: f64 },
}

impl Block {
    pub fn contains(&self, p: Point) -> bool {
        match (self, p) {
            (Block::Atoms(s), Point::Atom(i)) => s.contains(i),
            (Block::Interval { lo, hi, .. }, Point::Real(t)) => *lo <= t && t < *hi,
            _ => false,
        }
    }

    pub fn is_empty(&self) -> bool {
        match self {
            Block::Atoms(s) => s.is_empty(),
            Block::Interval { lo, hi, .. } => !(lo < hi),
        }
    }

    /// Key used to put blocks in canonical order.
    fn order_key(&self) -> (usize, f64) {
        match self {
            Block::Atoms(s) => (s.ids().first().copied().unwrap_or(usize::MAX), 0.0),
            Block::Interval { cell, lo, .. } => (*cell, *lo),
        }
    }
}

/// A finite partition of `T` into nonempty, pairwise disjoint measurable sets.
#[derive(Debug, Clone)]
pub struct Partition {
    space: SpaceRef,
    blocks: Vec<AtomSet>,
}

impl PartialEq for Partition {
    fn eq(&self, other: &Self) -> bool {
        *self.space == *other.space && self.blocks == other.blocks
    }
}

impl Partition {
    pub fn new(space: SpaceRef, blocks: Vec<AtomSet>) -> Result<Self> {
        let n = space.len();
        let mut owner = vec![usize::MAX; n];
        for (b, block) in blocks.iter().enumerate() {
            if block.is_empty() {
                return Err(BmgError::InvalidInput(format!("partition block {b} is empty")));
            }
            for i in block.iter() {
                if i >= n {
                    return Err(BmgError::InvalidInput(format!("atom index {i} is outside the space")));
                }
                if owner[i] != usize::MAX {
                    return Err(BmgError::InvalidInput(format!(
                        "atom `{}` belongs to two blocks",
                        space.label(i)
                    )));
                }
                owner[i] = b;
            }
        }
        if let Some(i) = owner.iter().position(|&o| o == usize::MAX) {
            return Err(BmgError::InvalidInput(format!(
                "atom `{}` is not covered by the partition",
                space.label(i)
            )));
        }
        let mut blocks = blocks;
        blocks.sort();
        Ok(Partition { space, blocks })
    }

    /// The coarsest partition `{T}`.
    pub fn trivial(space: SpaceRef) -> Self {
        let whole = space.whole();
        Partition { space, blocks: vec![whole] }
    }

    /// The finest partition into single atoms (cells).
    pub fn atomic(space: SpaceRef) -> Self {
        let blocks = (0..space.len()).map(|i| AtomSet(vec![i])).collect();
        Partition { space, blocks }
    }

    /// Partition by the level sets of `key` over atoms; blocks ordered canonically.
    pub fn by_key<K: Ord>(space: SpaceRef, key: impl Fn(usize) -> K) -> Self {
        let mut groups: BTreeMap<K, Vec<usize>> = BTreeMap::new();
        for i in 0..space.len() {
            groups.entry(key(i)).or_default().push(i);
        }
        let mut blocks: Vec<AtomSet> = groups.into_values().map(AtomSet).collect();
        blocks.sort();
        Partition { space, blocks }
    }

    pub fn space(&self) -> &SpaceRef {
        &self.space
    }

    pub fn blocks(&self) -> &[AtomSet] {
        &self.blocks
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    /// Index of the block holding atom `i`.
    pub fn block_of(&self, i: usize) -> usize {
        self.blocks
            .iter()
            .position(|b| b.contains(i))
            .expect("partitions cover the space")
    }

    /// Per-atom block index table.
    pub fn owner_table(&self) -> Vec<usize> {
        let mut owner = vec![0; self.space.len()];
        for (b, block) in self.blocks.iter().enumerate() {
            for i in block.iter() {
                owner[i] = b;
            }
        }
        owner
    }

    /// Tags each block with its smallest atom (finite) or the midpoint of its first cell (grid).
    pub fn tagged(&self) -> TaggedPartition {
        let mut blocks = Vec::new();
        let mut tags = Vec::new();
        match &*self.space {
            SpaceModel::Finite { .. } => {
                for b in &self.blocks {
                    blocks.push(Block::Atoms(b.clone()));
                    tags.push(Point::Atom(b.ids()[0]));
                }
            }
            SpaceModel::Grid { .. } => {
                for b in &self.blocks {
                    for c in b.iter() {
                        blocks.push(self.space.base_block(c));
                        tags.push(self.space.representative(c));
                    }
                }
            }
        }
        TaggedPartition::new(self.space.clone(), blocks, tags).expect("canonical tags lie in their blocks")
    }
}

/// `true` iff every block of `finer` lies inside some block of `coarser`.
pub fn is_finer(finer: &Partition, coarser: &Partition) -> Result<bool> {
    same_space(&finer.space, &coarser.space)?;
    let owner = coarser.owner_table();
    Ok(finer.blocks.iter().all(|b| {
        let first = owner[b.ids()[0]];
        b.iter().all(|i| owner[i] == first)
    }))
}

/// All nonempty intersections `A ∩ A'` with `A ∈ p`, `A' ∈ q`.
pub fn common_refinement(p: &Partition, q: &Partition) -> Result<Partition> {
    same_space(&p.space, &q.space)?;
    let op = p.owner_table();
    let oq = q.owner_table();
    Ok(Partition::by_key(p.space.clone(), |i| (op[i], oq[i])))
}

/// A partition (possibly splitting grid cells) with one tag inside every block.
#[derive(Debug, Clone)]
pub struct TaggedPartition {
    space: SpaceRef,
    blocks: Vec<Block>,
    tags: Vec<Point>,
}

impl TaggedPartition {
    pub fn new(space: SpaceRef, blocks: Vec<Block>, tags: Vec<Point>) -> Result<Self> {
        if blocks.len() != tags.len() {
            return Err(BmgError::InvalidInput(format!(
                "{} blocks but {} tags",
                blocks.len(),
                tags.len()
            )));
        }
        for (n, (b, t)) in blocks.iter().zip(&tags).enumerate() {
            if b.is_empty() {
                return Err(BmgError::InvalidInput(format!("block {n} is empty")));
            }
            if !b.contains(*t) {
                return Err(BmgError::InvalidInput(format!("tag of block {n} lies outside the block")));
            }
        }
        let mut pairs: Vec<(Block, Point)> = blocks.into_iter().zip(tags).collect();
        pairs.sort_by(|x, y| {
            let (a, b) = (x.0.order_key(), y.0.order_key());
            a.0.cmp(&b.0).then(a.1.total_cmp(&b.1))
        });
        let (blocks, tags) = pairs.into_iter().unzip();
        Ok(TaggedPartition { space, blocks, tags })
    }

    /// The atomic partition of `set` tagged by its atoms (finite spaces).
    pub fn atomic_on(space: SpaceRef, set: &AtomSet) -> Self {
        let blocks = set.iter().map(|i| Block::Atoms(AtomSet(vec![i]))).collect();
        let tags = set.iter().map(Point::Atom).collect();
        TaggedPartition { space, blocks, tags }
    }

    pub fn space(&self) -> &SpaceRef {
        &self.space
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn tags(&self) -> &[Point] {
        &self.tags
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Block, Point)> {
        self.blocks.iter().zip(self.tags.iter().copied())
    }

    /// Same blocks, tags replaced by `choose(block)`.
    pub fn retag(&self, mut choose: impl FnMut(&Block) -> Point) -> Result<TaggedPartition> {
        let tags = self.blocks.iter().map(&mut choose).collect();
        TaggedPartition::new(self.space.clone(), self.blocks.clone(), tags)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn four() -> SpaceRef {
        SpaceModel::finite(["1", "2", "3", "4"]).unwrap()
    }

    fn part(space: &SpaceRef, blocks: &[&[usize]]) -> Partition {
        Partition::new(space.clone(), blocks.iter().map(|b| AtomSet::new(b.iter().copied())).collect()).unwrap()
    }

    #[test]
    fn finer_examples() {
        let s = four();
        let p = part(&s, &[&[0, 1], &[2, 3]]);
        assert!(is_finer(&part(&s, &[&[0], &[1], &[2, 3]]), &p).unwrap());
        assert!(is_finer(&p, &p).unwrap());
        assert!(!is_finer(&part(&s, &[&[0, 2], &[1, 3]]), &p).unwrap());
    }

    #[test]
    fn common_refinement_examples() {
        let s = four();
        let a = part(&s, &[&[0, 2], &[1, 3]]);
        let trivial = Partition::trivial(s.clone());
        assert_eq!(common_refinement(&trivial, &a).unwrap(), a);
        let p = part(&s, &[&[0, 1], &[2, 3]]);
        assert_eq!(common_refinement(&p, &a).unwrap(), Partition::atomic(s.clone()));
        assert_eq!(common_refinement(&p, &p).unwrap(), p);
    }

    #[test]
    fn mismatched_spaces_are_rejected() {
        let p = Partition::trivial(four());
        let q = Partition::trivial(SpaceModel::finite_n(3).unwrap());
        assert_eq!(is_finer(&p, &q), Err(BmgError::MismatchedSpace));
        assert_eq!(common_refinement(&p, &q).unwrap_err(), BmgError::MismatchedSpace);
    }

    #[test]
    fn invalid_partitions_are_rejected() {
        let s = four();
        let bad = |blocks: Vec<AtomSet>| Partition::new(s.clone(), blocks).is_err();
        assert!(bad(vec![AtomSet::new([0, 1]), AtomSet::new([2])]));
        assert!(bad(vec![AtomSet::new([0, 1, 2]), AtomSet::new([2, 3])]));
        assert!(bad(vec![AtomSet::new([0, 1, 2, 3]), AtomSet::empty()]));
        assert!(SpaceModel::finite(["a", "a"]).is_err());
    }

    #[test]
    fn grid_cells_cover_interval() {
        let g = SpaceModel::grid(0.0, 1.0, 3).unwrap();
        assert_eq!(g.cell_bounds(0).0, 0.0);
        assert_eq!(g.cell_bounds(2).1, 1.0);
        for i in 0..2 {
            assert_eq!(g.cell_bounds(i).1, g.cell_bounds(i + 1).0);
        }
        let fine = g.split_cells(4).unwrap();
        assert_eq!(fine.len(), 12);
    }

    #[test]
    fn tags_must_lie_in_blocks() {
        let g = SpaceModel::grid(0.0, 1.0, 1).unwrap();
        let blk = Block::Interval { cell: 0, lo: 0.0, hi: 0.5 };
        assert!(TaggedPartition::new(g.clone(), vec![blk.clone()], vec![Point::Real(0.7)]).is_err());
        assert!(TaggedPartition::new(g, vec![blk], vec![Point::Real(0.25)]).is_ok());
    }
}
