//! Scalar and vector measures on a space, and pushforward distributions.
//!
//! A measure is given by its mass on each generating atom (cell). On grids the mass is
//! spread uniformly over the cell, so sub-intervals produced by refinement carry the
//! proportional share.

use crate::error::{BmgError, Result};
use crate::func::ScalarFn;
use crate::space::{AtomSet, Block, SpaceModel, SpaceRef};
use crate::vector::{Norm, VectorValue};

#[derive(Debug, Clone)]
pub struct ScalarMeasure {
    space: SpaceRef,
    masses: Vec<f64>,
}

impl ScalarMeasure {
    pub fn new(space: SpaceRef, masses: Vec<f64>) -> Result<Self> {
        if masses.len() != space.len() {
            return Err(BmgError::DimensionMismatch { expected: space.len(), found: masses.len() });
        }
        if let Some(i) = masses.iter().position(|m| !(m.is_finite() && *m >= 0.0)) {
            return Err(BmgError::InvalidInput(format!(
                "measure of atom `{}` is {} (must be finite and nonnegative)",
                space.label(i),
                masses[i]
            )));
        }
        Ok(ScalarMeasure { space, masses })
    }

    /// Lebesgue measure on a grid (or counting measure on a finite space).
    pub fn lebesgue(space: SpaceRef) -> Self {
        let masses = match &*space {
            SpaceModel::Grid { .. } => (0..space.len())
                .map(|i| {
                    let (lo, hi) = space.cell_bounds(i);
                    hi - lo
                })
                .collect(),
            SpaceModel::Finite { .. } => vec![1.0; space.len()],
        };
        ScalarMeasure { space, masses }
    }

    pub fn space(&self) -> &SpaceRef {
        &self.space
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn atom(&self, i: usize) -> f64 {
        self.masses[i]
    }

    pub fn of_set(&self, set: &AtomSet) -> f64 {
        set.iter().map(|i| self.masses[i]).sum()
    }

    pub fn of_block(&self, block: &Block) -> f64 {
        match block {
            Block::Atoms(s) => self.of_set(s),
            Block::Interval { cell, lo, hi } => {
                let (clo, chi) = self.space.cell_bounds(*cell);
                self.masses[*cell] * (hi - lo) / (chi - clo)
            }
        }
    }

    pub fn total(&self) -> f64 {
        self.masses.iter().sum()
    }
}

#[derive(Debug, Clone)]
pub struct VectorMeasure {
    space: SpaceRef,
    dim: usize,
    norm: Norm,
    values: Vec<VectorValue>,
}

impl VectorMeasure {
    pub fn new(space: SpaceRef, values: Vec<VectorValue>) -> Result<Self> {
        if values.len() != space.len() {
            return Err(BmgError::DimensionMismatch { expected: space.len(), found: values.len() });
        }
        let dim = values[0].dim();
        let norm = values[0].norm_tag();
        for (i, v) in values.iter().enumerate() {
            if v.dim() != dim {
                return Err(BmgError::DimensionMismatch { expected: dim, found: v.dim() });
            }
            if v.coords().iter().any(|c| !c.is_finite()) {
                return Err(BmgError::InvalidInput(format!("vector measure of atom `{}` is not finite", space.label(i))));
            }
        }
        let values = values.into_iter().map(|v| v.with_norm(norm)).collect();
        Ok(VectorMeasure { space, dim, norm, values })
    }

    pub fn from_rows(space: SpaceRef, rows: Vec<Vec<f64>>, norm: Norm) -> Result<Self> {
        if rows.iter().any(Vec::is_empty) {
            return Err(BmgError::InvalidInput("vector measure rows must be nonempty".into()));
        }
        Self::new(space, rows.into_iter().map(|r| VectorValue::new(r, norm)).collect())
    }

    pub fn zero(space: SpaceRef, dim: usize, norm: Norm) -> Self {
        let values = vec![VectorValue::zeros(dim, norm); space.len()];
        VectorMeasure { space, dim, norm, values }
    }

    /// Diagonal lift `M(A) = P(A)·v`.
    pub fn diagonal(p: &ScalarMeasure, v: &VectorValue) -> Self {
        let values = p.masses().iter().map(|&m| v.scale(m)).collect();
        VectorMeasure { space: p.space.clone(), dim: v.dim(), norm: v.norm_tag(), values }
    }

    /// `A ↦ ∫_A w dM` for a per-atom density `w` (finite spaces).
    pub fn reweighted(&self, weight: impl Fn(usize) -> f64) -> Self {
        let values = self.values.iter().enumerate().map(|(i, v)| v.scale(weight(i))).collect();
        VectorMeasure { space: self.space.clone(), dim: self.dim, norm: self.norm, values }
    }

    pub fn space(&self) -> &SpaceRef {
        &self.space
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn norm_tag(&self) -> Norm {
        self.norm
    }

    pub fn atom(&self, i: usize) -> &VectorValue {
        &self.values[i]
    }

    pub fn values(&self) -> &[VectorValue] {
        &self.values
    }

    pub fn zero_value(&self) -> VectorValue {
        VectorValue::zeros(self.dim, self.norm)
    }

    /// `m(A)`, summed in canonical atom order. `m(∅) = 0`.
    pub fn of_set(&self, set: &AtomSet) -> VectorValue {
        let mut acc = self.zero_value();
        for i in set.iter() {
            acc.add_assign(&self.values[i]);
        }
        acc
    }

    pub fn of_block(&self, block: &Block) -> VectorValue {
        match block {
            Block::Atoms(s) => self.of_set(s),
            Block::Interval { cell, lo, hi } => {
                let (clo, chi) = self.space.cell_bounds(*cell);
                self.values[*cell].scale((hi - lo) / (chi - clo))
            }
        }
    }

    pub fn total(&self) -> VectorValue {
        self.of_set(&self.space.whole())
    }
}

/// The distribution `B ↦ m(f⁻¹(B))` of a function, as masses on its finite range.
#[derive(Debug, Clone, PartialEq)]
pub struct Distribution {
    support: Vec<f64>,
    mass: Vec<VectorValue>,
}

impl Distribution {
    pub fn support(&self) -> &[f64] {
        &self.support
    }

    pub fn masses(&self) -> &[VectorValue] {
        &self.mass
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, &VectorValue)> {
        self.support.iter().copied().zip(&self.mass)
    }

    /// Mass at `c`, or `None` if `c` is not in the support.
    pub fn mass_at(&self, c: f64) -> Option<&VectorValue> {
        self.support
            .binary_search_by(|x| x.total_cmp(&c))
            .ok()
            .map(|i| &self.mass[i])
    }

    pub fn total(&self) -> Option<VectorValue> {
        let mut it = self.mass.iter();
        let mut acc = it.next()?.clone();
        for m in it {
            acc.add_assign(m);
        }
        Some(acc)
    }
}

/// Groups atoms by the value of `f` at their representative point.
pub(crate) fn level_sets(space: &SpaceModel, f: &(impl ScalarFn + ?Sized)) -> Result<Vec<(f64, AtomSet)>> {
    let mut vals: Vec<(f64, usize)> = Vec::with_capacity(space.len());
    for i in 0..space.len() {
        // +0.0 folds -0.0 into 0.0
        let v = f.eval(space.representative(i)) + 0.0;
        if v.is_nan() {
            return Err(BmgError::InvalidInput(format!("function is undefined at atom `{}`", space.label(i))));
        }
        vals.push((v, i));
    }
    vals.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let mut out: Vec<(f64, AtomSet)> = Vec::new();
    let mut start = 0;
    for j in 1..=vals.len() {
        if j == vals.len() || vals[j].0 != vals[start].0 {
            out.push((vals[start].0, vals[start..j].iter().map(|x| x.1).collect()));
            start = j;
        }
    }
    Ok(out)
}

/// Pushforward of a vector measure through `f` (evaluated at atom tags / cell midpoints).
pub fn pushforward(m: &VectorMeasure, f: &(impl ScalarFn + ?Sized)) -> Result<Distribution> {
    let groups = level_sets(m.space(), f)?;
    let (support, mass) = groups.into_iter().map(|(c, set)| (c, m.of_set(&set))).unzip();
    Ok(Distribution { support, mass })
}

/// Pushforward of a scalar measure; masses are one-dimensional values.
pub fn pushforward_scalar(mu: &ScalarMeasure, f: &(impl ScalarFn + ?Sized)) -> Result<Distribution> {
    let groups = level_sets(mu.space(), f)?;
    let (support, mass) = groups
        .into_iter()
        .map(|(c, set)| (c, VectorValue::scalar(mu.of_set(&set), Norm::L2)))
        .unzip();
    Ok(Distribution { support, mass })
}
