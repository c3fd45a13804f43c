//! Scalar and vector functions on a space.
//!
//! Engines take anything implementing [`ScalarFn`] / [`VectorFn`]. Closures work directly
//! for scalar functions; vector closures are wrapped with [`vector_fn`]. The serializable
//! [`ScalarSpec`] / [`VectorSpec`] forms are what input files describe.

use serde::{Deserialize, Serialize};

use crate::error::{BmgError, Result};
use crate::space::{Point, SpaceModel};

pub trait ScalarFn: Sync {
    fn eval(&self, t: Point) -> f64;
}

impl<F: Fn(Point) -> f64 + Sync> ScalarFn for F {
    fn eval(&self, t: Point) -> f64 {
        self(t)
    }
}

pub trait VectorFn: Sync {
    fn dim(&self) -> usize;
    /// Writes `F(t)` into `out` (length `dim`).
    fn eval_into(&self, t: Point, out: &mut [f64]);

    fn eval(&self, t: Point) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        self.eval_into(t, &mut out);
        out
    }
}

/// Closure-backed vector function.
pub struct FnVector<F> {
    dim: usize,
    f: F,
}

pub fn vector_fn<F: Fn(Point, &mut [f64]) + Sync>(dim: usize, f: F) -> FnVector<F> {
    FnVector { dim, f }
}

impl<F: Fn(Point, &mut [f64]) + Sync> VectorFn for FnVector<F> {
    fn dim(&self) -> usize {
        self.dim
    }
    fn eval_into(&self, t: Point, out: &mut [f64]) {
        (self.f)(t, out)
    }
}

/// Pointwise product `f·F`.
pub struct Product<'a, S: ?Sized, V: ?Sized> {
    pub scalar: &'a S,
    pub vector: &'a V,
}

impl<S: ScalarFn + ?Sized, V: VectorFn + ?Sized> VectorFn for Product<'_, S, V> {
    fn dim(&self) -> usize {
        self.vector.dim()
    }
    fn eval_into(&self, t: Point, out: &mut [f64]) {
        self.vector.eval_into(t, out);
        let s = self.scalar.eval(t);
        out.iter_mut().for_each(|x| *x *= s);
    }
}

/// Per-atom table of scalar values (finite spaces, or per-cell constants on grids).
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarTable(pub Vec<f64>);

impl ScalarFn for ScalarTable {
    fn eval(&self, t: Point) -> f64 {
        self.0[t.atom()]
    }
}

/// Per-atom table of vector values.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorTable {
    dim: usize,
    rows: Vec<Vec<f64>>,
}

impl VectorTable {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let dim = rows.first().map(Vec::len).unwrap_or(0);
        if dim == 0 {
            return Err(BmgError::InvalidInput("vector table needs nonempty rows".into()));
        }
        if let Some(r) = rows.iter().find(|r| r.len() != dim) {
            return Err(BmgError::DimensionMismatch { expected: dim, found: r.len() });
        }
        Ok(VectorTable { dim, rows })
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }
}

impl VectorFn for VectorTable {
    fn dim(&self) -> usize {
        self.dim
    }
    fn eval_into(&self, t: Point, out: &mut [f64]) {
        out.copy_from_slice(&self.rows[t.atom()]);
    }
}

/// One additive term of a parametric real function of `t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", deny_unknown_fields)]
pub enum Term {
    /// `Σ c_k t^k`
    Poly(Vec<f64>),
    /// `amp · sin(freq·t + phase)`
    Sin { amp: f64, freq: f64, phase: f64 },
    /// `amp · exp(rate·t)`
    Exp { amp: f64, rate: f64 },
}

impl Term {
    pub fn eval(&self, t: f64) -> f64 {
        match self {
            Term::Poly(c) => c.iter().rev().fold(0.0, |acc, &ck| acc * t + ck),
            Term::Sin { amp, freq, phase } => amp * (freq * t + phase).sin(),
            Term::Exp { amp, rate } => amp * (rate * t).exp(),
        }
    }
}

pub fn eval_terms(terms: &[Term], t: f64) -> f64 {
    terms.iter().map(|x| x.eval(t)).sum()
}

/// Serializable description of a scalar function on a space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum ScalarSpec {
    Constant { value: f64 },
    /// Value per atom id (finite) or per cell (`cell0`, ...), evaluated at tags.
    Table { values: std::collections::BTreeMap<String, f64> },
    /// Sum of terms in the real coordinate (grid spaces only).
    Terms { terms: Vec<Term> },
}

/// Serializable description of a vector function on a space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum VectorSpec {
    Constant { value: Vec<f64> },
    Table { values: std::collections::BTreeMap<String, Vec<f64>> },
    /// One term list per coordinate (grid spaces only).
    Terms { coords: Vec<Vec<Term>> },
}

/// A [`ScalarSpec`] resolved against a concrete space.
#[derive(Debug, Clone)]
pub enum ScalarFunction {
    Constant(f64),
    Table(Vec<f64>),
    /// Grid: one value per base cell.
    CellTable { space: std::sync::Arc<SpaceModel>, values: Vec<f64> },
    Terms(Vec<Term>),
}

impl ScalarFunction {
    pub fn resolve(spec: &ScalarSpec, space: &std::sync::Arc<SpaceModel>) -> Result<Self> {
        match spec {
            ScalarSpec::Constant { value } => Ok(ScalarFunction::Constant(*value)),
            ScalarSpec::Table { values } => {
                let table = resolve_table(values, space, |v| Ok(*v))?;
                Ok(if space.is_finite() {
                    ScalarFunction::Table(table)
                } else {
                    ScalarFunction::CellTable { space: space.clone(), values: table }
                })
            }
            ScalarSpec::Terms { terms } => {
                if space.is_finite() {
                    return Err(BmgError::InvalidInput(
                        "`terms` functions need a grid space".into(),
                    ));
                }
                Ok(ScalarFunction::Terms(terms.clone()))
            }
        }
    }
}

impl ScalarFn for ScalarFunction {
    fn eval(&self, t: Point) -> f64 {
        match self {
            ScalarFunction::Constant(c) => *c,
            ScalarFunction::Table(v) => v[t.atom()],
            ScalarFunction::CellTable { space, values } => values[cell_index(space, t.real())],
            ScalarFunction::Terms(terms) => eval_terms(terms, t.real()),
        }
    }
}

#[derive(Debug, Clone)]
pub enum VectorFunction {
    Constant(Vec<f64>),
    Table(VectorTable),
    CellTable { space: std::sync::Arc<SpaceModel>, table: VectorTable },
    Terms(Vec<Vec<Term>>),
}

impl VectorFunction {
    pub fn resolve(spec: &VectorSpec, space: &std::sync::Arc<SpaceModel>) -> Result<Self> {
        match spec {
            VectorSpec::Constant { value } => {
                if value.is_empty() {
                    return Err(BmgError::InvalidInput("constant vector is empty".into()));
                }
                Ok(VectorFunction::Constant(value.clone()))
            }
            VectorSpec::Table { values } => {
                let rows = resolve_table(values, space, |v| Ok(v.clone()))?;
                let table = VectorTable::new(rows)?;
                Ok(if space.is_finite() {
                    VectorFunction::Table(table)
                } else {
                    VectorFunction::CellTable { space: space.clone(), table }
                })
            }
            VectorSpec::Terms { coords } => {
                if space.is_finite() {
                    return Err(BmgError::InvalidInput("`terms` functions need a grid space".into()));
                }
                if coords.is_empty() {
                    return Err(BmgError::InvalidInput("`terms` needs at least one coordinate".into()));
                }
                Ok(VectorFunction::Terms(coords.clone()))
            }
        }
    }
}

impl VectorFn for VectorFunction {
    fn dim(&self) -> usize {
        match self {
            VectorFunction::Constant(v) => v.len(),
            VectorFunction::Table(t) | VectorFunction::CellTable { table: t, .. } => t.dim(),
            VectorFunction::Terms(c) => c.len(),
        }
    }

    fn eval_into(&self, t: Point, out: &mut [f64]) {
        match self {
            VectorFunction::Constant(v) => out.copy_from_slice(v),
            VectorFunction::Table(table) => table.eval_into(t, out),
            VectorFunction::CellTable { space, table } => {
                out.copy_from_slice(&table.rows()[cell_index(space, t.real())])
            }
            VectorFunction::Terms(coords) => {
                let x = t.real();
                for (o, terms) in out.iter_mut().zip(coords) {
                    *o = eval_terms(terms, x);
                }
            }
        }
    }
}

fn cell_index(space: &SpaceModel, t: f64) -> usize {
    match space {
        SpaceModel::Grid { a, b, cells } => {
            let h = (b - a) / *cells as f64;
            (((t - a) / h).floor().max(0.0) as usize).min(cells - 1)
        }
        SpaceModel::Finite { .. } => unreachable!("cell tables live on grids"),
    }
}

fn resolve_table<V, T>(
    values: &std::collections::BTreeMap<String, V>,
    space: &SpaceModel,
    conv: impl Fn(&V) -> Result<T>,
) -> Result<Vec<T>> {
    let mut out: Vec<Option<T>> = (0..space.len()).map(|_| None).collect();
    for (k, v) in values {
        let i = space
            .index_of(k)
            .ok_or_else(|| BmgError::InvalidInput(format!("unknown atom id `{k}` in function table")))?;
        out[i] = Some(conv(v)?);
    }
    out.into_iter()
        .enumerate()
        .map(|(i, v)| v.ok_or_else(|| BmgError::InvalidInput(format!("function table misses atom `{}`", space.label(i)))))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn poly_uses_ascending_coefficients() {
        assert_eq!(Term::Poly(vec![1.0, 2.0, 3.0]).eval(2.0), 17.0);
    }

    #[test]
    fn table_must_cover_every_atom() {
        let s = SpaceModel::finite(["a", "b"]).unwrap();
        let spec = ScalarSpec::Table { values: [("a".to_string(), 1.0)].into() };
        assert!(ScalarFunction::resolve(&spec, &s).is_err());
        let spec = ScalarSpec::Table { values: [("a".to_string(), 1.0), ("c".to_string(), 2.0)].into() };
        assert!(ScalarFunction::resolve(&spec, &s).is_err());
    }

    #[test]
    fn cell_tables_are_piecewise_constant() {
        let g = SpaceModel::grid(0.0, 1.0, 2).unwrap();
        let spec = ScalarSpec::Table { values: [("cell0".to_string(), 1.0), ("cell1".to_string(), 5.0)].into() };
        let f = ScalarFunction::resolve(&spec, &g).unwrap();
        assert_eq!(f.eval(Point::Real(0.1)), 1.0);
        assert_eq!(f.eval(Point::Real(0.75)), 5.0);
        assert_eq!(f.eval(Point::Real(1.0)), 5.0);
    }
}
