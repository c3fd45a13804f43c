//! Elements of the finite-dimensional coordinate space standing in for the Banach space X.

use std::fmt;
use std::ops::{Add, Sub};

use serde::{Deserialize, Serialize};

/// The norm attached to a coordinate space. Shared by every value a measure produces.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Norm {
    L1,
    #[default]
    L2,
    Linf,
}

impl Norm {
    pub fn of(self, coords: &[f64]) -> f64 {
        match self {
            Norm::L1 => coords.iter().map(|c| c.abs()).sum(),
            Norm::L2 => coords.iter().map(|c| c * c).sum::<f64>().sqrt(),
            Norm::Linf => coords.iter().fold(0.0, |m, c| m.max(c.abs())),
        }
    }

    /// `‖a − b‖` without allocating.
    pub fn dist(self, a: &[f64], b: &[f64]) -> f64 {
        let diffs = a.iter().zip(b).map(|(x, y)| (x - y).abs());
        match self {
            Norm::L1 => diffs.sum(),
            Norm::L2 => diffs.map(|d| d * d).sum::<f64>().sqrt(),
            Norm::Linf => diffs.fold(0.0, f64::max),
        }
    }

    pub const ALL: [Norm; 3] = [Norm::L1, Norm::L2, Norm::Linf];
}

impl fmt::Display for Norm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Norm::L1 => "l1",
            Norm::L2 => "l2",
            Norm::Linf => "linf",
        })
    }
}

/// A point of `X ≅ R^d` together with the norm it is measured in.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorValue {
    coords: Vec<f64>,
    norm: Norm,
}

impl VectorValue {
    /// Panics if `coords` is empty; every space has `d ≥ 1`.
    pub fn new(coords: Vec<f64>, norm: Norm) -> Self {
        assert!(!coords.is_empty(), "vector values need at least one coordinate");
        Self { coords, norm }
    }

    pub fn zeros(dim: usize, norm: Norm) -> Self {
        Self::new(vec![0.0; dim], norm)
    }

    pub fn scalar(x: f64, norm: Norm) -> Self {
        Self::new(vec![x], norm)
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn norm_tag(&self) -> Norm {
        self.norm
    }

    pub fn with_norm(mut self, norm: Norm) -> Self {
        self.norm = norm;
        self
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn coords_mut(&mut self) -> &mut [f64] {
        &mut self.coords
    }

    pub fn into_coords(self) -> Vec<f64> {
        self.coords
    }

    pub fn norm(&self) -> f64 {
        self.norm.of(&self.coords)
    }

    pub fn dist(&self, other: &VectorValue) -> f64 {
        debug_assert_eq!(self.dim(), other.dim());
        self.norm.dist(&self.coords, &other.coords)
    }

    pub fn is_zero(&self) -> bool {
        self.coords.iter().all(|&c| c == 0.0)
    }

    pub fn scale(&self, alpha: f64) -> VectorValue {
        VectorValue {
            coords: self.coords.iter().map(|c| alpha * c).collect(),
            norm: self.norm,
        }
    }

    /// `self += alpha * other`
    pub fn add_scaled(&mut self, alpha: f64, other: &VectorValue) {
        debug_assert_eq!(self.dim(), other.dim());
        for (s, o) in self.coords.iter_mut().zip(&other.coords) {
            *s += alpha * o;
        }
    }

    pub fn add_assign(&mut self, other: &VectorValue) {
        self.add_scaled(1.0, other);
    }

    /// Largest coordinate-wise absolute difference.
    pub fn max_abs_diff(&self, other: &VectorValue) -> f64 {
        self.coords
            .iter()
            .zip(&other.coords)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    pub fn max_abs(&self) -> f64 {
        self.coords.iter().fold(0.0, |m, c| m.max(c.abs()))
    }
}

impl Add for &VectorValue {
    type Output = VectorValue;
    fn add(self, rhs: &VectorValue) -> VectorValue {
        let mut out = self.clone();
        out.add_assign(rhs);
        out
    }
}

impl Sub for &VectorValue {
    type Output = VectorValue;
    fn sub(self, rhs: &VectorValue) -> VectorValue {
        let mut out = self.clone();
        out.add_scaled(-1.0, rhs);
        out
    }
}

impl fmt::Display for VectorValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, c) in self.coords.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn norms_of_known_vector() {
        let v = VectorValue::new(vec![3.0, -4.0], Norm::L2);
        assert_eq!(v.norm(), 5.0);
        assert_eq!(v.clone().with_norm(Norm::L1).norm(), 7.0);
        assert_eq!(v.with_norm(Norm::Linf).norm(), 4.0);
    }

    #[test]
    #[should_panic]
    fn empty_vectors_are_rejected() {
        let _ = VectorValue::new(vec![], Norm::L2);
    }

    fn coords(d: usize) -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(-1e3f64..1e3, d)
    }

    proptest! {
        #[test]
        fn norm_axioms(a in coords(4), b in coords(4), idx in 0usize..3) {
            let norm = Norm::ALL[idx];
            let va = VectorValue::new(a, norm);
            let vb = VectorValue::new(b, norm);
            prop_assert!(va.norm() >= 0.0);
            prop_assert_eq!(va.norm() == 0.0, va.is_zero());
            let sum = &va + &vb;
            prop_assert!(sum.norm() <= va.norm() + vb.norm() + 1e-9);
            prop_assert!((va.dist(&vb) - (&va - &vb).norm()).abs() <= 1e-9);
        }
    }
}
