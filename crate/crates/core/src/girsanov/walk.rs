//! Transition-kernel computations for homogeneous lattice walks started at 0.
//!
//! At time index `k` the states are `n ∈ [−k·H, k·H]`, stored at offset `n + k·H`.

use crate::error::{BmgError, Result};

/// Increment law on `{−H, …, H}`.
#[derive(Debug, Clone, PartialEq)]
pub struct WalkLaw {
    half: i64,
    probs: Vec<f64>,
}

impl WalkLaw {
    /// `probs[j + H]` is the probability of increment `j`.
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.len() % 2 == 0 {
            return Err(BmgError::InvalidInput("increment law needs an odd number of entries".into()));
        }
        if let Some(j) = probs.iter().position(|p| !(p.is_finite() && *p >= 0.0)) {
            return Err(BmgError::InvalidInput(format!("increment probability #{j} is negative or not finite")));
        }
        let half = (probs.len() / 2) as i64;
        Ok(WalkLaw { half, probs })
    }

    pub fn half_width(&self) -> i64 {
        self.half
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// Probability of increment `j` (0 outside the support).
    pub fn prob(&self, j: i64) -> f64 {
        if j.abs() > self.half {
            0.0
        } else {
            self.probs[(j + self.half) as usize]
        }
    }

    pub fn total(&self) -> f64 {
        self.probs.iter().sum()
    }

    pub fn states_at(&self, k: usize) -> usize {
        2 * k * self.half as usize + 1
    }

    pub fn lowest(&self, k: usize) -> i64 {
        -(k as i64) * self.half
    }

    /// State list at time `k`.
    pub fn states(&self, k: usize) -> impl Iterator<Item = i64> {
        let lo = self.lowest(k);
        (0..self.states_at(k) as i64).map(move |i| lo + i)
    }

    /// `P(w_{s_k} = n)` for `k = 0..=steps`.
    pub fn marginals(&self, steps: usize) -> Vec<Vec<f64>> {
        let mut out = vec![vec![1.0]];
        let width = self.probs.len();
        for k in 1..=steps {
            let prev = &out[k - 1];
            let mut next = vec![0.0; self.states_at(k)];
            // prev index i (state i − (k−1)H) plus increment index j lands at i + j.
            for (i, &p) in prev.iter().enumerate() {
                if p == 0.0 {
                    continue;
                }
                for (j, &pj) in self.probs.iter().enumerate() {
                    next[i + j] += p * pj;
                }
            }
            debug_assert_eq!(next.len(), prev.len() + width - 1);
            out.push(next);
        }
        out
    }

    /// One backward step: `h_{k−1}(y) = Σ_j p(j)·h_k(y + j)`.
    pub fn step_back(&self, h: &[f64]) -> Vec<f64> {
        let width = self.probs.len();
        let len = h.len() + 1 - width;
        (0..len)
            .map(|i| {
                let window = &h[i..i + width];
                window.iter().zip(&self.probs).map(|(a, b)| a * b).sum()
            })
            .collect()
    }

    /// `E[h(w_{s_r}) | w_{s_k}]` for `k = 0..=r`, given `h` on the states at time `r`.
    pub fn backward_all(&self, h: Vec<f64>, r: usize) -> Vec<Vec<f64>> {
        let mut out = vec![Vec::new(); r + 1];
        out[r] = h;
        for k in (0..r).rev() {
            out[k] = self.step_back(&out[k + 1]);
        }
        out
    }
}
