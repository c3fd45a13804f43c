//! Martingale identities `∫_E x_v dm = ∫_E x_s dm` over the generating blocks of `ℰ_s`.

use serde::Serialize;

use crate::birkhoff::{b2_integrate, EngineOptions};
use crate::error::{BmgError, Result};
use crate::measure::VectorMeasure;
use crate::space::Point;
use crate::vector::VectorValue;

use super::{build_filtration, Coords, Filtration, Kind, ProcessMeasure, ProcessModel};

/// A generating block of `ℰ_s`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum BlockRef {
    /// Index into the blocks of the path filtration at `s`.
    Generator(usize),
    /// The walk state block `{w_s = value}`.
    State(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MartingaleEntry {
    pub s: usize,
    pub v: usize,
    pub block: BlockRef,
    /// `∫_E x_v dm`
    pub later: Coords,
    /// `∫_E x_s dm`
    pub earlier: Coords,
    pub gap: f64,
}

/// Per `(s, v, E)` identity gaps. For walk processes only the worst block of each
/// `(s, v)` pair is kept.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MartingaleReport {
    pub pass: bool,
    pub max_gap: f64,
    pub tol: f64,
    pub checked: usize,
    pub worst: Option<MartingaleEntry>,
    pub entries: Vec<MartingaleEntry>,
}

impl MartingaleReport {
    pub(crate) fn from_entries(entries: Vec<MartingaleEntry>, checked: usize, tol: f64) -> Self {
        let worst = entries.iter().filter(|e| !e.gap.is_nan()).max_by(|a, b| a.gap.total_cmp(&b.gap)).cloned();
        let max_gap = if entries.iter().any(|e| e.gap.is_nan()) {
            f64::NAN
        } else {
            worst.as_ref().map_or(0.0, |e| e.gap)
        };
        MartingaleReport { pass: max_gap <= tol, max_gap, tol, checked, worst, entries }
    }
}

fn adapted(x: &[Vec<f64>], filt: &Filtration) -> Result<()> {
    for (k, (xk, alg)) in x.iter().zip(filt.iter()).enumerate() {
        for (b, block) in alg.blocks().iter().enumerate() {
            let first = xk[block.ids()[0]];
            if block.iter().any(|a| xk[a] != first) {
                return Err(BmgError::NotAdapted { time: k, block: b });
            }
        }
    }
    Ok(())
}

fn integral(x: &[f64], m: &VectorMeasure, block: &crate::space::AtomSet) -> Result<VectorValue> {
    let f = |t: Point| x[t.atom()];
    Ok(b2_integrate(&f, m, block, 1.0, &EngineOptions::default())?.value)
}

/// Checks the martingale identity for explicit per-atom values `x[k][a]`.
pub fn is_martingale(x: &[Vec<f64>], m: &VectorMeasure, filt: &Filtration, tol: f64) -> Result<MartingaleReport> {
    if x.len() != filt.len() {
        return Err(BmgError::DimensionMismatch { expected: filt.len(), found: x.len() });
    }
    if let Some(row) = x.iter().find(|r| r.len() != m.space().len()) {
        return Err(BmgError::DimensionMismatch { expected: m.space().len(), found: row.len() });
    }
    adapted(x, filt)?;
    let mut entries = Vec::new();
    for s in 0..x.len() {
        for (b, block) in filt.at(s).blocks().iter().enumerate() {
            let earlier = integral(&x[s], m, block)?;
            for v in s + 1..x.len() {
                let later = integral(&x[v], m, block)?;
                entries.push(MartingaleEntry {
                    s,
                    v,
                    block: BlockRef::Generator(b),
                    gap: later.dist(&earlier),
                    later: (&later).into(),
                    earlier: (&earlier).into(),
                });
            }
        }
    }
    entries.sort_by_key(|e| (e.s, e.v));
    let checked = entries.len();
    Ok(MartingaleReport::from_entries(entries, checked, tol))
}

/// Shared per-process data: the path filtration or the walk marginals.
pub(crate) struct Context<'a> {
    pub p: &'a ProcessModel,
    pub filt: Option<Filtration>,
    pub marginals: Option<Vec<Vec<f64>>>,
}

impl<'a> Context<'a> {
    pub fn new(p: &'a ProcessModel) -> Result<Self> {
        Ok(match p.kind() {
            Kind::Paths { .. } => Context { p, filt: Some(build_filtration(p)?), marginals: None },
            Kind::Walk { law, .. } => Context { p, filt: None, marginals: Some(law.marginals(p.last())) },
        })
    }

    /// Per-atom values of a state function, for path processes.
    pub fn atom_values(&self, x: &dyn Fn(usize, i64) -> f64) -> Vec<Vec<f64>> {
        (0..=self.p.last())
            .map(|k| self.p.lattice_values(k).expect("path process").iter().map(|&n| x(k, n)).collect())
            .collect()
    }

    /// `∫_E x(w_r) dm` for every generating block `E` of `ℰ_s`, for each `s ≤ r`.
    pub fn integrals_upto(
        &self,
        meas: &ProcessMeasure,
        r: usize,
        x: &dyn Fn(i64) -> f64,
    ) -> Result<Vec<Vec<(BlockRef, VectorValue)>>> {
        match (self.p.kind(), meas) {
            (Kind::Paths { w, .. }, ProcessMeasure::Atoms(m)) => {
                let filt = self.filt.as_ref().expect("path filtration");
                let xr: Vec<f64> = w[r].iter().map(|&n| x(n)).collect();
                (0..=r)
                    .map(|s| {
                        filt.at(s)
                            .blocks()
                            .iter()
                            .enumerate()
                            .map(|(b, block)| Ok((BlockRef::Generator(b), integral(&xr, m, block)?)))
                            .collect()
                    })
                    .collect()
            }
            (Kind::Walk { law, .. }, ProcessMeasure::Walk { weight, reach }) => {
                let marg = self.marginals.as_ref().expect("walk marginals");
                let h: Vec<f64> = law
                    .states(r)
                    .enumerate()
                    .map(|(i, n)| x(n) * reach.as_ref().map_or(1.0, |rh| rh[r][i]))
                    .collect();
                let back = law.backward_all(h, r);
                Ok((0..=r)
                    .map(|s| {
                        law.states(s)
                            .zip(&marg[s])
                            .zip(&back[s])
                            .filter(|((_, &p), _)| p != 0.0)
                            .map(|((y, &p), &e)| (BlockRef::State(self.p.value(y)), weight.scale(p * e)))
                            .collect()
                    })
                    .collect())
            }
            _ => Err(BmgError::InvalidInput("measure does not match the process representation".into())),
        }
    }

    /// `∫_E x(w_s) dm` over the generating blocks of `ℰ_s`.
    pub fn integrals_at(
        &self,
        meas: &ProcessMeasure,
        s: usize,
        x: &dyn Fn(i64) -> f64,
    ) -> Result<Vec<(BlockRef, VectorValue)>> {
        match (self.p.kind(), meas) {
            (Kind::Walk { law, .. }, ProcessMeasure::Walk { weight, reach }) => {
                let marg = self.marginals.as_ref().expect("walk marginals");
                Ok(law
                    .states(s)
                    .enumerate()
                    .filter(|&(i, _)| marg[s][i] != 0.0)
                    .map(|(i, y)| {
                        let e = reach.as_ref().map_or(1.0, |rh| rh[s][i]);
                        (BlockRef::State(self.p.value(y)), weight.scale(marg[s][i] * x(y) * e))
                    })
                    .collect())
            }
            _ => Ok(self.integrals_upto(meas, s, x)?.swap_remove(s)),
        }
    }

    /// Martingale check of the state process `x(k, w_{s_k})` under `meas`.
    pub fn martingale(
        &self,
        meas: &ProcessMeasure,
        x: &dyn Fn(usize, i64) -> f64,
        tol: f64,
    ) -> Result<MartingaleReport> {
        if let (Kind::Paths { .. }, ProcessMeasure::Atoms(m)) = (self.p.kind(), meas) {
            let values = self.atom_values(x);
            return is_martingale(&values, m, self.filt.as_ref().expect("path filtration"), tol);
        }
        let last = self.p.last();
        let diag: Vec<Vec<(BlockRef, VectorValue)>> =
            (0..=last).map(|s| self.integrals_at(meas, s, &|n| x(s, n))).collect::<Result<_>>()?;
        let mut entries = Vec::new();
        let mut checked = 0;
        for v in 1..=last {
            let up = self.integrals_upto(meas, v, &|n| x(v, n))?;
            for s in 0..v {
                checked += up[s].len();
                let worst = up[s]
                    .iter()
                    .zip(&diag[s])
                    .map(|((block, later), (_, earlier))| (block, later, earlier, later.dist(earlier)))
                    .max_by(|a, b| a.3.total_cmp(&b.3));
                if let Some((block, later, earlier, gap)) = worst {
                    entries.push(MartingaleEntry {
                        s,
                        v,
                        block: *block,
                        later: later.into(),
                        earlier: earlier.into(),
                        gap,
                    });
                }
            }
        }
        entries.sort_by_key(|e| (e.s, e.v));
        Ok(MartingaleReport::from_entries(entries, checked, tol))
    }
}

#[cfg(test)]
mod tests {
    use super::super::tests::two_step_walk;
    use super::*;

    fn report(drift: f64) -> MartingaleReport {
        let p = two_step_walk(drift);
        let filt = build_filtration(&p).unwrap();
        let x: Vec<Vec<f64>> = (0..3).map(|k| p.values(k).unwrap()).collect();
        is_martingale(&x, p.measure().unwrap(), &filt, 1e-12).unwrap()
    }

    #[test]
    fn constant_process_passes_with_zero_gap() {
        let p = two_step_walk(0.0);
        let filt = build_filtration(&p).unwrap();
        let x = vec![vec![3.0; 4]; 3];
        let r = is_martingale(&x, p.measure().unwrap(), &filt, 0.0).unwrap();
        assert!(r.pass);
        assert_eq!(r.max_gap, 0.0);
    }

    #[test]
    fn symmetric_walk_is_a_martingale() {
        let r = report(0.0);
        assert!(r.pass, "{}", r.max_gap);
        // s=0: 2 later times; s=1: two blocks, one later time
        assert_eq!(r.entries.len(), 4);
    }

    #[test]
    fn drifted_walk_fails_with_expected_gap() {
        let r = report(0.3);
        assert!(!r.pass);
        // worst is s=0, v=2 on T: ∫ w_2 dM − ∫ w_0 dM = 0.6·(1, 2)
        let expected = 0.6 * 5f64.sqrt();
        assert!((r.max_gap - expected).abs() < 1e-12, "{}", r.max_gap);
        let w = r.worst.unwrap();
        assert_eq!((w.s, w.v), (0, 2));
        // s=1 blocks each carry half the mass: 0.3·0.5·‖(1,2)‖
        let e = r.entries.iter().find(|e| e.s == 1).unwrap();
        assert!((e.gap - 0.15 * 5f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn non_adapted_values_are_rejected() {
        let p = two_step_walk(0.0);
        let filt = build_filtration(&p).unwrap();
        let mut x: Vec<Vec<f64>> = (0..3).map(|k| p.values(k).unwrap()).collect();
        x[0][1] = 5.0;
        let e = is_martingale(&x, p.measure().unwrap(), &filt, 1e-9).unwrap_err();
        assert_eq!(e, BmgError::NotAdapted { time: 0, block: 0 });
    }
}
