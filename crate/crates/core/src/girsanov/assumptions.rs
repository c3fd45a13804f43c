//! Marginal densities, the ratio `g_s`, and the hypotheses of the change of measure.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::birkhoff::{b2_integrate, EngineOptions};
use crate::error::{BmgError, Result};
use crate::measure::VectorMeasure;
use crate::space::{Point, SpaceModel};
use crate::vector::VectorValue;

use super::martingale::{Context, MartingaleReport};
use super::{ClosedRatio, Coords, Kind, ProcessMeasure, ProcessModel};

/// `f_{s_k}(x) = M(w_{s_k}⁻¹({x}))` on the value lattice, with respect to counting measure.
#[derive(Debug, Clone, PartialEq)]
pub struct MarginalDensity {
    pub time: usize,
    /// Lattice indices of `range(w_{s_k})`, increasing.
    pub points: Vec<i64>,
    pub values: Vec<VectorValue>,
    /// `∫_T w_{s_k} dM`
    pub null_integral: VectorValue,
}

impl MarginalDensity {
    pub fn at(&self, n: i64) -> Option<&VectorValue> {
        self.points.binary_search(&n).ok().map(|i| &self.values[i])
    }

    pub fn total(&self) -> VectorValue {
        let mut t = VectorValue::zeros(self.values[0].dim(), self.values[0].norm_tag());
        self.values.iter().for_each(|v| t.add_assign(v));
        t
    }
}

pub(crate) fn density_with(ctx: &Context, k: usize) -> MarginalDensity {
    let p = ctx.p;
    let (points, values): (Vec<i64>, Vec<VectorValue>) = match p.kind() {
        Kind::Paths { m, w } => {
            let mut groups: BTreeMap<i64, VectorValue> = BTreeMap::new();
            for (a, &n) in w[k].iter().enumerate() {
                groups.entry(n).or_insert_with(|| m.zero_value()).add_assign(m.atom(a));
            }
            groups.into_iter().unzip()
        }
        Kind::Walk { weight, law } => {
            let marg = &ctx.marginals.as_ref().expect("walk marginals")[k];
            law.states(k).zip(marg).filter(|(_, &pr)| pr != 0.0).map(|(n, &pr)| (n, weight.scale(pr))).unzip()
        }
    };
    let mut null_integral = VectorValue::zeros(p.dim(), p.norm());
    for (&n, f) in points.iter().zip(&values) {
        null_integral.add_scaled(p.value(n), f);
    }
    MarginalDensity { time: k, points, values, null_integral }
}

/// The distribution of `w_{s_k}` under `M` and the null-integral check.
pub fn marginal_density(p: &ProcessModel, k: usize) -> Result<MarginalDensity> {
    if k > p.last() {
        return Err(BmgError::InvalidInput(format!("time index {k} is past the last time {}", p.last())));
    }
    Ok(density_with(&Context::new(p)?, k))
}

/// `g_{s_k}` on the shifted lattice `V_k + q·s_k`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RatioEntry {
    pub time: usize,
    pub shift: i64,
    /// Lattice indices of `V_k + q·s_k`, increasing.
    pub points: Vec<i64>,
    pub g: Vec<f64>,
    /// `max_i |ratio_i − ratio_first| / max(1, |ratio_first|)` per point.
    pub deviation: Vec<f64>,
    /// Points where numerator and denominator vanish in every coordinate (`g = 0`).
    pub vanishing: Vec<bool>,
    pub max_deviation: f64,
    /// Largest `‖f(x)‖` at a point with `f(x − q·s_k) = 0`, where no ratio can exist.
    pub uncovered: f64,
}

impl RatioEntry {
    /// `g(x)`; zero off the shifted lattice, where `M_{w̃}` carries no mass.
    pub fn at(&self, n: i64) -> f64 {
        self.points.binary_search(&n).map_or(0.0, |i| self.g[i])
    }
}

/// `g_{s_k}(x) = f(x)[i] / f(x − q·s_k)[i]` with `i` the first coordinate whose denominator
/// is nonzero.
///
/// A coordinate with `|f(x)[i]| > tol` over a zero denominator is an assumption
/// violation. Smaller masses there are recorded in `uncovered` and show up as gaps in the marginal identity `M_s(B) = ∫_B g_s dM_{w̃_s}`.
pub fn girsanov_ratio(p: &ProcessModel, df: &MarginalDensity, tol: f64) -> Result<RatioEntry> {
    let shift = p.shift(df.time);
    let dim = p.dim();
    let zero = VectorValue::zeros(dim, p.norm());
    let mut uncovered: f64 = 0.0;
    let violation = |x: i64, i: usize| {
        BmgError::AssumptionViolation(format!(
            "time index {}: f({}) is nonzero in coordinate {i} but f(x − q·s) vanishes there",
            df.time,
            p.value(x)
        ))
    };
    // points of V with no partner in V + shift
    for (&x, f) in df.points.iter().zip(&df.values) {
        if df.at(x - shift).is_none() {
            if let Some(i) = f.coords().iter().position(|c| c.abs() > tol) {
                return Err(violation(x, i));
            }
            uncovered = uncovered.max(f.norm());
        }
    }
    let mut entry = RatioEntry {
        time: df.time,
        shift,
        points: Vec::with_capacity(df.points.len()),
        g: Vec::with_capacity(df.points.len()),
        deviation: Vec::with_capacity(df.points.len()),
        vanishing: Vec::with_capacity(df.points.len()),
        max_deviation: 0.0,
        uncovered: 0.0,
    };
    for (&base, den) in df.points.iter().zip(&df.values) {
        let x = base + shift;
        let num = df.at(x).unwrap_or(&zero);
        let mut first: Option<f64> = None;
        let mut dev: f64 = 0.0;
        for (i, (&a, &b)) in num.coords().iter().zip(den.coords()).enumerate() {
            if b == 0.0 {
                if a.abs() > tol {
                    return Err(violation(x, i));
                }
                uncovered = uncovered.max(a.abs());
                continue;
            }
            let r = a / b;
            match first {
                None => first = Some(r),
                Some(g) => dev = dev.max((r - g).abs() / g.abs().max(1.0)),
            }
        }
        if dev > tol {
            return Err(BmgError::CrossComponent { point: x, deviation: dev, tol });
        }
        entry.points.push(x);
        entry.g.push(first.unwrap_or(0.0));
        entry.vanishing.push(first.is_none() && num.is_zero());
        entry.deviation.push(dev);
        entry.max_deviation = entry.max_deviation.max(dev);
    }
    entry.uncovered = uncovered;
    Ok(entry)
}

/// The ratio used downstream: a declared closed form if present, the empirical one otherwise.
#[derive(Clone)]
pub struct RatioFamily {
    pub entries: Vec<RatioEntry>,
    closed: Option<ClosedRatio>,
    times: Vec<f64>,
    pitch: f64,
}

impl std::fmt::Debug for RatioFamily {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RatioFamily")
            .field("entries", &self.entries.len())
            .field("closed_form", &self.closed.is_some())
            .finish()
    }
}

impl RatioFamily {
    /// `g_{s_k}` at lattice index `n` of the shifted lattice.
    pub fn g(&self, k: usize, n: i64) -> f64 {
        match &self.closed {
            Some(c) => c(self.times[k], self.pitch * n as f64),
            None => self.entries[k].at(n),
        }
    }

    pub fn is_closed_form(&self) -> bool {
        self.closed.is_some()
    }
}

pub(crate) fn ratio_family_with(ctx: &Context, densities: &[MarginalDensity], tol: f64) -> Result<RatioFamily> {
    let p = ctx.p;
    let entries = densities.iter().map(|df| girsanov_ratio(p, df, tol)).collect::<Result<Vec<_>>>()?;
    Ok(RatioFamily { entries, closed: p.closed_form_ratio().cloned(), times: p.times().to_vec(), pitch: p.pitch() })
}

/// Ratios for every time.
pub fn ratio_family(p: &ProcessModel, tol: f64) -> Result<RatioFamily> {
    let ctx = Context::new(p)?;
    let densities: Vec<_> = (0..=p.last()).map(|k| density_with(&ctx, k)).collect();
    ratio_family_with(&ctx, &densities, tol)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Eq5Row {
    /// `None` for the whole lattice.
    pub point: Option<f64>,
    /// `M_{s}(B)`
    pub lhs: Coords,
    /// `∫_B g_s dM_{w̃_s}`
    pub rhs: Coords,
    pub gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Eq5Report {
    pub time: usize,
    pub singletons: Vec<Eq5Row>,
    pub whole: Eq5Row,
    pub max_gap: f64,
    pub pass: bool,
}

/// `M_s(B)` against `∫_B g_s dM_{w̃_s}` for every singleton `B` and the whole lattice.
pub fn check_eq5(p: &ProcessModel, df: &MarginalDensity, rf: &RatioFamily, tol: f64) -> Result<Eq5Report> {
    let k = df.time;
    let shift = p.shift(k);
    let zero = VectorValue::zeros(p.dim(), p.norm());
    let entry = &rf.entries[k];
    let mut points: Vec<i64> = df.points.iter().copied().chain(df.points.iter().map(|n| n + shift)).collect();
    points.sort_unstable();
    points.dedup();
    let mut singletons = Vec::with_capacity(points.len());
    let mut max_gap: f64 = 0.0;
    for x in points {
        if entry.points.binary_search(&x).is_ok_and(|i| entry.vanishing[i]) {
            continue;
        }
        let lhs = df.at(x).unwrap_or(&zero);
        let rhs = df.at(x - shift).map_or_else(|| zero.clone(), |f| f.scale(rf.g(k, x)));
        let gap = lhs.dist(&rhs);
        max_gap = max_gap.max(gap);
        singletons.push(Eq5Row { point: Some(p.value(x)), lhs: lhs.into(), rhs: (&rhs).into(), gap });
    }
    // whole lattice through the B₂ engine on the shifted lattice
    let space = SpaceModel::finite(df.points.iter().map(|n| (n + shift).to_string()))?;
    let shifted = VectorMeasure::new(space.clone(), df.values.clone())?;
    let g = |t: Point| rf.g(k, df.points[t.atom()] + shift);
    let rhs = b2_integrate(&g, &shifted, &space.whole(), 1.0, &EngineOptions::default().with_norm(p.norm()))?.value;
    let lhs = df.total();
    let gap = lhs.dist(&rhs);
    max_gap = max_gap.max(gap);
    let whole = Eq5Row { point: None, lhs: (&lhs).into(), rhs: (&rhs).into(), gap };
    Ok(Eq5Report { time: k, singletons, whole, max_gap, pass: max_gap <= tol })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NullIntegralReport {
    /// `∫_T w_{s_k} dM` per time.
    pub integrals: Vec<Coords>,
    pub max_norm: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct A1bReport {
    pub eq5: Vec<Eq5Report>,
    pub max_gap: f64,
    pub max_deviation: f64,
    pub max_uncovered: f64,
    pub pass: bool,
}

/// A1a, A1b with its marginal identity, A1c and A2.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AssumptionReports {
    pub tol: f64,
    pub a1a: NullIntegralReport,
    pub a1b: A1bReport,
    pub a1c: MartingaleReport,
    pub a2: MartingaleReport,
}

impl AssumptionReports {
    pub fn all_pass(&self) -> bool {
        self.a1a.pass && self.a1b.pass && self.a1c.pass && self.a2.pass
    }
}

pub(crate) fn assumptions_with(
    ctx: &Context,
    densities: &[MarginalDensity],
    rf: &RatioFamily,
    tol: f64,
) -> Result<AssumptionReports> {
    let p = ctx.p;
    let integrals: Vec<Coords> = densities.iter().map(|d| (&d.null_integral).into()).collect();
    let max_norm = densities.iter().map(|d| d.null_integral.norm()).fold(0.0, f64::max);
    let a1a = NullIntegralReport { integrals, max_norm, pass: max_norm <= tol };

    let eq5 = densities.iter().map(|df| check_eq5(p, df, rf, tol)).collect::<Result<Vec<_>>>()?;
    let max_gap = eq5.iter().map(|r| r.max_gap).fold(0.0, f64::max);
    let max_deviation = rf.entries.iter().map(|e| e.max_deviation).fold(0.0, f64::max);
    let max_uncovered = rf.entries.iter().map(|e| e.uncovered).fold(0.0, f64::max);
    let a1b = A1bReport { pass: eq5.iter().all(|r| r.pass), eq5, max_gap, max_deviation, max_uncovered };

    let m = ProcessMeasure::of(p);
    let a1c = ctx.martingale(&m, &|k, n| rf.g(k, n + p.shift(k)), tol)?;
    let a2 = ctx.martingale(
        &m,
        &|k, n| {
            let x = n + p.shift(k);
            p.value(x) * rf.g(k, x)
        },
        tol,
    )?;
    Ok(AssumptionReports { tol, a1a, a1b, a1c, a2 })
}

/// Runs every hypothesis check at tolerance `tol`.
pub fn check_assumptions(p: &ProcessModel, tol: f64) -> Result<AssumptionReports> {
    let ctx = Context::new(p)?;
    let densities: Vec<_> = (0..=p.last()).map(|k| density_with(&ctx, k)).collect();
    let rf = ratio_family_with(&ctx, &densities, tol)?;
    assumptions_with(&ctx, &densities, &rf, tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::ScalarMeasure;
    use crate::space::SpaceModel;
    use crate::vector::Norm;

    fn one_step(q: f64, pitch: f64, probs: [f64; 2], v: Vec<f64>) -> ProcessModel {
        let s = SpaceModel::finite(["+", "-"]).unwrap();
        let pr = ScalarMeasure::new(s, probs.to_vec()).unwrap();
        let m = VectorMeasure::diagonal(&pr, &VectorValue::new(v, Norm::L2));
        ProcessModel::paths(m, vec![0.0, 1.0], vec![vec![0.0, 0.0], vec![1.0, -1.0]], q, pitch).unwrap()
    }

    #[test]
    fn zero_process_density() {
        let s = SpaceModel::finite_n(3).unwrap();
        let m = VectorMeasure::from_rows(s, vec![vec![1.0, 0.0], vec![0.0, 2.0], vec![1.0, 1.0]], Norm::L1).unwrap();
        let p = ProcessModel::paths(m.clone(), vec![0.0], vec![vec![0.0; 3]], 0.0, 1.0).unwrap();
        let d = marginal_density(&p, 0).unwrap();
        assert_eq!(d.points, vec![0]);
        assert_eq!(d.values[0], m.total());
        assert!(d.null_integral.is_zero());
    }

    #[test]
    fn fair_coin_density() {
        let p = one_step(0.0, 1.0, [0.5, 0.5], vec![1.0, 0.0]);
        let d = marginal_density(&p, 1).unwrap();
        assert_eq!(d.points, vec![-1, 1]);
        assert_eq!(d.values[0].coords(), &[0.5, 0.0]);
        assert_eq!(d.values[1].coords(), &[0.5, 0.0]);
        assert_eq!(d.null_integral.coords(), &[0.0, 0.0]);
    }

    #[test]
    fn zero_drift_ratio_is_one() {
        let p = one_step(0.0, 1.0, [0.3, 0.7], vec![1.0, 2.0]);
        let rf = ratio_family(&p, 1e-12).unwrap();
        for e in &rf.entries {
            assert!(e.g.iter().all(|&g| g == 1.0));
        }
        let r = check_assumptions(&p, 1e-12).unwrap();
        assert!(r.a1b.pass);
        assert_eq!(r.a1b.max_gap, 0.0);
    }

    #[test]
    fn boundary_mass_without_partner_is_a_violation() {
        // shift of 1 at s = 1: f(−1) ≠ 0 but f(−2) = 0
        let p = one_step(1.0, 1.0, [0.5, 0.5], vec![1.0]);
        let df = marginal_density(&p, 1).unwrap();
        let e = girsanov_ratio(&p, &df, 1e-12).unwrap_err();
        assert!(e.is_assumption_violation());
    }

    #[test]
    fn cross_component_disagreement_is_reported() {
        let s = SpaceModel::finite_n(3).unwrap();
        let m = VectorMeasure::from_rows(s, vec![vec![1e-12, 1e-12], vec![1e-12, 3e-12], vec![0.0, 0.0]], Norm::L2).unwrap();
        let p = ProcessModel::paths(m, vec![0.0, 1.0], vec![vec![0.0; 3], vec![0.0, 1.0, 2.0]], 1.0, 1.0).unwrap();
        let df = marginal_density(&p, 1).unwrap();
        // x = 0 has no partner but its mass is below tol; at x = 1 the ratios are 1 and 3
        let e = girsanov_ratio(&p, &df, 1e-9).unwrap_err();
        assert!(matches!(e, BmgError::CrossComponent { point: 1, .. }), "{e:?}");
    }
}
