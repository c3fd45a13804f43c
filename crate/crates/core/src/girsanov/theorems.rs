//! The measure `Q(A) = ∫_A g_S(w̃_S) dM`, its marginals, and the `Q`-martingale property
//! of `w̃` with the intermediate identities of its proof.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::Serialize;

use crate::error::Result;
use crate::vector::VectorValue;

use super::assumptions::{assumptions_with, density_with, ratio_family_with, AssumptionReports, MarginalDensity};
use super::martingale::{BlockRef, Context, MartingaleReport};
use super::{Coords, Kind, ProcessMeasure, ProcessModel, RatioFamily};

/// `Q` with density `g_S(w̃_S)` against `M`.
pub fn girsanov_measure(p: &ProcessModel, rf: &RatioFamily) -> Result<ProcessMeasure> {
    let last = p.last();
    let shift = p.shift(last);
    Ok(match p.kind() {
        Kind::Paths { m, w } => ProcessMeasure::Atoms(m.reweighted(|a| rf.g(last, w[last][a] + shift))),
        Kind::Walk { weight, law } => {
            let rho: Vec<f64> = law.states(last).map(|n| rf.g(last, n + shift)).collect();
            ProcessMeasure::Walk { weight: weight.clone(), reach: Some(Arc::new(law.backward_all(rho, last))) }
        }
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MarginalRow {
    pub time: usize,
    pub point: f64,
    /// `M(w_s⁻¹({x}))`
    pub m: Coords,
    /// `Q(w̃_s⁻¹({x}))`
    pub q: Coords,
    /// Largest coordinate difference.
    pub gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Theorem6Report {
    pub rows: Vec<MarginalRow>,
    pub max_gap: f64,
    /// Largest coordinate of `|Q(T) − M(T)|`.
    pub mass_gap: f64,
    pub pass: bool,
}

/// Distribution of `w̃_{s_k}` under `q` in lattice units.
fn shifted_marginal(ctx: &Context, q: &ProcessMeasure, k: usize) -> BTreeMap<i64, VectorValue> {
    let p = ctx.p;
    let shift = p.shift(k);
    let mut out = BTreeMap::new();
    match (p.kind(), q) {
        (Kind::Paths { w, .. }, ProcessMeasure::Atoms(qm)) => {
            for (a, &n) in w[k].iter().enumerate() {
                out.entry(n + shift).or_insert_with(|| qm.zero_value()).add_assign(qm.atom(a));
            }
        }
        (Kind::Walk { law, .. }, ProcessMeasure::Walk { weight, reach }) => {
            let marg = &ctx.marginals.as_ref().expect("walk marginals")[k];
            for (i, n) in law.states(k).enumerate() {
                if marg[i] != 0.0 {
                    let e = reach.as_ref().map_or(1.0, |r| r[k][i]);
                    out.insert(n + shift, weight.scale(marg[i] * e));
                }
            }
        }
        _ => unreachable!("measure does not match the process"),
    }
    out
}

pub(crate) fn theorem6_with(ctx: &Context, densities: &[MarginalDensity], q: &ProcessMeasure, tol: f64) -> Theorem6Report {
    let p = ctx.p;
    let zero = VectorValue::zeros(p.dim(), p.norm());
    let mut rows = Vec::new();
    for (k, df) in densities.iter().enumerate() {
        let qk = shifted_marginal(ctx, q, k);
        let mut points: Vec<i64> = df.points.iter().chain(qk.keys()).copied().collect();
        points.sort_unstable();
        points.dedup();
        for x in points {
            let m = df.at(x).unwrap_or(&zero);
            let qv = qk.get(&x).unwrap_or(&zero);
            rows.push(MarginalRow { time: k, point: p.value(x), gap: m.max_abs_diff(qv), m: m.into(), q: qv.into() });
        }
    }
    let max_gap = rows.iter().map(|r| r.gap).fold(0.0, f64::max);
    let mass_gap = q.total(p).max_abs_diff(&p.total_mass());
    Theorem6Report { pass: max_gap <= tol && mass_gap <= tol, rows, max_gap, mass_gap }
}

/// `Q(w̃_s⁻¹({x}))` against `M(w_s⁻¹({x}))` for every time and lattice point.
pub fn verify_theorem6(p: &ProcessModel, q: &ProcessMeasure, tol: f64) -> Result<Theorem6Report> {
    let ctx = Context::new(p)?;
    let densities: Vec<_> = (0..=p.last()).map(|k| density_with(&ctx, k)).collect();
    Ok(theorem6_with(&ctx, &densities, q, tol))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChainEntry {
    pub s: usize,
    pub v: Option<usize>,
    pub block: BlockRef,
    pub lhs: Coords,
    pub rhs: Coords,
    pub gap: f64,
}

/// One intermediate identity over generating blocks. For walks only the worst block per
/// `(s, v)` is kept.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChainReport {
    pub identity: String,
    pub checked: usize,
    pub max_gap: f64,
    pub pass: bool,
    pub entries: Vec<ChainEntry>,
}

impl ChainReport {
    fn new(identity: &str, groups: Vec<(usize, Option<usize>, Vec<(BlockRef, VectorValue, VectorValue)>)>, keep_all: bool, tol: f64) -> Self {
        let mut entries = Vec::new();
        let mut checked = 0;
        for (s, v, rows) in groups {
            checked += rows.len();
            let mut mapped = rows.into_iter().map(|(block, lhs, rhs)| ChainEntry {
                s,
                v,
                block,
                gap: lhs.dist(&rhs),
                lhs: (&lhs).into(),
                rhs: (&rhs).into(),
            });
            if keep_all {
                entries.extend(mapped);
            } else if let Some(first) = mapped.next() {
                entries.push(mapped.fold(first, |a, b| if b.gap > a.gap { b } else { a }));
            }
        }
        let max_gap = entries.iter().map(|e| e.gap).fold(0.0, f64::max);
        ChainReport { identity: identity.into(), checked, max_gap, pass: max_gap <= tol, entries }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Theorem7Report {
    /// `w̃` under `Q`.
    pub martingale: MartingaleReport,
    /// `∫_E w̃_v dQ = ∫_E w̃_v g_v(w̃_v) dM`
    pub chain_i: ChainReport,
    /// `Q(E) = ∫_E g_s(w̃_s) dM`
    pub chain_ii: ChainReport,
    /// `∫_E w_s g_s(w̃_s) dM = ∫_E w_s dQ`
    pub chain_iii: ChainReport,
    pub pass: bool,
}

fn zip_blocks(
    a: Vec<(BlockRef, VectorValue)>,
    b: Vec<(BlockRef, VectorValue)>,
) -> Vec<(BlockRef, VectorValue, VectorValue)> {
    a.into_iter().zip(b).map(|((block, x), (_, y))| (block, x, y)).collect()
}

pub(crate) fn theorem7_with(ctx: &Context, rf: &RatioFamily, q: &ProcessMeasure, tol: f64) -> Result<Theorem7Report> {
    let p = ctx.p;
    let m = ProcessMeasure::of(p);
    let keep_all = !p.is_walk();
    let tilde = |k: usize, n: i64| p.value(n + p.shift(k));
    let g = |k: usize, n: i64| rf.g(k, n + p.shift(k));

    let martingale = ctx.martingale(q, &tilde, tol)?;

    let mut groups = Vec::new();
    for v in 1..=p.last() {
        let lhs = ctx.integrals_upto(q, v, &|n| tilde(v, n))?;
        let rhs = ctx.integrals_upto(&m, v, &|n| tilde(v, n) * g(v, n))?;
        for (s, (l, r)) in lhs.into_iter().zip(rhs).take(v).enumerate() {
            groups.push((s, Some(v), zip_blocks(l, r)));
        }
    }
    groups.sort_by_key(|g| (g.0, g.1));
    let chain_i = ChainReport::new("integral of shifted process under Q equals its g-weighted integral under M", groups, keep_all, tol);

    let mut ii = Vec::new();
    let mut iii = Vec::new();
    for s in 0..=p.last() {
        let lhs = ctx.integrals_at(q, s, &|_| 1.0)?;
        let rhs = ctx.integrals_at(&m, s, &|n| g(s, n))?;
        ii.push((s, None, zip_blocks(lhs, rhs)));
        let lhs = ctx.integrals_at(&m, s, &|n| p.value(n) * g(s, n))?;
        let rhs = ctx.integrals_at(q, s, &|n| p.value(n))?;
        iii.push((s, None, zip_blocks(lhs, rhs)));
    }
    let chain_ii = ChainReport::new("Q of a block equals the integral of g at the same time", ii, keep_all, tol);
    let chain_iii = ChainReport::new("integral of w times g under M equals integral of w under Q", iii, keep_all, tol);
    let pass = martingale.pass && chain_i.pass && chain_ii.pass && chain_iii.pass;
    Ok(Theorem7Report { martingale, chain_i, chain_ii, chain_iii, pass })
}

/// The `Q`-martingale property of `w̃` and the three intermediate identities.
pub fn verify_theorem7(p: &ProcessModel, rf: &RatioFamily, q: &ProcessMeasure, tol: f64) -> Result<Theorem7Report> {
    theorem7_with(&Context::new(p)?, rf, q, tol)
}

/// Everything the change of measure produces for one process.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GirsanovBundle {
    pub tol: f64,
    pub closed_form_ratio: bool,
    pub assumptions: AssumptionReports,
    pub m_total: Coords,
    pub q_total: Coords,
    pub theorem6: Theorem6Report,
    pub theorem7: Theorem7Report,
}

impl GirsanovBundle {
    pub fn pass(&self) -> bool {
        self.assumptions.all_pass() && self.theorem6.pass && self.theorem7.pass
    }
}

/// Checks the hypotheses, builds `Q`, and verifies both theorems at `tol`.
pub fn run_girsanov(p: &ProcessModel, tol: f64) -> Result<(GirsanovBundle, ProcessMeasure)> {
    let ctx = Context::new(p)?;
    let densities: Vec<_> = (0..=p.last()).map(|k| density_with(&ctx, k)).collect();
    let rf = ratio_family_with(&ctx, &densities, tol)?;
    let assumptions = assumptions_with(&ctx, &densities, &rf, tol)?;
    let q = girsanov_measure(p, &rf)?;
    let theorem6 = theorem6_with(&ctx, &densities, &q, tol);
    let theorem7 = theorem7_with(&ctx, &rf, &q, tol)?;
    let bundle = GirsanovBundle {
        tol,
        closed_form_ratio: rf.is_closed_form(),
        assumptions,
        m_total: (&p.total_mass()).into(),
        q_total: (&q.total(p)).into(),
        theorem6,
        theorem7,
    };
    Ok((bundle, q))
}
