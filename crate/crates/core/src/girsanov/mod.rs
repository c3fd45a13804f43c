//! Scalar processes under a vector measure, their change of measure, and the checks
//! around it.
//!
//! Process values live on a lattice `pitch·ℤ`; the drift shift `q·s_k` must be a whole
//! number of lattice steps so shifted values stay on the lattice.
//!
//! Two representations share one interface:
//! * `Paths`: a finite space whose atoms are whole paths, with an explicit vector measure;
//! * `Walk`: a homogeneous lattice random walk started at 0 under `M = P·v`, handled
//!   through its transition kernel so the path space is never enumerated.
//!
//! For walks the generating blocks of `ℰ_s` are replaced by the state blocks
//! `{w_s = y}`. Every process checked here is a function of the current state, so by the
//! Markov property the identity gap on any history block inside `{w_s = y}` is the same
//! multiple of its probability as on `{w_s = y}` itself.

mod assumptions;
mod fixtures;
mod martingale;
mod theorems;
mod walk;

use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::conditional::{sigma_of, SubSigmaAlgebra};
use crate::error::{BmgError, Result};
use crate::func::ScalarTable;
use crate::measure::VectorMeasure;
use crate::space::SpaceRef;
use crate::vector::{Norm, VectorValue};

pub use assumptions::{
    check_assumptions, check_eq5, girsanov_ratio, marginal_density, ratio_family, AssumptionReports, Eq5Report,
    Eq5Row, MarginalDensity, NullIntegralReport, RatioEntry, RatioFamily,
};
pub use fixtures::{
    fixture_a2_violation, fixture_brownian_walk, fixture_exact_synthetic, BrownianFixture, BrownianParams,
    ExactFixture,
};
pub use martingale::{is_martingale, BlockRef, MartingaleEntry, MartingaleReport};
pub use theorems::{
    girsanov_measure, run_girsanov, verify_theorem6, verify_theorem7, ChainEntry, ChainReport, GirsanovBundle,
    MarginalRow, Theorem6Report, Theorem7Report,
};
pub use walk::WalkLaw;

/// Tolerance used when snapping reals onto the lattice, relative to the pitch.
const SNAP_TOL: f64 = 1e-9;

/// `x / pitch` as an integer, if `x` sits on the lattice.
pub(crate) fn snap(x: f64, pitch: f64) -> Option<i64> {
    let r = x / pitch;
    let n = r.round();
    ((r - n).abs() <= SNAP_TOL * r.abs().max(1.0) && n.abs() < 9.0e15).then_some(n as i64)
}

/// Closed-form ratio `g(t, x)` declared by a fixture.
pub type ClosedRatio = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

#[derive(Clone)]
pub(crate) enum Kind {
    Paths { m: VectorMeasure, w: Vec<Vec<i64>> },
    Walk { weight: VectorValue, law: WalkLaw },
}

#[derive(Clone)]
pub struct ProcessModel {
    times: Vec<f64>,
    q: f64,
    pitch: f64,
    shifts: Vec<i64>,
    closed: Option<ClosedRatio>,
    kind: Kind,
}

impl fmt::Debug for ProcessModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut d = f.debug_struct("ProcessModel");
        d.field("times", &self.times).field("q", &self.q).field("pitch", &self.pitch);
        match &self.kind {
            Kind::Paths { m, .. } => d.field("atoms", &m.space().len()),
            Kind::Walk { law, .. } => d.field("walk_half_width", &law.half_width()),
        };
        d.field("closed_form_ratio", &self.closed.is_some()).finish()
    }
}

fn validate_times(times: &[f64]) -> Result<()> {
    if times.is_empty() {
        return Err(BmgError::InvalidInput("time grid is empty".into()));
    }
    if times[0] != 0.0 {
        return Err(BmgError::InvalidInput("time grid must start at 0".into()));
    }
    if times.iter().any(|t| !t.is_finite()) || times.windows(2).any(|w| w[0] >= w[1]) {
        return Err(BmgError::InvalidInput("time grid must be finite and strictly increasing".into()));
    }
    Ok(())
}

fn shifts_for(times: &[f64], q: f64, pitch: f64) -> Result<Vec<i64>> {
    if !(pitch > 0.0 && pitch.is_finite()) {
        return Err(BmgError::InvalidInput(format!("lattice pitch must be positive, got {pitch}")));
    }
    if !q.is_finite() {
        return Err(BmgError::InvalidInput("drift q must be finite".into()));
    }
    times
        .iter()
        .map(|&s| {
            snap(q * s, pitch).ok_or_else(|| {
                BmgError::LatticeAlignment(format!(
                    "q·s = {} at s = {s} is not a multiple of the pitch {pitch}",
                    q * s
                ))
            })
        })
        .collect()
}

impl ProcessModel {
    /// A process on explicit path atoms: `values[k][a] = w_{s_k}(a)`.
    pub fn paths(m: VectorMeasure, times: Vec<f64>, values: Vec<Vec<f64>>, q: f64, pitch: f64) -> Result<Self> {
        validate_times(&times)?;
        if !m.space().is_finite() {
            return Err(BmgError::InvalidInput("path processes need a finite space".into()));
        }
        if values.len() != times.len() {
            return Err(BmgError::DimensionMismatch { expected: times.len(), found: values.len() });
        }
        let shifts = shifts_for(&times, q, pitch)?;
        let atoms = m.space().len();
        let mut w = Vec::with_capacity(values.len());
        for (k, row) in values.iter().enumerate() {
            if row.len() != atoms {
                return Err(BmgError::DimensionMismatch { expected: atoms, found: row.len() });
            }
            let snapped = row
                .iter()
                .enumerate()
                .map(|(a, &x)| {
                    snap(x, pitch).ok_or_else(|| {
                        BmgError::LatticeAlignment(format!(
                            "w at time index {k}, atom `{}` = {x} is not on the lattice of pitch {pitch}",
                            m.space().label(a)
                        ))
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            w.push(snapped);
        }
        Ok(ProcessModel { times, q, pitch, shifts, closed: None, kind: Kind::Paths { m, w } })
    }

    /// A homogeneous walk from 0 with `steps` increments of length `dt`, under `M = P·weight`.
    pub fn walk(weight: VectorValue, law: WalkLaw, dt: f64, steps: usize, q: f64, pitch: f64) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(BmgError::InvalidInput(format!("time step must be positive, got {dt}")));
        }
        let times: Vec<f64> = (0..=steps).map(|k| k as f64 * dt).collect();
        validate_times(&times)?;
        let shifts = shifts_for(&times, q, pitch)?;
        Ok(ProcessModel { times, q, pitch, shifts, closed: None, kind: Kind::Walk { weight, law } })
    }

    /// Declares `g_s(x)` in closed form; the checks then use it instead of the empirical ratio.
    pub fn with_closed_form_ratio(mut self, g: ClosedRatio) -> Self {
        self.closed = Some(g);
        self
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    /// Index of the final time `S`.
    pub fn last(&self) -> usize {
        self.times.len() - 1
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn pitch(&self) -> f64 {
        self.pitch
    }

    /// `q·s_k` in lattice steps.
    pub fn shift(&self, k: usize) -> i64 {
        self.shifts[k]
    }

    pub fn closed_form_ratio(&self) -> Option<&ClosedRatio> {
        self.closed.as_ref()
    }

    pub fn is_walk(&self) -> bool {
        matches!(self.kind, Kind::Walk { .. })
    }

    pub(crate) fn kind(&self) -> &Kind {
        &self.kind
    }

    pub fn dim(&self) -> usize {
        match &self.kind {
            Kind::Paths { m, .. } => m.dim(),
            Kind::Walk { weight, .. } => weight.dim(),
        }
    }

    pub fn norm(&self) -> Norm {
        match &self.kind {
            Kind::Paths { m, .. } => m.norm_tag(),
            Kind::Walk { weight, .. } => weight.norm_tag(),
        }
    }

    /// Real value of lattice index `n`.
    pub fn value(&self, n: i64) -> f64 {
        self.pitch * n as f64
    }

    /// The vector measure, for path processes.
    pub fn measure(&self) -> Option<&VectorMeasure> {
        match &self.kind {
            Kind::Paths { m, .. } => Some(m),
            Kind::Walk { .. } => None,
        }
    }

    /// The path space, for path processes.
    pub fn space(&self) -> Option<&SpaceRef> {
        self.measure().map(VectorMeasure::space)
    }

    /// `w_{s_k}` in lattice units per atom, for path processes.
    pub fn lattice_values(&self, k: usize) -> Option<&[i64]> {
        match &self.kind {
            Kind::Paths { w, .. } => Some(&w[k]),
            Kind::Walk { .. } => None,
        }
    }

    /// `w_{s_k}` as reals per atom, for path processes.
    pub fn values(&self, k: usize) -> Option<Vec<f64>> {
        self.lattice_values(k).map(|w| w.iter().map(|&n| self.value(n)).collect())
    }

    /// `w̃_{s_k} = w_{s_k} + q·s_k` per atom, for path processes.
    pub fn shifted_values(&self, k: usize) -> Option<Vec<f64>> {
        let shift = self.shift(k);
        self.lattice_values(k).map(|w| w.iter().map(|&n| self.value(n + shift)).collect())
    }

    /// `M(T)`.
    pub fn total_mass(&self) -> VectorValue {
        match &self.kind {
            Kind::Paths { m, .. } => m.total(),
            Kind::Walk { weight, law } => weight.scale(law.total().powi(self.last() as i32)),
        }
    }

    /// Number of atoms the process represents explicitly (states summed over time for walks).
    pub fn size(&self) -> usize {
        match &self.kind {
            Kind::Paths { m, .. } => m.space().len(),
            Kind::Walk { law, .. } => (0..=self.last()).map(|k| law.states_at(k)).sum(),
        }
    }
}

/// `ℰ_{s_0} ⊆ ℰ_{s_1} ⊆ …`, one sub-σ-algebra per time.
#[derive(Debug, Clone, PartialEq)]
pub struct Filtration {
    algebras: Vec<SubSigmaAlgebra>,
}

impl Filtration {
    pub fn new(algebras: Vec<SubSigmaAlgebra>) -> Result<Self> {
        if algebras.is_empty() {
            return Err(BmgError::InvalidInput("filtration needs at least one time".into()));
        }
        Ok(Filtration { algebras })
    }

    pub fn at(&self, k: usize) -> &SubSigmaAlgebra {
        &self.algebras[k]
    }

    pub fn len(&self) -> usize {
        self.algebras.len()
    }

    pub fn is_empty(&self) -> bool {
        self.algebras.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &SubSigmaAlgebra> {
        self.algebras.iter()
    }

    /// Every later block lies inside an earlier block.
    pub fn is_increasing(&self) -> Result<bool> {
        for w in self.algebras.windows(2) {
            if !w[0].is_sub_of(&w[1])? {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

/// The natural filtration: `ℰ_{s_k}` is generated by `w_{s_0}, …, w_{s_k}`.
pub fn build_filtration(p: &ProcessModel) -> Result<Filtration> {
    let Kind::Paths { m, .. } = &p.kind else {
        return Err(BmgError::InvalidInput(
            "walk processes are checked on state blocks; no path filtration is built".into(),
        ));
    };
    let space = m.space();
    let mut algebras: Vec<SubSigmaAlgebra> = Vec::with_capacity(p.times.len());
    for k in 0..p.times.len() {
        let own = sigma_of(space, &ScalarTable(p.values(k).expect("path process")))?;
        let next = match algebras.last() {
            Some(prev) => prev.join(&own)?,
            None => own,
        };
        algebras.push(next);
    }
    Filtration::new(algebras)
}

/// A change of measure `Q` on the process, or `M` itself.
#[derive(Debug, Clone)]
pub enum ProcessMeasure {
    Atoms(VectorMeasure),
    /// `weight · ρ(w_S) · P`; `reach[k][i]` is `E[ρ(w_S) | w_{s_k}]` on the `i`-th state.
    Walk { weight: VectorValue, reach: Option<Arc<Vec<Vec<f64>>>> },
}

impl ProcessMeasure {
    pub fn of(p: &ProcessModel) -> Self {
        match &p.kind {
            Kind::Paths { m, .. } => ProcessMeasure::Atoms(m.clone()),
            Kind::Walk { weight, .. } => ProcessMeasure::Walk { weight: weight.clone(), reach: None },
        }
    }

    pub fn total(&self, p: &ProcessModel) -> VectorValue {
        match (self, &p.kind) {
            (ProcessMeasure::Atoms(m), _) => m.total(),
            (ProcessMeasure::Walk { weight, reach }, Kind::Walk { law, .. }) => match reach {
                Some(r) => weight.scale(r[0][0]),
                None => weight.scale(law.total().powi(p.last() as i32)),
            },
            (ProcessMeasure::Walk { .. }, Kind::Paths { .. }) => unreachable!("walk measure on a path process"),
        }
    }
}

/// Serializable summary of a vector, used by reports.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Coords(pub Vec<f64>);

impl From<&VectorValue> for Coords {
    fn from(v: &VectorValue) -> Self {
        Coords(v.coords().to_vec())
    }
}
