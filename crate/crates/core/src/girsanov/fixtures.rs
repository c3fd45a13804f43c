//! Ready-made processes: a discretized Brownian walk, small exact instances, and a
//! process that breaks the second hypothesis.
//!
//! Both Gaussian constructions use the discrete Gaussian `φ(j) ∝ exp(−j²/2σ²)` on the
//! lattice. Shifting it by `u` steps is an exact exponential tilt,
//! `φ(j + u) = φ(j)·exp(−θj − θu/2)` with `θ = u/σ²`, and the same holds for its
//! convolution powers. Truncating the support to `|j| ≤ H` is the only source of error,
//! and its size is read off the two edge masses of the law.

use std::sync::Arc;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{BmgError, Result};
use crate::measure::{ScalarMeasure, VectorMeasure};
use crate::space::SpaceModel;
use crate::vector::{Norm, VectorValue};

use super::assumptions::check_assumptions;
use super::walk::WalkLaw;
use super::ProcessModel;

/// Largest number of walk states (summed over time) a fixture may allocate.
pub const STATE_BUDGET: usize = 1_000_000;

fn discrete_gaussian(sigma: f64, half: i64) -> Vec<f64> {
    let raw: Vec<f64> = (-half..=half).map(|j| (-(j * j) as f64 / (2.0 * sigma * sigma)).exp()).collect();
    let z: f64 = raw.iter().sum();
    raw.into_iter().map(|x| x / z).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct BrownianParams {
    pub steps: usize,
    pub dt: f64,
    /// Requested lattice pitch; the effective pitch may be finer so drift shifts align.
    pub delta: f64,
    pub q: f64,
    pub weight: VectorValue,
}

impl Default for BrownianParams {
    fn default() -> Self {
        BrownianParams {
            steps: 16,
            dt: 0.0625,
            delta: 0.01,
            q: 0.5,
            weight: VectorValue::new(vec![1.0, 2.0], Norm::L2),
        }
    }
}

#[derive(Debug, Clone)]
pub struct BrownianFixture {
    pub process: ProcessModel,
    /// Bound on every assumption and theorem gap, derived from the truncation below.
    pub tolerance: f64,
    pub pitch: f64,
    pub sigma_units: f64,
    pub half_width: i64,
    /// Drift shift per step in lattice units.
    pub shift_per_step: i64,
    /// Increment mass in the `|u|` lattice points at the trailing edge of the support.
    pub trailing_tail: f64,
    /// Untruncated mass of the `|u|` points just beyond the leading edge.
    pub leading_tail: f64,
    /// `|E[exp(−θj − θu/2)] − 1|` under the truncated law.
    pub tilt_defect: f64,
    /// Mean of the tilted increment plus `u`, in value units.
    pub tilted_mean_defect: f64,
}

/// A Gaussian-increment walk on the lattice under `M = P·weight`, with
/// `g_t(x) = exp(−q·x + q²t/2)` declared in closed form.
///
/// Increments have variance `dt` and are truncated at six standard deviations. When
/// `q·dt` is not a multiple of `delta` the pitch is refined to `q·dt / ⌈q·dt/delta⌉`.
pub fn fixture_brownian_walk(params: &BrownianParams) -> Result<BrownianFixture> {
    let BrownianParams { steps, dt, delta, q, ref weight } = *params;
    if !(dt > 0.0 && delta > 0.0 && dt.is_finite() && delta.is_finite() && q.is_finite()) {
        return Err(BmgError::InvalidInput("dt and delta must be positive and q finite".into()));
    }
    if steps == 0 {
        return Err(BmgError::InvalidInput("the walk needs at least one step".into()));
    }
    let (pitch, u) = if q == 0.0 {
        (delta, 0i64)
    } else {
        let per_step = q.abs() * dt;
        let c = (per_step / delta * (1.0 - 1e-12)).ceil().max(1.0);
        (per_step / c, q.signum() as i64 * c as i64)
    };
    let sigma = dt.sqrt() / pitch;
    let half = (6.0 * sigma).ceil() as i64;
    let states: usize = (0..=steps).map(|k| 2 * k * half as usize + 1).sum();
    if states > STATE_BUDGET {
        return Err(BmgError::SizeBudget { needed: states, limit: STATE_BUDGET });
    }
    let probs = discrete_gaussian(sigma, half);
    let law = WalkLaw::new(probs.clone())?;

    // truncation defects
    let theta = u as f64 / (sigma * sigma);
    let z_raw: f64 = (-half..=half).map(|j| (-(j * j) as f64 / (2.0 * sigma * sigma)).exp()).sum();
    let span = u.abs();
    let trailing_tail: f64 = if u >= 0 {
        (-half..(-half + span)).map(|j| law.prob(j)).sum()
    } else {
        ((half - span + 1)..=half).map(|j| law.prob(j)).sum()
    };
    let leading_tail: f64 =
        (1..=span).map(|i| (-((half + i) * (half + i)) as f64 / (2.0 * sigma * sigma)).exp() / z_raw).sum();
    let tilt = |j: i64| (-theta * j as f64 - theta * u as f64 / 2.0).exp();
    let m: f64 = (-half..=half).map(|j| law.prob(j) * tilt(j)).sum();
    let mu1: f64 = (-half..=half).map(|j| law.prob(j) * (j + u) as f64 * tilt(j)).sum();

    let k = steps as f64;
    let vn = weight.norm();
    let m_bar = m.max(1.0);
    let d_k = k * (m - 1.0).abs() * m_bar.powi(steps as i32);
    let e5 = vn * k * (trailing_tail + leading_tail * (1.0 + leading_tail).powi(steps as i32 - 1));
    let mass = vn + e5;
    let reach = pitch * k * (half + span) as f64;
    let a1c = mass * d_k;
    let a2 = mass * (reach * d_k + pitch * k * mu1.abs() * m_bar.powi(steps as i32));
    let thm6 = e5 + mass * d_k;
    let floor = 1e-11 * vn * (1.0 + reach);
    let tolerance = 2.0 * e5.max(a1c).max(a2).max(thm6) + floor;

    let process = ProcessModel::walk(weight.clone(), law, dt, steps, q, pitch)?
        .with_closed_form_ratio(Arc::new(move |t: f64, x: f64| (-q * x + q * q * t / 2.0).exp()));
    Ok(BrownianFixture {
        process,
        tolerance,
        pitch,
        sigma_units: sigma,
        half_width: half,
        shift_per_step: u,
        trailing_tail,
        leading_tail,
        tilt_defect: (m - 1.0).abs(),
        tilted_mean_defect: mu1 * pitch,
    })
}

#[derive(Debug, Clone)]
pub struct ExactFixture {
    pub process: ProcessModel,
    pub steps: usize,
    pub half_width: i64,
    pub sigma_units: f64,
    pub attempts: usize,
}

/// Largest path count of an exact fixture.
pub const EXACT_ATOM_LIMIT: usize = 64;
const EXACT_ATTEMPTS: usize = 16;
const EXACT_TOL: f64 = 1e-12;

fn exact_candidate(rng: &mut ChaCha8Rng) -> Result<(ProcessModel, usize, i64, f64)> {
    let steps = rng.gen_range(1..=2usize);
    let half: i64 = if steps == 1 { rng.gen_range(3..=10) } else { 3 };
    // edge mass exp(−H²/2σ²) stays below 1e-14
    let sigma = half as f64 / rng.gen_range(8.2..9.0);
    let probs = discrete_gaussian(sigma, half);
    let width = probs.len();
    let pitch = rng.gen_range(0.05..1.0);
    let dt = rng.gen_range(0.1..1.0);
    let q = pitch / dt;
    let dim = rng.gen_range(1..=4usize);
    let norm = Norm::ALL[rng.gen_range(0..3)];
    let coords: Vec<f64> = (0..dim)
        .map(|_| {
            let x: f64 = rng.gen_range(0.1..2.0);
            if rng.gen_bool(0.5) { x } else { -x }
        })
        .collect();
    let v = VectorValue::new(coords, norm);

    let atoms = width.pow(steps as u32);
    let space = SpaceModel::finite((0..atoms).map(|a| format!("path{a}")))?;
    let mut masses = Vec::with_capacity(atoms);
    let mut values = vec![vec![0.0; atoms]; steps + 1];
    for a in 0..atoms {
        let mut rest = a;
        let mut mass = 1.0;
        let mut pos = 0i64;
        for row in values.iter_mut().skip(1) {
            let j = rest % width;
            rest /= width;
            mass *= probs[j];
            pos += j as i64 - half;
            row[a] = pos as f64 * pitch;
        }
        masses.push(mass);
    }
    let p = ScalarMeasure::new(space, masses)?;
    let m = VectorMeasure::diagonal(&p, &v);
    let times = (0..=steps).map(|k| k as f64 * dt).collect();
    Ok((ProcessModel::paths(m, times, values, q, pitch)?, steps, half, sigma))
}

/// A small path process whose hypotheses hold to `1e-12`, drawn from `seed`.
///
/// The increments follow a narrow discrete Gaussian, and the drift moves one lattice
/// step per time step. Exactness is limited only by the edge mass of the truncated law,
/// kept below `1e-14`. The builder re-checks every hypothesis before returning and
/// redraws otherwise.
pub fn fixture_exact_synthetic(seed: u64) -> Result<ExactFixture> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut last_reason = String::new();
    for attempt in 1..=EXACT_ATTEMPTS {
        let (process, steps, half, sigma) = exact_candidate(&mut rng)?;
        if process.size() > EXACT_ATOM_LIMIT {
            last_reason = format!("{} atoms exceed the limit", process.size());
            continue;
        }
        match check_assumptions(&process, EXACT_TOL) {
            Ok(r) if r.all_pass() => {
                return Ok(ExactFixture { process, steps, half_width: half, sigma_units: sigma, attempts: attempt })
            }
            Ok(r) => {
                last_reason = format!(
                    "hypothesis gaps a1a {:e}, a1b {:e}, a1c {:e}, a2 {:e}",
                    r.a1a.max_norm, r.a1b.max_gap, r.a1c.max_gap, r.a2.max_gap
                )
            }
            Err(e) => last_reason = e.to_string(),
        }
    }
    Err(BmgError::ConstructionInfeasible { attempts: EXACT_ATTEMPTS, reason: last_reason })
}

/// A two-step process with `q = 0` whose hypotheses A1a–c hold but `w` is not an
/// `M`-martingale: after an up-move the walk drifts down by 1/2 on average, and after a
/// down-move it drifts up by 1/2.
pub fn fixture_a2_violation() -> ProcessModel {
    // paths: (+1, +2), (+1, 0), (−1, 0), (−1, −2)
    let space = SpaceModel::finite(["up-up", "up-down", "down-up", "down-down"]).expect("labels");
    let p = ScalarMeasure::new(space, vec![0.125, 0.375, 0.375, 0.125]).expect("masses");
    let m = VectorMeasure::diagonal(&p, &VectorValue::new(vec![1.0, 2.0], Norm::L2));
    let values = vec![vec![0.0; 4], vec![1.0, 1.0, -1.0, -1.0], vec![2.0, 0.0, 0.0, -2.0]];
    ProcessModel::paths(m, vec![0.0, 1.0, 2.0], values, 0.0, 1.0).expect("aligned by construction")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pitch_is_refined_to_align_the_drift() {
        let f = fixture_brownian_walk(&BrownianParams { steps: 2, ..BrownianParams::default() }).unwrap();
        // q·dt = 0.03125 = 3.125·0.01, so four steps of 0.0078125
        assert_eq!(f.pitch, 0.0078125);
        assert_eq!(f.shift_per_step, 4);
        assert_eq!(f.sigma_units, 32.0);
        assert_eq!(f.half_width, 192);
    }

    #[test]
    fn zero_drift_keeps_requested_pitch() {
        let f = fixture_brownian_walk(&BrownianParams { steps: 2, q: 0.0, ..BrownianParams::default() }).unwrap();
        assert_eq!(f.pitch, 0.01);
        assert_eq!(f.shift_per_step, 0);
        assert_eq!(f.trailing_tail, 0.0);
    }

    #[test]
    fn oversized_walk_is_refused() {
        let e = fixture_brownian_walk(&BrownianParams { steps: 400, delta: 0.0001, ..BrownianParams::default() })
            .unwrap_err();
        assert!(matches!(e, BmgError::SizeBudget { .. }));
    }

    #[test]
    fn exact_fixture_respects_atom_limit() {
        for seed in 0..5 {
            let f = fixture_exact_synthetic(seed).unwrap();
            assert!(f.process.size() <= EXACT_ATOM_LIMIT);
        }
    }
}
