//! Property tests for the module invariants: partition lattice laws, measure additivity,
//! engine linearity and sub-domain integrability, conditional-expectation laws, and the
//! structural laws of the change of measure.

use bmg::birkhoff::{b1_integrate, b2_integrate, layered_partition, EngineOptions};
use bmg::conditional::{conditional_expectation, sigma_of, SubSigmaAlgebra};
use bmg::corpus::{finite_case, grid_case, nested_case};
use bmg::func::{vector_fn, Product, ScalarTable, VectorFunction, VectorTable};
use bmg::girsanov::{build_filtration, fixture_exact_synthetic, run_girsanov, ProcessMeasure, ProcessModel};
use bmg::measure::{pushforward, ScalarMeasure, VectorMeasure};
use bmg::space::{common_refinement, is_finer, AtomSet, Partition, Point, SpaceModel};
use bmg::{Norm, VectorValue};
use proptest::prelude::*;

fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
    let scale = a.iter().chain(b).fold(1.0f64, |m, x| m.max(x.abs()));
    a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol * scale)
}

fn config(cases: u32) -> ProptestConfig {
    ProptestConfig { cases, ..ProptestConfig::default() }
}

// ---------- spaces and measures ----------

fn keyed(n: usize, keys: &[u8], k: u8) -> Vec<u8> {
    (0..n).map(|i| keys[i] % k).collect()
}

proptest! {
    #![proptest_config(config(64))]

    #[test]
    fn common_refinement_is_finer_than_both(
        keys in prop::collection::vec(any::<u8>(), 1..40),
        k1 in 1u8..6,
        k2 in 1u8..6,
    ) {
        let n = keys.len();
        let space = SpaceModel::finite_n(n).unwrap();
        let a = keyed(n, &keys, k1);
        let b: Vec<u8> = keys.iter().map(|x| (x / 7) % k2).collect();
        let p = Partition::by_key(space.clone(), |i| a[i]);
        let q = Partition::by_key(space, |i| b[i]);
        let r = common_refinement(&p, &q).unwrap();
        prop_assert!(is_finer(&r, &p).unwrap());
        prop_assert!(is_finer(&r, &q).unwrap());
    }

    #[test]
    fn vector_measure_is_additive_over_partitions(
        rows in prop::collection::vec(prop::collection::vec(-10.0f64..10.0, 3), 1..40),
        keys in prop::collection::vec(any::<u8>(), 40),
        k in 1u8..8,
    ) {
        let n = rows.len();
        let space = SpaceModel::finite_n(n).unwrap();
        let m = VectorMeasure::from_rows(space.clone(), rows, Norm::L2).unwrap();
        let p = Partition::by_key(space, |i| keys[i] % k);
        let mut sum = m.zero_value();
        for block in p.blocks() {
            sum.add_assign(&m.of_set(block));
        }
        prop_assert!(close(sum.coords(), m.total().coords(), 1e-12));
    }

    #[test]
    fn pushforward_conserves_mass(
        rows in prop::collection::vec(prop::collection::vec(-5.0f64..5.0, 2), 1..30),
        levels in prop::collection::vec(-3i8..3, 30),
    ) {
        let n = rows.len();
        let space = SpaceModel::finite_n(n).unwrap();
        let m = VectorMeasure::from_rows(space, rows, Norm::L1).unwrap();
        let f = ScalarTable(levels[..n].iter().map(|&l| f64::from(l) * 0.5).collect());
        let d = pushforward(&m, &f).unwrap();
        let mut sum = m.zero_value();
        for (_, mass) in d.iter() {
            sum.add_assign(mass);
        }
        prop_assert!(close(sum.coords(), m.total().coords(), 1e-12));
    }
}

// ---------- integration engines ----------

proptest! {
    #![proptest_config(config(24))]

    #[test]
    fn b1_is_linear_on_grids(index in 0usize..200, alpha in -2.0f64..2.0, beta in -2.0f64..2.0) {
        let c = grid_case(61, index);
        let eps = c.eps.max(1e-4);
        let opts = EngineOptions::default();
        let f = VectorFunction::Terms(c.coords.clone());
        let g = vector_fn(c.coords.len(), |t: Point, out: &mut [f64]| {
            let x = t.real();
            for (i, o) in out.iter_mut().enumerate() {
                *o = (x * (i as f64 + 1.0)).cos();
            }
        });
        let combo = vector_fn(c.coords.len(), |t: Point, out: &mut [f64]| {
            let (a, b) = (bmg::func::VectorFn::eval(&f, t), bmg::func::VectorFn::eval(&g, t));
            for ((o, x), y) in out.iter_mut().zip(a).zip(b) {
                *o = alpha * x + beta * y;
            }
        });
        let whole = c.space.whole();
        let rf = b1_integrate(&f, &c.mu, &whole, eps, &opts).unwrap();
        let rg = b1_integrate(&g, &c.mu, &whole, eps, &opts).unwrap();
        let rc = b1_integrate(&combo, &c.mu, &whole, eps, &opts).unwrap();
        let expect = &rf.value.scale(alpha) + &rg.value.scale(beta);
        let scale = 1.0 + alpha.abs() + beta.abs();
        prop_assert!(rc.value.dist(&expect) <= 2.0 * eps * scale, "{} vs {}", rc.value.dist(&expect), eps);
    }

    #[test]
    fn b1_success_carries_to_subsets(index in 0usize..200, mask in any::<u8>()) {
        let c = grid_case(62, index);
        let eps = c.eps.max(1e-4);
        let opts = EngineOptions::default();
        let f = VectorFunction::Terms(c.coords.clone());
        prop_assume!(b1_integrate(&f, &c.mu, &c.space.whole(), eps, &opts).is_ok());
        let subset = AtomSet::new((0..c.space.len()).filter(|i| mask >> (i % 8) & 1 == 1));
        prop_assert!(b1_integrate(&f, &c.mu, &subset, eps, &opts).is_ok());
    }

    #[test]
    fn b2_is_linear_on_finite_spaces(seed in any::<u64>(), alpha in -2.0f64..2.0, beta in -2.0f64..2.0) {
        let c = finite_case(seed, 0);
        let opts = EngineOptions::default().with_norm(c.norm);
        let n = c.space.len();
        let g = ScalarTable((0..n).map(|i| (i as f64).sin()).collect());
        let combo = ScalarTable((0..n).map(|i| alpha * c.f.0[i] + beta * g.0[i]).collect());
        let whole = c.space.whole();
        let rf = b2_integrate(&c.f, &c.m, &whole, 1e-6, &opts).unwrap();
        let rg = b2_integrate(&g, &c.m, &whole, 1e-6, &opts).unwrap();
        let rc = b2_integrate(&combo, &c.m, &whole, 1e-6, &opts).unwrap();
        let expect = &rf.value.scale(alpha) + &rg.value.scale(beta);
        prop_assert!(rc.value.dist(&expect) <= 2e-6);
    }

    #[test]
    fn layered_partition_meets_its_certificate(index in 0usize..200) {
        let c = grid_case(63, index);
        let eps = c.eps.max(1e-4);
        let f = bmg::func::ScalarFunction::Terms(c.f.clone());
        let big_f = VectorFunction::Terms(c.coords.clone());
        if let Ok(lp) = layered_partition(&f, &big_f, &c.mu, eps, &EngineOptions::default()) {
            prop_assert!(lp.certified_double_sum <= 2.0 * eps);
            prop_assert_eq!(lp.bands.len(), lp.partition.len());
        }
    }
}

// ---------- conditional expectation ----------

fn block_values_at(z: &bmg::conditional::ConditionalExpectation, n: usize) -> Vec<Vec<f64>> {
    (0..n).map(|a| z.at_atom(a).coords().to_vec()).collect()
}

proptest! {
    #![proptest_config(config(64))]

    #[test]
    fn conditional_laws(seed in any::<u64>(), index in 0usize..1000) {
        let c = nested_case(seed, index);
        let opts = EngineOptions::default().with_norm(c.norm);
        let n = c.space.len();
        let coarse = SubSigmaAlgebra::from_partition(c.coarse.clone());
        let fine = SubSigmaAlgebra::from_partition(c.fine.clone());
        let ze = |f: &dyn bmg::func::VectorFn, sub: &SubSigmaAlgebra| {
            conditional_expectation(f, &c.mu, sub, 1e-12, &opts).unwrap()
        };
        let live = |a: usize| c.mu.of_set(&c.coarse.blocks()[c.coarse.block_of(a)]) > 0.0;

        // linearity
        let combo = VectorTable::new(
            (0..n)
                .map(|a| c.big_f.rows()[a].iter().zip(&c.big_g.rows()[a]).map(|(x, y)| c.alpha * x + c.beta * y).collect())
                .collect(),
        )
        .unwrap();
        let zf = block_values_at(&ze(&c.big_f, &coarse), n);
        let zg = block_values_at(&ze(&c.big_g, &coarse), n);
        let zc = block_values_at(&ze(&combo, &coarse), n);
        for a in (0..n).filter(|&a| live(a)) {
            let want: Vec<f64> = zf[a].iter().zip(&zg[a]).map(|(x, y)| c.alpha * x + c.beta * y).collect();
            prop_assert!(close(&zc[a], &want, 1e-10));
        }

        // tower
        let inner = ze(&c.big_f, &fine);
        let inner_table = VectorTable::new(block_values_at(&inner, n)).unwrap();
        let tower = block_values_at(&ze(&inner_table, &coarse), n);
        for a in (0..n).filter(|&a| live(a)) {
            prop_assert!(close(&tower[a], &zf[a], 1e-10));
        }

        // pull-out with h constant on coarse blocks
        let hf = Product { scalar: &c.h, vector: &c.big_f };
        let pulled = block_values_at(&ze(&hf, &coarse), n);
        for a in (0..n).filter(|&a| live(a)) {
            let want: Vec<f64> = zf[a].iter().map(|x| c.h.0[a] * x).collect();
            prop_assert!(close(&pulled[a], &want, 1e-10));
        }
    }

    #[test]
    fn expectation_given_f_factors_through_f(seed in any::<u64>()) {
        let c = finite_case(seed, 1);
        let opts = EngineOptions::default().with_norm(c.norm);
        let sub = sigma_of(&c.space, &c.f).unwrap();
        let z = conditional_expectation(&c.big_f, &c.mu, &sub, 1e-12, &opts).unwrap();
        for a in 0..c.space.len() {
            let h = z.factor_at(c.f.0[a]).expect("every level of f has a factor value");
            prop_assert_eq!(h.coords(), z.at_atom(a).coords());
        }
    }
}

// ---------- change of measure ----------

/// Every path of a walk with increment law `probs` on `{-h..h}`, under `M = P·weight`.
fn walk_paths(probs: &[f64], steps: usize, weight: &[f64], q: f64) -> ProcessModel {
    let h = (probs.len() / 2) as i64;
    let width = probs.len();
    let count = width.pow(steps as u32);
    let space = SpaceModel::finite_n(count).unwrap();
    let mut values = vec![vec![0.0; count]; steps + 1];
    let mut masses = vec![1.0; count];
    for a in 0..count {
        let (mut code, mut pos) = (a, 0i64);
        for row in values.iter_mut().skip(1) {
            let j = code % width;
            code /= width;
            masses[a] *= probs[j];
            pos += j as i64 - h;
            row[a] = pos as f64;
        }
    }
    let p = ScalarMeasure::new(space, masses).unwrap();
    let m = VectorMeasure::diagonal(&p, &VectorValue::new(weight.to_vec(), Norm::L2));
    let times = (0..=steps).map(|k| k as f64).collect();
    ProcessModel::paths(m, times, values, q, 1.0).unwrap()
}

/// A symmetric increment law on `{-h..h}` from raw positive weights.
fn symmetric(raw: &[f64]) -> Vec<f64> {
    let mut probs: Vec<f64> = raw.iter().rev().chain(&raw[1..]).copied().collect();
    let z: f64 = probs.iter().sum();
    probs.iter_mut().for_each(|p| *p /= z);
    probs
}

fn law() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.05f64..1.0, 1..=3).prop_map(|raw| symmetric(&raw))
}

proptest! {
    #![proptest_config(config(32))]

    #[test]
    fn zero_drift_gives_back_m(probs in law(), steps in 1usize..=3, w in prop::collection::vec(0.1f64..3.0, 1..=3)) {
        let p = walk_paths(&probs, steps, &w, 0.0);
        let (bundle, q) = run_girsanov(&p, 1e-12).unwrap();
        prop_assume!(bundle.assumptions.a1a.pass);
        let ProcessMeasure::Atoms(qm) = q else { panic!("path process") };
        prop_assert_eq!(qm.values(), p.measure().unwrap().values());
        prop_assert_eq!(bundle.theorem6.max_gap, 0.0);
        prop_assert_eq!(bundle.theorem6.mass_gap, 0.0);
        prop_assert!(bundle.pass());
    }

    #[test]
    fn filtration_is_increasing(probs in law(), steps in 1usize..=3) {
        let p = walk_paths(&probs, steps, &[1.0], 0.0);
        let f = build_filtration(&p).unwrap();
        for k in 0..f.len() {
            for j in 0..=k {
                for block in f.at(k).blocks() {
                    let owners = f.at(j).blocks().iter().filter(|b| block.is_subset(b)).count();
                    prop_assert_eq!(owners, 1);
                }
            }
        }
    }

    #[test]
    fn vector_reports_lift_the_scalar_ones(
        probs in law(),
        steps in 1usize..=3,
        w in prop::collection::vec(0.1f64..3.0, 1..=3),
        drift in 0usize..2,
    ) {
        let q = drift as f64;
        // every nonzero mass here is far above tol, so both runs take the same branch
        let scalar = run_girsanov(&walk_paths(&probs, steps, &[1.0], q), 1e-9);
        let vector = run_girsanov(&walk_paths(&probs, steps, &w, q), 1e-9);
        let ((s, _), (v, _)) = match (scalar, vector) {
            (Ok(s), Ok(v)) => (s, v),
            (s, v) => {
                prop_assert_eq!(s.is_err(), v.is_err());
                return Ok(());
            }
        };
        let lift = |x: &[f64]| -> Vec<f64> { w.iter().map(|c| c * x[0]).collect() };
        prop_assert!(close(&v.m_total.0, &lift(&s.m_total.0), 1e-12));
        prop_assert!(close(&v.q_total.0, &lift(&s.q_total.0), 1e-12));
        prop_assert_eq!(v.theorem6.rows.len(), s.theorem6.rows.len());
        for (rv, rs) in v.theorem6.rows.iter().zip(&s.theorem6.rows) {
            prop_assert_eq!(rv.point, rs.point);
            prop_assert!(close(&rv.m.0, &lift(&rs.m.0), 1e-12));
            prop_assert!(close(&rv.q.0, &lift(&rs.q.0), 1e-12));
        }
    }
}

proptest! {
    #![proptest_config(config(8))]

    #[test]
    fn whole_lattice_identity_conserves_mass(seed in any::<u64>()) {
        let fixture = fixture_exact_synthetic(seed).unwrap();
        let tol = 1e-10;
        let (bundle, _) = run_girsanov(&fixture.process, tol).unwrap();
        let last = bundle.assumptions.a1b.eq5.last().unwrap();
        prop_assume!(last.whole.gap <= tol);
        prop_assert!(bundle.theorem6.mass_gap <= tol);
        // and the chain identities whenever the final martingale check holds
        if bundle.theorem7.martingale.pass {
            prop_assert!(bundle.theorem7.chain_i.max_gap <= tol);
            prop_assert!(bundle.theorem7.chain_ii.max_gap <= tol);
            prop_assert!(bundle.theorem7.chain_iii.max_gap <= tol);
        }
    }
}

