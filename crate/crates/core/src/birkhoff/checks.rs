//! Checkers for integration by substitution and the pushforward change of variable.

use crate::error::Result;
use crate::func::{Product, ScalarFn, VectorFn};
use crate::measure::{pushforward, ScalarMeasure, VectorMeasure};
use crate::space::Point;
use crate::vector::VectorValue;

use super::{b1_integrate, b2_integrate, indefinite, EngineOptions};

/// Two routes to the same vector and the distance between them.
#[derive(Debug, Clone)]
pub struct IdentityCheck {
    pub lhs: VectorValue,
    pub rhs: VectorValue,
    pub gap: f64,
    pub lhs_bound: f64,
    pub rhs_bound: f64,
    /// Largest gap the two certified bounds allow.
    pub contract: f64,
}

impl IdentityCheck {
    pub fn holds(&self) -> bool {
        self.gap <= self.contract
    }
}

/// `∫_T f·F dμ` (B₁) against `∫_T f dM` (B₂) with `M = ∫ F dμ`.
///
/// The contract is `4·eps`: one `eps` for the left side, one for building `M`, one for the
/// right side and one spare for the cell-level spreading of `M` on grids.
pub fn check_substitution<S, F>(
    f: &S,
    big_f: &F,
    mu: &ScalarMeasure,
    eps: f64,
    opts: &EngineOptions,
) -> Result<IdentityCheck>
where
    S: ScalarFn + ?Sized,
    F: VectorFn + ?Sized,
{
    let whole = mu.space().whole();
    let product = Product { scalar: f, vector: big_f };
    let lhs = b1_integrate(&product, mu, &whole, eps, opts).map_err(|e| e.on_side("lhs"))?;
    let m = indefinite(big_f, mu, eps, opts).map_err(|e| e.on_side("rhs"))?;
    let rhs = b2_integrate(f, &m, &whole, eps, opts).map_err(|e| e.on_side("rhs"))?;
    let rhs_value = rhs.value.with_norm(opts.norm);
    Ok(IdentityCheck {
        gap: lhs.value.dist(&rhs_value),
        lhs: lhs.value,
        rhs: rhs_value,
        lhs_bound: lhs.certified_bound,
        rhs_bound: rhs.certified_bound,
        contract: 4.0 * eps,
    })
}

/// `∫_T g(f) dm` against `Σ_c g(c)·m_f({c})`.
pub fn check_change_of_variable<G, S>(
    g: &G,
    f: &S,
    m: &VectorMeasure,
    eps: f64,
    opts: &EngineOptions,
) -> Result<IdentityCheck>
where
    G: Fn(f64) -> f64 + Sync + ?Sized,
    S: ScalarFn + ?Sized,
{
    let whole = m.space().whole();
    let composed = |t: Point| g(f.eval(t));
    let lhs = b2_integrate(&composed, m, &whole, eps, opts).map_err(|e| e.on_side("lhs"))?;
    let dist = pushforward(m, f).map_err(|e| e.on_side("rhs"))?;
    let mut rhs = m.zero_value();
    for (c, mass) in dist.iter() {
        rhs.add_scaled(g(c), mass);
    }
    Ok(IdentityCheck {
        gap: lhs.value.dist(&rhs),
        lhs: lhs.value,
        rhs,
        lhs_bound: lhs.certified_bound,
        rhs_bound: 0.0,
        contract: 2.0 * eps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::func::{ScalarTable, VectorTable};
    use crate::space::SpaceModel;
    use crate::vector::Norm;

    fn setup() -> (ScalarMeasure, VectorTable) {
        let s = SpaceModel::finite_n(3).unwrap();
        let mu = ScalarMeasure::new(s, vec![0.5, 0.25, 0.25]).unwrap();
        let f = VectorTable::new(vec![vec![1.0, 2.0], vec![-1.0, 0.0], vec![4.0, 1.0]]).unwrap();
        (mu, f)
    }

    #[test]
    fn substitution_with_unit_and_zero_multiplier() {
        let (mu, f) = setup();
        let opts = EngineOptions::default();
        let one = check_substitution(&|_: Point| 1.0, &f, &mu, 1e-6, &opts).unwrap();
        let direct = b1_integrate(&f, &mu, &mu.space().whole(), 1e-6, &opts).unwrap().value;
        assert_eq!(one.lhs, direct);
        assert_eq!(one.gap, 0.0);
        let zero = check_substitution(&|_: Point| 0.0, &f, &mu, 1e-6, &opts).unwrap();
        assert!(zero.lhs.is_zero() && zero.rhs.is_zero());
    }

    #[test]
    fn change_of_variable_constant_f_and_unit_g() {
        let s = SpaceModel::finite_n(3).unwrap();
        let m = VectorMeasure::from_rows(s, vec![vec![1.0, -1.0], vec![0.5, 2.0], vec![3.0, 0.0]], Norm::L1).unwrap();
        let opts = EngineOptions::default();
        let c = check_change_of_variable(&|x: f64| x * x + 1.0, &|_: Point| 2.0, &m, 1e-6, &opts).unwrap();
        assert_eq!(c.rhs, m.total().scale(5.0));
        assert!(c.holds());
        let u = check_change_of_variable(&|_: f64| 1.0, &ScalarTable(vec![1.0, 2.0, 1.0]), &m, 1e-6, &opts).unwrap();
        assert_eq!(u.lhs, m.total());
        assert_eq!(u.rhs, m.total());
    }
}
