//! Building a joint distribution from a copula and arbitrary margins.

use std::fmt;
use std::sync::Arc;

use ndarray::{ArrayD, Dimension, IxDyn};

use crate::error::{Error, Result};
use crate::extension::{extend, CopulaFn, ExtensionKind};
use crate::joint::JointPmf;
use crate::margins::Margin;
use crate::numerics::{ExtReal, Scalar, TolerancePolicy};
use crate::report::{Location, Report, Witness};
use crate::subcopula::{extract, Subcopula};

/// `G(x) = C(F_1(x_1), ..., F_d(x_d))`, with its mass array materialized
/// when every margin is discrete.
#[derive(Clone)]
pub struct ComposedJoint<T> {
    copula: Arc<dyn CopulaFn<T>>,
    margins: Vec<Margin<T>>,
    derived: Option<JointPmf<T>>,
}

impl<T: Scalar> fmt::Debug for ComposedJoint<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ComposedJoint")
            .field("dims", &self.margins.len())
            .field("margins", &self.margins)
            .field("derived", &self.derived)
            .finish()
    }
}

pub fn sklar_compose<T: Scalar>(c: impl CopulaFn<T> + 'static, margins: Vec<Margin<T>>) -> Result<ComposedJoint<T>> {
    sklar_compose_shared(Arc::new(c), margins)
}

pub fn sklar_compose_shared<T: Scalar>(copula: Arc<dyn CopulaFn<T>>, margins: Vec<Margin<T>>) -> Result<ComposedJoint<T>> {
    if copula.dims() != margins.len() {
        return Err(Error::DimensionMismatch { expected: copula.dims(), got: margins.len() });
    }
    let derived = if margins.iter().all(Margin::is_discrete) {
        Some(materialize(copula.as_ref(), &margins)?)
    } else {
        None
    };
    Ok(ComposedJoint { copula, margins, derived })
}

/// Cell masses by inclusion-exclusion of the copula over the images of
/// consecutive atoms under the margin CDFs.
fn materialize<T: Scalar>(c: &dyn CopulaFn<T>, margins: &[Margin<T>]) -> Result<JointPmf<T>> {
    let policy = TolerancePolicy::default();
    let mut axes = Vec::with_capacity(margins.len());
    let mut levels = Vec::with_capacity(margins.len());
    for m in margins {
        let (atoms, _) = m.atoms().expect("discrete margin");
        let mut l = vec![T::zero()];
        l.extend(atoms.iter().map(|a| m.cdf_finite(a)));
        axes.push(atoms.to_vec());
        levels.push(l);
    }
    let level_shape: Vec<usize> = levels.iter().map(Vec::len).collect();
    let image = ArrayD::from_shape_fn(IxDyn(&level_shape), |idx| {
        let u: Vec<T> = idx.slice().iter().zip(&levels).map(|(&i, l)| l[i].clone()).collect();
        c.eval(&u)
    });
    let d = margins.len();
    let shape: Vec<usize> = axes.iter().map(Vec::len).collect();
    let mut corner = vec![0usize; d];
    let mass = ArrayD::from_shape_fn(IxDyn(&shape), |cell| {
        let cell = cell.slice();
        let mut vol = T::zero();
        for mask in 0u32..(1 << d) {
            let mut lows = 0;
            for k in 0..d {
                if mask & (1 << k) != 0 {
                    corner[k] = cell[k];
                    lows += 1;
                } else {
                    corner[k] = cell[k] + 1;
                }
            }
            let v = image[IxDyn(&corner)].clone();
            vol = if lows % 2 == 0 { vol + v } else { vol - v };
        }
        // float rounding may leave a negligible negative
        if vol.is_negative() && !T::EXACT && vol.nonnegative(&policy) {
            T::zero()
        } else {
            vol
        }
    });
    JointPmf::new(axes, mass)
}

impl<T: Scalar> ComposedJoint<T> {
    pub fn dims(&self) -> usize {
        self.margins.len()
    }

    pub fn margins(&self) -> &[Margin<T>] {
        &self.margins
    }

    pub fn copula(&self) -> &Arc<dyn CopulaFn<T>> {
        &self.copula
    }

    /// Mass array when every margin is discrete.
    pub fn derived(&self) -> Option<&JointPmf<T>> {
        self.derived.as_ref()
    }

    pub fn cdf(&self, x: &[ExtReal<T>]) -> Result<T> {
        if x.len() != self.dims() {
            return Err(Error::DimensionMismatch { expected: self.dims(), got: x.len() });
        }
        let u: Vec<T> = x.iter().zip(&self.margins).map(|(xk, m)| m.cdf(xk)).collect();
        Ok(self.copula.eval(&u))
    }

    /// Subcopula of the composed distribution: tabulated for discrete
    /// margins, otherwise `u -> G(F_1^-(u_1), ..., F_d^-(u_d))` on the product
    /// of the margins' range sets.
    pub fn subcopula(&self) -> Subcopula<T> {
        if let Some(j) = &self.derived {
            return extract(j);
        }
        let domain = self.margins.iter().map(Margin::ran).collect();
        let this = self.clone();
        Subcopula::from_evaluator(domain, move |u: &[T]| {
            let x: Vec<ExtReal<T>> = u
                .iter()
                .zip(&this.margins)
                .map(|(v, m)| m.quantile(v).expect("guarded by the domain check"))
                .collect();
            this.cdf(&x).expect("dimensions agree")
        })
    }
}

/// Extract, extend with `kind`, recompose with the joint's own margins and
/// compare with the original cell by cell.
pub fn roundtrip_check<T: Scalar>(j: &JointPmf<T>, kind: ExtensionKind) -> Result<Report<T>> {
    let policy = TolerancePolicy::default();
    let copula = extend(&extract(j), kind)?;
    let composed = sklar_compose(copula, j.marginals())?;
    let rebuilt = composed.derived().expect("discrete margins");
    let mut report = Report::new("roundtrip");
    for ((idx, a), b) in j.mass().indexed_iter().zip(rebuilt.mass().iter()) {
        let diff = (a.clone() - b.clone()).abs();
        report.record(diff.negligible(&policy), diff, || Witness {
            location: Location::Cell(idx.slice().to_vec()),
            expected: a.clone(),
            actual: b.clone(),
            note: format!("cell mass after {kind} roundtrip"),
        });
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::extension::{extend_checkerboard, extend_patchwork, Countermonotone, Fill, Independence};
    use crate::numerics::{rational, Rational};
    use ndarray::arr2;

    fn q(n: i64, d: i64) -> Rational {
        rational(n, d).unwrap()
    }

    fn binary_axes() -> Vec<Vec<Rational>> {
        vec![vec![q(0, 1), q(1, 1)], vec![q(0, 1), q(1, 1)]]
    }

    fn pa() -> JointPmf<Rational> {
        JointPmf::new(binary_axes(), arr2(&[[q(2, 5), q(1, 10)], [q(1, 10), q(2, 5)]]).into_dyn()).unwrap()
    }

    fn coin(p: Rational) -> Margin<Rational> {
        Margin::discrete(vec![q(0, 1), q(1, 1)], vec![p.clone(), q(1, 1) - p]).unwrap()
    }

    #[test]
    fn independence_with_fair_coins() {
        let g = sklar_compose(Independence(2), vec![coin(q(1, 2)), coin(q(1, 2))]).unwrap();
        assert!(g.derived().unwrap().mass().iter().all(|m| *m == q(1, 4)));
    }

    #[test]
    fn checkerboard_roundtrip_reproduces_pa() {
        let c = extend_checkerboard(&extract(&pa())).unwrap();
        let g = sklar_compose(c, pa().marginals()).unwrap();
        assert_eq!(g.derived().unwrap(), &pa());
    }

    #[test]
    fn new_margins_change_cells_but_keep_marginals() {
        let c = extend_checkerboard(&extract(&pa())).unwrap();
        let corner = c.eval(&[q(7, 10), q(7, 10)]);
        // (0.7, 0.7) sits in the top-right cell [1/2, 1]^2 with s = t = 2/5:
        // bilinear from corners 2/5, 1/2, 1/2, 1
        let expected = q(2, 5) * q(3, 5) * q(3, 5) + q(1, 2) * q(2, 5) * q(3, 5) * q(2, 1) + q(1, 1) * q(2, 5) * q(2, 5);
        assert_eq!(corner, expected);
        let g = sklar_compose(c, vec![coin(q(7, 10)), coin(q(7, 10))]).unwrap();
        let j = g.derived().unwrap();
        assert_eq!(j.mass()[[0, 0]], expected);
        for k in 0..2 {
            assert_eq!(j.marginal(k).unwrap(), coin(q(7, 10)));
        }
    }

    #[test]
    fn roundtrip_examples() {
        for kind in [
            ExtensionKind::Checkerboard,
            ExtensionKind::Patchwork(Fill::M),
            ExtensionKind::Patchwork(Fill::W),
        ] {
            let r = roundtrip_check(&pa(), kind).unwrap();
            assert!(r.pass, "{kind}");
            assert_eq!(r.max_discrepancy, q(0, 1));
        }
    }

    #[test]
    fn composed_cdf_is_copula_of_margins() {
        let g = sklar_compose(Countermonotone, vec![coin(q(1, 3)), Margin::uniform()]).unwrap();
        assert!(g.derived().is_none());
        let v = g.cdf(&[ExtReal::Finite(q(0, 1)), ExtReal::Finite(q(1, 2))]).unwrap();
        assert_eq!(v, q(0, 1));
        let v = g.cdf(&[ExtReal::PosInf, ExtReal::Finite(q(1, 2))]).unwrap();
        assert_eq!(v, q(1, 2));
        assert!(g.cdf(&[ExtReal::PosInf]).is_err());
    }

    #[test]
    fn continuous_subcopula_reproduces_the_copula() {
        let base = extend_patchwork(&extract(&pa()), Fill::M).unwrap();
        let m1 = Margin::piecewise_linear(vec![(q(-1, 1), q(0, 1)), (q(0, 1), q(1, 4)), (q(3, 1), q(1, 1))]).unwrap();
        let m2 = Margin::piecewise_linear(vec![(q(0, 1), q(0, 1)), (q(5, 1), q(1, 1))]).unwrap();
        let g = sklar_compose(base.clone(), vec![m1, m2]).unwrap();
        let h = g.subcopula();
        assert!(h.has_full_domain());
        for (a, b) in [(1, 4), (1, 3), (2, 7), (9, 10)] {
            let u = [q(a, b), q(b - a, b + 1)];
            assert_eq!(h.eval(&u).unwrap(), base.eval(&u));
        }
        assert!(crate::subcopula::verify_subcopula_axioms(&h).unwrap().pass);
    }

    #[test]
    fn dimension_mismatch() {
        assert!(matches!(
            sklar_compose(Independence(3), vec![coin(q(1, 2)), coin(q(1, 2))]),
            Err(Error::DimensionMismatch { .. })
        ));
    }
}
