//! Univariate distribution functions on the extended real line.

use crate::error::{Error, Result};
use crate::numerics::{ExtReal, Scalar, TolerancePolicy};

#[derive(Clone, Debug, PartialEq)]
enum Kind<T> {
    Discrete { atoms: Vec<T>, masses: Vec<T>, cumulative: Vec<T> },
    PiecewiseLinear { xs: Vec<T>, fs: Vec<T> },
}

/// A univariate CDF: either finitely many atoms, or a continuous
/// piecewise-linear function through a list of breakpoints.
#[derive(Clone, Debug, PartialEq)]
pub struct Margin<T> {
    kind: Kind<T>,
}

impl<T: Scalar> Margin<T> {
    /// Step CDF with the given atoms and masses.
    ///
    /// Atoms must be strictly increasing and masses nonnegative with total one
    /// (exactly on the rational track, within the default `abs_tol` otherwise).
    /// Zero masses are accepted; they leave `Ran F` unchanged.
    pub fn discrete(atoms: Vec<T>, masses: Vec<T>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::InvalidMargin("no atoms".into()));
        }
        if atoms.len() != masses.len() {
            return Err(Error::InvalidMargin(format!(
                "{} atoms but {} masses",
                atoms.len(),
                masses.len()
            )));
        }
        if atoms.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidMargin("atoms must be strictly increasing".into()));
        }
        if let Some(m) = masses.iter().find(|m| m.is_negative()) {
            return Err(Error::InvalidMargin(format!("negative mass {}", m.to_repr())));
        }
        let mut cumulative = Vec::with_capacity(masses.len());
        let mut acc = T::zero();
        for m in &masses {
            acc = acc + m.clone();
            cumulative.push(acc.clone());
        }
        if !(acc.clone() - T::one()).negligible(&TolerancePolicy::default()) {
            return Err(Error::Normalization { total: acc.to_repr() });
        }
        *cumulative.last_mut().expect("nonempty") = T::one();
        Ok(Self { kind: Kind::Discrete { atoms, masses, cumulative } })
    }

    /// Continuous CDF interpolating `(x, F(x))` breakpoints linearly; `F = 0`
    /// left of the first breakpoint and `F = 1` right of the last.
    pub fn piecewise_linear(breakpoints: Vec<(T, T)>) -> Result<Self> {
        if breakpoints.len() < 2 {
            return Err(Error::InvalidMargin("need at least two breakpoints".into()));
        }
        let (xs, fs): (Vec<T>, Vec<T>) = breakpoints.into_iter().unzip();
        if xs.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidMargin("breakpoint x must be strictly increasing".into()));
        }
        if fs.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::InvalidMargin("F must be nondecreasing".into()));
        }
        if !fs[0].is_zero() || !fs[fs.len() - 1].is_one() {
            return Err(Error::InvalidMargin("F must start at 0 and end at 1".into()));
        }
        Ok(Self { kind: Kind::PiecewiseLinear { xs, fs } })
    }

    /// Uniform distribution on `[0, 1]`.
    pub fn uniform() -> Self {
        Self::piecewise_linear(vec![(T::zero(), T::zero()), (T::one(), T::one())]).expect("valid")
    }

    pub fn is_discrete(&self) -> bool {
        matches!(self.kind, Kind::Discrete { .. })
    }

    /// True for piecewise-linear CDFs without flat pieces.
    pub fn is_strictly_increasing(&self) -> bool {
        match &self.kind {
            Kind::Discrete { .. } => false,
            Kind::PiecewiseLinear { fs, .. } => fs.windows(2).all(|w| w[0] < w[1]),
        }
    }

    /// Atoms and masses of a discrete margin.
    pub fn atoms(&self) -> Option<(&[T], &[T])> {
        match &self.kind {
            Kind::Discrete { atoms, masses, .. } => Some((atoms, masses)),
            Kind::PiecewiseLinear { .. } => None,
        }
    }

    /// Breakpoints of a piecewise-linear margin.
    pub fn breakpoints(&self) -> Option<Vec<(T, T)>> {
        match &self.kind {
            Kind::PiecewiseLinear { xs, fs } => {
                Some(xs.iter().cloned().zip(fs.iter().cloned()).collect())
            }
            Kind::Discrete { .. } => None,
        }
    }

    /// `F(x)`; right-continuous, `F(-inf) = 0`, `F(+inf) = 1`.
    pub fn cdf(&self, x: &ExtReal<T>) -> T {
        match x {
            ExtReal::NegInf => T::zero(),
            ExtReal::PosInf => T::one(),
            ExtReal::Finite(x) => self.cdf_finite(x),
        }
    }

    pub fn cdf_finite(&self, x: &T) -> T {
        match &self.kind {
            Kind::Discrete { atoms, cumulative, .. } => {
                let k = atoms.partition_point(|a| a <= x);
                if k == 0 {
                    T::zero()
                } else {
                    cumulative[k - 1].clone()
                }
            }
            Kind::PiecewiseLinear { xs, fs } => {
                let k = xs.partition_point(|a| a <= x);
                if k == 0 {
                    T::zero()
                } else if k == xs.len() {
                    T::one()
                } else {
                    let (x0, x1) = (&xs[k - 1], &xs[k]);
                    let (f0, f1) = (&fs[k - 1], &fs[k]);
                    f0.clone() + (f1.clone() - f0.clone()) * (x.clone() - x0.clone()) / (x1.clone() - x0.clone())
                }
            }
        }
    }

    /// Generalized inverse `inf { x : F(x) >= u }`, with `quantile(0) = -inf`.
    pub fn quantile(&self, u: &T) -> Result<ExtReal<T>> {
        if u.is_negative() || *u > T::one() {
            return Err(Error::Domain { value: u.to_repr() });
        }
        if u.is_zero() {
            return Ok(ExtReal::NegInf);
        }
        match &self.kind {
            Kind::Discrete { atoms, cumulative, .. } => {
                let k = cumulative.partition_point(|c| c < u).min(atoms.len() - 1);
                Ok(ExtReal::Finite(atoms[k].clone()))
            }
            Kind::PiecewiseLinear { xs, fs } => {
                // fs[0] = 0 < u, so k >= 1
                let k = fs.partition_point(|f| f < u).min(fs.len() - 1);
                let (x0, x1) = (&xs[k - 1], &xs[k]);
                let (f0, f1) = (&fs[k - 1], &fs[k]);
                let x = x0.clone() + (u.clone() - f0.clone()) * (x1.clone() - x0.clone()) / (f1.clone() - f0.clone());
                Ok(ExtReal::Finite(x))
            }
        }
    }

    /// The set of values taken by `F` over the extended reals.
    pub fn ran(&self) -> RanSet<T> {
        match &self.kind {
            Kind::Discrete { cumulative, .. } => {
                let mut points = vec![T::zero()];
                for c in cumulative {
                    if points.last() != Some(c) {
                        points.push(c.clone());
                    }
                }
                RanSet { points, intervals: Vec::new() }
            }
            // continuous from 0 to 1: every intermediate value is attained
            Kind::PiecewiseLinear { .. } => RanSet::full(),
        }
    }

    /// Distribution of `F(X)` for `X ~ self`.
    pub fn pit_distribution(&self) -> Margin<T> {
        match &self.kind {
            Kind::Discrete { masses, cumulative, .. } => {
                let (atoms, masses): (Vec<T>, Vec<T>) = cumulative
                    .iter()
                    .zip(masses)
                    .filter(|(_, m)| !m.is_zero())
                    .map(|(c, m)| (c.clone(), m.clone()))
                    .unzip();
                Margin::discrete(atoms, masses).expect("pushforward of a valid margin")
            }
            Kind::PiecewiseLinear { fs, .. } => {
                // P(F(X) <= u) = F(F^-(u)); it is piecewise linear between the values F takes at breakpoints
                let mut levels: Vec<T> = fs.clone();
                levels.dedup();
                let points = levels
                    .into_iter()
                    .map(|u| {
                        let g = match self.quantile(&u).expect("u in [0,1]") {
                            ExtReal::NegInf => T::zero(),
                            x => self.cdf(&x),
                        };
                        (u, g)
                    })
                    .collect();
                Margin::piecewise_linear(merge_collinear(points)).expect("pushforward of a valid margin")
            }
        }
    }
}

fn merge_collinear<T: Scalar>(points: Vec<(T, T)>) -> Vec<(T, T)> {
    let mut out: Vec<(T, T)> = Vec::with_capacity(points.len());
    for p in points {
        if out.len() >= 2 {
            let (a, b) = (&out[out.len() - 2], &out[out.len() - 1]);
            let lhs = (b.1.clone() - a.1.clone()) * (p.0.clone() - b.0.clone());
            let rhs = (p.1.clone() - b.1.clone()) * (b.0.clone() - a.0.clone());
            if lhs == rhs {
                out.pop();
            }
        }
        out.push(p);
    }
    out
}

/// `Ran F` as a finite point set plus disjoint closed intervals in `[0, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct RanSet<T> {
    points: Vec<T>,
    intervals: Vec<(T, T)>,
}

impl<T: Scalar> RanSet<T> {
    pub fn full() -> Self {
        Self { points: Vec::new(), intervals: vec![(T::zero(), T::one())] }
    }

    /// Builds a finite range set; 0 and 1 are added when missing.
    pub fn from_points(mut points: Vec<T>) -> Result<Self> {
        if points.iter().any(|p| p.is_negative() || *p > T::one()) {
            return Err(Error::Domain { value: "range point".into() });
        }
        points.push(T::zero());
        points.push(T::one());
        points.sort_by(crate::numerics::cmp_scalar);
        points.dedup();
        Ok(Self { points, intervals: Vec::new() })
    }

    pub fn points(&self) -> &[T] {
        &self.points
    }

    pub fn intervals(&self) -> &[(T, T)] {
        &self.intervals
    }

    pub fn is_finite(&self) -> bool {
        self.intervals.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.intervals.iter().any(|(a, b)| a.is_zero() && b.is_one())
    }

    pub fn contains(&self, t: &T) -> bool {
        self.points.binary_search_by(|p| crate::numerics::cmp_scalar(p, t)).is_ok()
            || self.intervals.iter().any(|(a, b)| a <= t && t <= b)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{rational, Rational};
    use proptest::prelude::*;

    fn q(n: i64, d: i64) -> Rational {
        rational(n, d).unwrap()
    }

    fn coin() -> Margin<Rational> {
        Margin::discrete(vec![q(0, 1), q(1, 1)], vec![q(1, 2), q(1, 2)]).unwrap()
    }

    #[test]
    fn discrete_cdf_examples() {
        let m = coin();
        assert_eq!(m.cdf(&ExtReal::Finite(q(0, 1))), q(1, 2));
        assert_eq!(m.cdf(&ExtReal::NegInf), q(0, 1));
        assert_eq!(m.cdf(&ExtReal::PosInf), q(1, 1));
        assert_eq!(m.cdf(&ExtReal::Finite(q(-1, 2))), q(0, 1));
        assert_eq!(m.cdf(&ExtReal::Finite(q(1, 2))), q(1, 2));
    }

    #[test]
    fn uniform_cdf() {
        let m = Margin::<Rational>::uniform();
        assert_eq!(m.cdf(&ExtReal::Finite(q(3, 10))), q(3, 10));
        let f = Margin::<f64>::uniform();
        assert_eq!(f.cdf(&ExtReal::Finite(0.3)), 0.3);
    }

    #[test]
    fn quantile_examples() {
        let m = coin();
        assert_eq!(m.quantile(&q(1, 2)).unwrap(), ExtReal::Finite(q(0, 1)));
        assert_eq!(m.quantile(&q(3, 4)).unwrap(), ExtReal::Finite(q(1, 1)));
        assert_eq!(m.quantile(&q(0, 1)).unwrap(), ExtReal::NegInf);
        assert!(matches!(m.quantile(&q(5, 4)), Err(Error::Domain { .. })));
        assert!(matches!(m.quantile(&q(-1, 4)), Err(Error::Domain { .. })));
    }

    #[test]
    fn piecewise_quantile_takes_infimum_over_flat_pieces() {
        let m = Margin::piecewise_linear(vec![
            (q(0, 1), q(0, 1)),
            (q(1, 1), q(1, 2)),
            (q(2, 1), q(1, 2)),
            (q(3, 1), q(1, 1)),
        ])
        .unwrap();
        assert_eq!(m.quantile(&q(1, 2)).unwrap(), ExtReal::Finite(q(1, 1)));
        assert_eq!(m.quantile(&q(3, 4)).unwrap(), ExtReal::Finite(q(5, 2)));
        assert_eq!(m.quantile(&q(1, 4)).unwrap(), ExtReal::Finite(q(1, 2)));
        assert!(!m.is_strictly_increasing());
        assert!(m.ran().is_full());
    }

    #[test]
    fn ran_examples() {
        assert_eq!(coin().ran().points(), &[q(0, 1), q(1, 2), q(1, 1)]);
        let m = Margin::discrete(vec![q(1, 1), q(2, 1), q(3, 1)], vec![q(2, 5), q(1, 10), q(1, 2)]).unwrap();
        assert_eq!(m.ran().points(), &[q(0, 1), q(2, 5), q(1, 2), q(1, 1)]);
        let u = Margin::<Rational>::uniform().ran();
        assert!(u.is_full() && !u.is_finite());
        assert!(u.contains(&q(1, 3)));
    }

    #[test]
    fn zero_mass_atoms_do_not_duplicate_range_points() {
        let m = Margin::discrete(vec![q(0, 1), q(1, 1), q(2, 1)], vec![q(1, 2), q(0, 1), q(1, 2)]).unwrap();
        assert_eq!(m.ran().points(), &[q(0, 1), q(1, 2), q(1, 1)]);
        assert_eq!(m.quantile(&q(1, 2)).unwrap(), ExtReal::Finite(q(0, 1)));
    }

    #[test]
    fn rejects_invalid_margins() {
        assert!(Margin::discrete(vec![q(1, 1), q(0, 1)], vec![q(1, 2), q(1, 2)]).is_err());
        assert!(Margin::discrete(vec![q(0, 1), q(1, 1)], vec![q(1, 2), q(1, 3)]).is_err());
        assert!(Margin::discrete(vec![q(0, 1), q(1, 1)], vec![q(3, 2), q(-1, 2)]).is_err());
        assert!(Margin::<Rational>::discrete(vec![], vec![]).is_err());
        assert!(Margin::piecewise_linear(vec![(q(0, 1), q(0, 1))]).is_err());
        assert!(Margin::piecewise_linear(vec![(q(0, 1), q(1, 10)), (q(1, 1), q(1, 1))]).is_err());
        assert!(Margin::piecewise_linear(vec![(q(0, 1), q(0, 1)), (q(1, 1), q(1, 2)), (q(2, 1), q(1, 3)), (q(3, 1), q(1, 1))]).is_err());
    }

    #[test]
    fn pit_examples() {
        assert_eq!(Margin::<Rational>::uniform().pit_distribution(), Margin::uniform());
        let m = Margin::piecewise_linear(vec![(q(0, 1), q(0, 1)), (q(2, 1), q(1, 1))]).unwrap();
        assert_eq!(m.pit_distribution(), Margin::uniform());
        let pit = coin().pit_distribution();
        assert_eq!(pit.atoms().unwrap(), (&[q(1, 2), q(1, 1)][..], &[q(1, 2), q(1, 2)][..]));
    }

    #[test]
    fn pit_of_flat_piecewise_margin_is_still_uniform() {
        let m = Margin::piecewise_linear(vec![
            (q(-1, 1), q(0, 1)),
            (q(0, 1), q(1, 3)),
            (q(4, 1), q(1, 3)),
            (q(5, 1), q(1, 1)),
        ])
        .unwrap();
        assert_eq!(m.pit_distribution(), Margin::uniform());
    }

    fn random_discrete() -> impl Strategy<Value = Margin<Rational>> {
        prop::collection::vec(1i64..10, 1..7).prop_map(|w| {
            let total: i64 = w.iter().sum();
            let atoms = (0..w.len() as i64).map(|i| q(3 * i - 4, 2)).collect();
            let masses = w.iter().map(|&x| q(x, total)).collect();
            Margin::discrete(atoms, masses).unwrap()
        })
    }

    proptest! {
        #[test]
        fn quantile_is_a_right_inverse(m in random_discrete(), k in 0i64..=1000) {
            let u = q(k, 1000);
            let x = m.quantile(&u).unwrap();
            prop_assert!(m.cdf(&x) >= u);
            for r in m.ran().points() {
                prop_assert_eq!(&m.cdf(&m.quantile(r).unwrap()), r);
            }
        }

        #[test]
        fn cdf_is_nondecreasing(m in random_discrete(), mut probes in prop::collection::vec(-20i64..20, 2..30)) {
            probes.sort();
            let vals: Vec<Rational> = probes.iter().map(|&p| m.cdf(&ExtReal::Finite(q(p, 3)))).collect();
            prop_assert!(vals.windows(2).all(|w| w[0] <= w[1]));
        }
    }
}
