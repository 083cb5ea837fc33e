//! The subcopula `H`: the unique function on `Ran F_1 x ... x Ran F_d` with
//! `F(x) = H(F_1(x_1), ..., F_d(x_d))` for every `x` in the extended reals.

use std::fmt;
use std::sync::Arc;

use ndarray::{ArrayD, Dimension, IxDyn};

use crate::error::{Error, Result};
use crate::joint::JointPmf;
use crate::margins::RanSet;
use crate::numerics::{cmp_scalar, ExtReal, Scalar, TolerancePolicy};
use crate::report::{Location, Report, Witness};

type Evaluator<T> = Arc<dyn Fn(&[T]) -> T + Send + Sync>;

#[derive(Clone)]
enum Repr<T> {
    Grid { axes: Vec<Vec<T>>, values: ArrayD<T> },
    Lazy(Evaluator<T>),
}

#[derive(Clone)]
pub struct Subcopula<T> {
    domain: Vec<RanSet<T>>,
    repr: Repr<T>,
}

impl<T: fmt::Debug> fmt::Debug for Subcopula<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut s = f.debug_struct("Subcopula");
        s.field("dims", &self.domain.len());
        match &self.repr {
            Repr::Grid { axes, values } => s.field("axes", axes).field("values", values),
            Repr::Lazy(_) => s.field("domain", &self.domain),
        };
        s.finish()
    }
}

/// Extracts the subcopula of a discrete joint: `H(u) = F(F_1^-(u_1), ..., F_d^-(u_d))`
/// at every point of the range grid.
pub fn extract<T: Scalar>(j: &JointPmf<T>) -> Subcopula<T> {
    let margins = j.marginals();
    let axes: Vec<Vec<T>> = margins.iter().map(|m| m.ran().points().to_vec()).collect();
    let shape: Vec<usize> = axes.iter().map(Vec::len).collect();
    let values = ArrayD::from_shape_fn(IxDyn(&shape), |idx| {
        let x: Vec<ExtReal<T>> = idx
            .slice()
            .iter()
            .zip(&axes)
            .zip(&margins)
            .map(|((&i, axis), m)| m.quantile(&axis[i]).expect("range point lies in [0,1]"))
            .collect();
        j.joint_cdf(&x).expect("dimensions agree")
    });
    let domain = axes.iter().map(|a| RanSet::from_points(a.clone()).expect("in [0,1]")).collect();
    Subcopula { domain, repr: Repr::Grid { axes, values } }
}

impl<T: Scalar> Subcopula<T> {
    /// A tabulated function on a finite grid. Each axis must be strictly
    /// increasing inside `[0, 1]` and contain both endpoints.
    pub fn from_grid(axes: Vec<Vec<T>>, values: ArrayD<T>) -> Result<Self> {
        if axes.len() < 2 {
            return Err(Error::Shape(format!("need at least 2 dimensions, got {}", axes.len())));
        }
        let shape: Vec<usize> = axes.iter().map(Vec::len).collect();
        if values.shape() != shape.as_slice() {
            return Err(Error::Shape(format!("values have shape {:?}, grid implies {:?}", values.shape(), shape)));
        }
        for (k, a) in axes.iter().enumerate() {
            if a.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::Shape(format!("grid axis {k} is not strictly increasing")));
            }
            if a.first().is_none_or(|v| !v.is_zero()) || a.last().is_none_or(|v| !v.is_one()) {
                return Err(Error::Shape(format!("grid axis {k} must start at 0 and end at 1")));
            }
        }
        let domain = axes.iter().map(|a| RanSet::from_points(a.clone())).collect::<Result<_>>()?;
        Ok(Self { domain, repr: Repr::Grid { axes, values } })
    }

    /// A subcopula given by an evaluator on an arbitrary product domain.
    pub fn from_evaluator(domain: Vec<RanSet<T>>, f: impl Fn(&[T]) -> T + Send + Sync + 'static) -> Self {
        Self { domain, repr: Repr::Lazy(Arc::new(f)) }
    }

    pub fn dims(&self) -> usize {
        self.domain.len()
    }

    pub fn domain(&self) -> &[RanSet<T>] {
        &self.domain
    }

    /// Grid axes and values when the subcopula is tabulated.
    pub fn grid(&self) -> Option<(&[Vec<T>], &ArrayD<T>)> {
        match &self.repr {
            Repr::Grid { axes, values } => Some((axes, values)),
            Repr::Lazy(_) => None,
        }
    }

    /// True when every domain factor is all of `[0, 1]`.
    pub fn has_full_domain(&self) -> bool {
        self.domain.iter().all(RanSet::is_full)
    }

    pub fn eval(&self, u: &[T]) -> Result<T> {
        if u.len() != self.dims() {
            return Err(Error::DimensionMismatch { expected: self.dims(), got: u.len() });
        }
        match &self.repr {
            Repr::Grid { axes, values } => {
                let idx = grid_index(axes, u).ok_or_else(|| outside(u))?;
                Ok(values[IxDyn(&idx)].clone())
            }
            Repr::Lazy(f) => {
                if u.iter().zip(&self.domain).all(|(v, r)| r.contains(v)) {
                    Ok(f(u))
                } else {
                    Err(outside(u))
                }
            }
        }
    }

    /// Tabulates the subcopula on a grid inside its domain.
    pub fn materialize(&self, axes: Vec<Vec<T>>) -> Result<Self> {
        if axes.len() != self.dims() {
            return Err(Error::DimensionMismatch { expected: self.dims(), got: axes.len() });
        }
        let shape: Vec<usize> = axes.iter().map(Vec::len).collect();
        let mut values = ArrayD::from_elem(IxDyn(&shape), T::zero());
        for idx in ndarray::indices(IxDyn(&shape)) {
            let u: Vec<T> = idx.slice().iter().zip(&axes).map(|(&i, a)| a[i].clone()).collect();
            values[idx.clone()] = self.eval(&u)?;
        }
        Self::from_grid(axes, values)
    }

    /// Copy with one grid value moved by `delta`.
    pub fn perturbed(&self, index: &[usize], delta: T) -> Result<Self> {
        match &self.repr {
            Repr::Grid { axes, values } => {
                let mut values = values.clone();
                let cell = values
                    .get_mut(IxDyn(index))
                    .ok_or_else(|| Error::Shape(format!("grid index {index:?} out of range")))?;
                *cell = cell.clone() + delta;
                Ok(Self { domain: self.domain.clone(), repr: Repr::Grid { axes: axes.clone(), values } })
            }
            Repr::Lazy(_) => Err(Error::Unsupported("perturbing a lazily evaluated subcopula".into())),
        }
    }
}

fn outside<T: Scalar>(u: &[T]) -> Error {
    Error::OutsideDomain { point: format!("({})", u.iter().map(Scalar::to_repr).collect::<Vec<_>>().join(", ")) }
}

fn grid_index<T: Scalar>(axes: &[Vec<T>], u: &[T]) -> Option<Vec<usize>> {
    u.iter()
        .zip(axes)
        .map(|(v, a)| a.binary_search_by(|p| cmp_scalar(p, v)).ok())
        .collect()
}

/// Probe coordinates for one axis: `-inf`, every atom, every midpoint between
/// consecutive atoms, and `+inf`.
pub(crate) fn axis_probes<T: Scalar>(atoms: &[T]) -> Vec<ExtReal<T>> {
    let two = T::one() + T::one();
    let mut out = vec![ExtReal::NegInf];
    for (i, a) in atoms.iter().enumerate() {
        out.push(ExtReal::Finite(a.clone()));
        if let Some(b) = atoms.get(i + 1) {
            out.push(ExtReal::Finite((a.clone() + b.clone()) / two.clone()));
        }
    }
    out.push(ExtReal::PosInf);
    out
}

/// Checks `F(x) = H(F_1(x_1), ..., F_d(x_d))` on the probe grid built from
/// the atoms of `j`.
pub fn verify_representation<T: Scalar>(j: &JointPmf<T>, h: &Subcopula<T>) -> Result<Report<T>> {
    verify_representation_with(j, h, &TolerancePolicy::default())
}

pub fn verify_representation_with<T: Scalar>(
    j: &JointPmf<T>,
    h: &Subcopula<T>,
    policy: &TolerancePolicy,
) -> Result<Report<T>> {
    if h.dims() != j.dims() {
        return Err(Error::DimensionMismatch { expected: j.dims(), got: h.dims() });
    }
    let margins = j.marginals();
    let probes: Vec<Vec<ExtReal<T>>> = j.axes().iter().map(|a| axis_probes(a)).collect();
    let levels: Vec<Vec<T>> = probes
        .iter()
        .zip(&margins)
        .map(|(p, m)| p.iter().map(|x| m.cdf(x)).collect())
        .collect();
    let shape: Vec<usize> = probes.iter().map(Vec::len).collect();
    let mut report = Report::new("representation");
    for idx in ndarray::indices(IxDyn(&shape)) {
        let idx = idx.slice();
        let x: Vec<ExtReal<T>> = idx.iter().zip(&probes).map(|(&i, p)| p[i].clone()).collect();
        let u: Vec<T> = idx.iter().zip(&levels).map(|(&i, l)| l[i].clone()).collect();
        let lhs = j.joint_cdf(&x)?;
        match h.eval(&u) {
            Ok(rhs) => {
                let diff = (lhs.clone() - rhs.clone()).abs();
                let ok = diff.negligible(policy);
                report.record(ok, diff, || Witness {
                    location: Location::Extended(x.clone()),
                    expected: lhs.clone(),
                    actual: rhs,
                    note: "joint CDF differs from H at the margin values".into(),
                });
            }
            Err(_) => report.record(false, T::zero(), || Witness {
                location: Location::Extended(x.clone()),
                expected: lhs.clone(),
                actual: T::zero(),
                note: "margin values fall outside the subcopula domain".into(),
            }),
        }
    }
    Ok(report)
}

/// Grid analogue of the copula axioms: groundedness, `H(1,..,a,..,1) = a`
/// for every grid value `a`, and nonnegative volume for every grid cell.
///
/// Subcopulas whose domain is the whole cube are checked as copulas.
pub fn verify_subcopula_axioms<T: Scalar>(h: &Subcopula<T>) -> Result<Report<T>> {
    verify_subcopula_axioms_with(h, &TolerancePolicy::default())
}

pub fn verify_subcopula_axioms_with<T: Scalar>(h: &Subcopula<T>, policy: &TolerancePolicy) -> Result<Report<T>> {
    let (axes, values) = match &h.repr {
        Repr::Grid { axes, values } => (axes, values),
        Repr::Lazy(_) if h.has_full_domain() => {
            let c = crate::extension::FnCopula::new(h.dims(), {
                let h = h.clone();
                move |u: &[T]| h.eval(u).expect("full domain")
            });
            return Ok(crate::extension::verify_copula_axioms_with(&c, 1000, 0, policy));
        }
        Repr::Lazy(_) => {
            return Err(Error::Unsupported("axiom check needs a finite grid; materialize first".into()))
        }
    };
    let d = axes.len();
    let shape: Vec<usize> = axes.iter().map(Vec::len).collect();
    let point = |idx: &[usize]| -> Vec<T> { idx.iter().zip(axes).map(|(&i, a)| a[i].clone()).collect() };
    let mut report = Report::new("subcopula_axioms");

    for idx in ndarray::indices(IxDyn(&shape)) {
        let idx = idx.slice();
        if idx.contains(&0) {
            let v = values[IxDyn(idx)].clone();
            report.record(v.negligible(policy), v.abs(), || Witness {
                location: Location::Unit(point(idx)),
                expected: T::zero(),
                actual: v.clone(),
                note: "groundedness: H must vanish when a coordinate is 0".into(),
            });
        }
    }

    for k in 0..d {
        let mut idx: Vec<usize> = shape.iter().map(|n| n - 1).collect();
        for (i, alpha) in axes[k].iter().enumerate() {
            idx[k] = i;
            let v = values[IxDyn(&idx)].clone();
            let diff = (v.clone() - alpha.clone()).abs();
            report.record(diff.negligible(policy), diff, || Witness {
                location: Location::Unit(point(&idx)),
                expected: alpha.clone(),
                actual: v.clone(),
                note: format!("margin condition on axis {} at alpha {}", k + 1, alpha.to_repr()),
            });
        }
    }

    let cells: Vec<usize> = shape.iter().map(|n| n - 1).collect();
    let mut corner = vec![0usize; d];
    for cell in ndarray::indices(IxDyn(&cells)) {
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
            let v = values[IxDyn(&corner)].clone();
            vol = if lows % 2 == 0 { vol + v } else { vol - v };
        }
        let ok = vol.nonnegative(policy);
        let deficit = if vol.is_negative() { -vol.clone() } else { T::zero() };
        report.record(ok, deficit, || {
            let upper: Vec<usize> = cell.iter().map(|i| i + 1).collect();
            Witness {
                location: Location::Box { lower: point(cell), upper: point(&upper) },
                expected: T::zero(),
                actual: vol.clone(),
                note: "negative H-volume".into(),
            }
        });
    }
    Ok(report)
}
