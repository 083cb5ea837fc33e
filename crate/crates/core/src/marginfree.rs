//! Reshaping a discrete joint to uniform margins by iterative proportional
//! fitting. The result keeps every cross-product ratio of the input.

use ndarray::{ArrayD, Axis, Dimension, Ix2};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::joint::JointPmf;
use crate::numerics::Scalar;
use crate::report::{Location, Report, Witness};

pub const DEFAULT_TOL: f64 = 1e-10;
pub const DEFAULT_MAX_ITER: usize = 100_000;

/// Mass array with uniform one-dimensional margins.
#[derive(Clone, Debug, PartialEq)]
pub struct DiscreteCopula {
    mass: ArrayD<f64>,
}

impl DiscreteCopula {
    pub fn dims(&self) -> usize {
        self.mass.ndim()
    }

    pub fn shape(&self) -> &[usize] {
        self.mass.shape()
    }

    pub fn mass(&self) -> &ArrayD<f64> {
        &self.mass
    }

    /// Largest absolute cell difference.
    pub fn sup_distance(&self, other: &DiscreteCopula) -> Result<f64> {
        if self.shape() != other.shape() {
            return Err(Error::Shape(format!("{:?} vs {:?}", self.shape(), other.shape())));
        }
        Ok(self.mass.iter().zip(other.mass.iter()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
    }

    /// The core as a joint on `1..=I_k` labels, for feeding back into IPF or
    /// the dependence measures.
    pub fn to_joint(&self) -> Result<JointPmf<f64>> {
        let axes = self.shape().iter().map(|&n| (1..=n).map(|k| k as f64).collect()).collect();
        JointPmf::from_counts(axes, self.mass.clone())
    }

    pub fn to_json(&self) -> Value {
        json!({
            "dims": self.dims(),
            "shape": self.shape(),
            "mass": nested(&self.mass),
        })
    }
}

fn nested(a: &ArrayD<f64>) -> Value {
    if a.ndim() == 0 {
        return json!(a.iter().next().copied().unwrap_or(0.0));
    }
    Value::Array(a.outer_iter().map(|s| nested(&s.to_owned())).collect())
}

#[derive(Clone, Debug, PartialEq)]
pub struct IpfDiagnostics {
    /// Full sweeps performed (one rescaling per axis each).
    pub iterations: usize,
    /// L1 distance of all one-dimensional margins to uniform.
    pub final_margin_error: f64,
    pub converged: bool,
}

impl IpfDiagnostics {
    pub fn to_json(&self) -> Value {
        json!({
            "iterations": self.iterations,
            "final_margin_error": self.final_margin_error,
            "converged": self.converged,
        })
    }
}

pub fn ipf<T: Scalar>(j: &JointPmf<T>, tol: f64, max_iter: usize) -> Result<(DiscreteCopula, IpfDiagnostics)> {
    if !(tol > 0.0) {
        return Err(Error::InvalidTolerance { name: "tol", value: tol });
    }
    if max_iter == 0 {
        return Err(Error::Unsupported("max_iter must be at least 1".into()));
    }
    let mut mass = j.mass().mapv(|m| m.to_f64_lossy());
    for axis in 0..mass.ndim() {
        if let Some(index) = slice_sums(&mass, axis).iter().position(|&s| s <= 0.0) {
            return Err(Error::Support { axis, index });
        }
    }
    let mut iterations = 0;
    let mut error = margin_error(&mass);
    while iterations < max_iter {
        sweep(&mut mass);
        iterations += 1;
        error = margin_error(&mass);
        if error <= tol {
            break;
        }
    }
    let diagnostics = IpfDiagnostics { iterations, final_margin_error: error, converged: error <= tol };
    Ok((DiscreteCopula { mass }, diagnostics))
}

fn slice_sums(mass: &ArrayD<f64>, axis: usize) -> Vec<f64> {
    mass.axis_iter(Axis(axis)).map(|s| s.sum()).collect()
}

fn sweep(mass: &mut ArrayD<f64>) {
    for axis in 0..mass.ndim() {
        let target = 1.0 / mass.shape()[axis] as f64;
        let sums = slice_sums(mass, axis);
        for (mut slice, s) in mass.axis_iter_mut(Axis(axis)).zip(sums) {
            slice.mapv_inplace(|m| m * target / s);
        }
    }
}

fn margin_error(mass: &ArrayD<f64>) -> f64 {
    (0..mass.ndim())
        .map(|axis| {
            let target = 1.0 / mass.shape()[axis] as f64;
            slice_sums(mass, axis).iter().map(|s| (s - target).abs()).sum::<f64>()
        })
        .sum()
}

/// `m[i,k] m[i',k'] / (m[i,k'] m[i',k])` for every `i < i'`, `k < k'`, in
/// row-major order of `(i, i', k, k')`.
pub fn cross_product_ratios<T: Scalar>(mass: &ArrayD<T>) -> Result<Vec<T>> {
    let m = mass
        .view()
        .into_dimensionality::<Ix2>()
        .map_err(|_| Error::Unsupported(format!("cross-product ratios need d = 2, got {}", mass.ndim())))?;
    let (rows, cols) = m.dim();
    let mut out = Vec::new();
    for i in 0..rows {
        for i2 in i + 1..rows {
            for k in 0..cols {
                for k2 in k + 1..cols {
                    let den = m[[i, k2]].clone() * m[[i2, k]].clone();
                    if den.is_zero() {
                        return Err(Error::ZeroDenominator);
                    }
                    out.push(m[[i, k]].clone() * m[[i2, k2]].clone() / den);
                }
            }
        }
    }
    Ok(out)
}

/// Compares the IPF core of `j` with that of its diagonal rescaling.
pub fn scaling_invariance_check<T: Scalar>(j: &JointPmf<T>, weights: &[Vec<T>], tol: f64) -> Result<Report<f64>> {
    if let Some((idx, m)) = j.mass().indexed_iter().find(|(_, m)| !m.is_positive()) {
        return Err(Error::NegativeMass { cell: idx.slice().to_vec(), value: m.to_repr() });
    }
    let scaled = j.diagonal_scaling(weights)?;
    let ipf_tol = tol.min(DEFAULT_TOL);
    let (a, _) = ipf(j, ipf_tol, DEFAULT_MAX_ITER)?;
    let (b, _) = ipf(&scaled, ipf_tol, DEFAULT_MAX_ITER)?;
    let mut report = Report::new("scaling_invariance");
    for ((idx, x), y) in a.mass().indexed_iter().zip(b.mass().iter()) {
        let diff = (x - y).abs();
        report.record(diff <= tol, diff, || Witness {
            location: Location::Cell(idx.slice().to_vec()),
            expected: *x,
            actual: *y,
            note: "IPF core of the rescaled joint".into(),
        });
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{rational, Rational};
    use ndarray::arr2;

    fn q(n: i64, d: i64) -> Rational {
        rational(n, d).unwrap()
    }

    fn joint(m: [[Rational; 2]; 2]) -> JointPmf<Rational> {
        let axes = vec![vec![q(0, 1), q(1, 1)]; 2];
        JointPmf::new(axes, arr2(&m).into_dyn()).unwrap()
    }

    fn pa() -> JointPmf<Rational> {
        joint([[q(2, 5), q(1, 10)], [q(1, 10), q(2, 5)]])
    }

    fn pb() -> JointPmf<Rational> {
        joint([[q(3, 5), q(1, 10)], [q(1, 10), q(1, 5)]])
    }

    fn p_prime() -> JointPmf<Rational> {
        joint([[q(8, 15), q(2, 15)], [q(1, 15), q(4, 15)]])
    }

    #[test]
    fn uniform_margins_are_a_fixed_point() {
        let (core, diag) = ipf(&pa(), 1e-10, 100).unwrap();
        assert_eq!(diag.iterations, 1);
        assert!(diag.converged);
        assert_eq!(core.mass(), &pa().mass().mapv(|m| m.to_f64_lossy()));
    }

    #[test]
    fn pb_limit_matches_odds_ratio_solution() {
        let (core, diag) = ipf(&pb(), 1e-12, DEFAULT_MAX_ITER).unwrap();
        assert!(diag.converged);
        // (a / (1/2 - a))^2 = 12
        let r = 12f64.sqrt();
        let a = r / (2.0 * (1.0 + r));
        assert!((a / (0.5 - a) - r).abs() < 1e-12);
        let expected = arr2(&[[a, 0.5 - a], [0.5 - a, a]]).into_dyn();
        let sup = core.mass().iter().zip(expected.iter()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        assert!(sup < 1e-8, "{sup}");
        assert!((a - 0.38800).abs() < 1e-5);
    }

    #[test]
    fn scaled_joint_shares_the_core() {
        let (a, _) = ipf(&pa(), 1e-12, DEFAULT_MAX_ITER).unwrap();
        let (b, _) = ipf(&p_prime(), 1e-12, DEFAULT_MAX_ITER).unwrap();
        assert!(a.sup_distance(&b).unwrap() < 1e-8);
        let weights = vec![vec![q(2, 1), q(1, 1)], vec![q(1, 1), q(1, 1)]];
        assert!(scaling_invariance_check(&pa(), &weights, 1e-8).unwrap().pass);
        let identity = vec![vec![q(1, 1), q(1, 1)]; 2];
        assert!(scaling_invariance_check(&pb(), &identity, 1e-12).unwrap().pass);
    }

    #[test]
    fn independence_core_is_flat() {
        let axes = vec![vec![q(0, 1), q(1, 1), q(2, 1)], vec![q(0, 1), q(1, 1)]];
        let outer = arr2(&[[q(1, 10), q(1, 10)], [q(3, 20), q(3, 20)], [q(1, 4), q(1, 4)]]);
        let j = JointPmf::new(axes, outer.into_dyn()).unwrap();
        let (core, _) = ipf(&j, 1e-12, DEFAULT_MAX_ITER).unwrap();
        assert!(core.mass().iter().all(|m| (m - 1.0 / 6.0).abs() < 1e-12));
        let weights = vec![vec![q(1, 1), q(5, 1), q(2, 1)], vec![q(3, 1), q(1, 1)]];
        assert!(scaling_invariance_check(&j, &weights, 1e-8).unwrap().pass);
    }

    #[test]
    fn cross_ratios_exact_and_preserved() {
        assert_eq!(cross_product_ratios(pa().mass()).unwrap(), vec![q(16, 1)]);
        assert_eq!(cross_product_ratios(p_prime().mass()).unwrap(), vec![q(16, 1)]);
        let (core, _) = ipf(&pb(), 1e-12, DEFAULT_MAX_ITER).unwrap();
        let r = cross_product_ratios(core.mass()).unwrap()[0];
        assert!((r - 12.0).abs() / 12.0 < 1e-9);
    }

    #[test]
    fn zero_slice_is_a_support_error() {
        let j = joint([[q(1, 2), q(1, 2)], [q(0, 1), q(0, 1)]]);
        assert!(matches!(ipf(&j, 1e-10, 10), Err(Error::Support { axis: 0, index: 1 })));
    }

    #[test]
    fn iteration_cap_reports_nonconvergence() {
        let (_, diag) = ipf(&pb(), 1e-15, 1).unwrap();
        assert_eq!(diag.iterations, 1);
        assert!(!diag.converged);
        assert!(diag.final_margin_error > 1e-15);
    }

    #[test]
    fn idempotent() {
        let (core, _) = ipf(&pb(), 1e-12, DEFAULT_MAX_ITER).unwrap();
        let (again, diag) = ipf(&core.to_joint().unwrap(), 1e-12, DEFAULT_MAX_ITER).unwrap();
        assert_eq!(diag.iterations, 1);
        assert!(core.sup_distance(&again).unwrap() < 1e-12);
    }
}
