//! Brute-force reference computations.
//!
//! Nothing here shares code with the production paths it checks; the only
//! common ground is scalar arithmetic.

use ndarray::{Dimension, IxDyn};

use crate::error::{Error, Result};
use crate::extension::CopulaFn;
use crate::joint::JointPmf;
use crate::numerics::{cmp_scalar, ExtReal, Scalar};

/// Rational probe points in `[0, 1]^d`, one sorted coordinate list per axis.
#[derive(Clone, Debug, PartialEq)]
pub struct ProbeLattice<T> {
    axes: Vec<Vec<T>>,
}

impl<T: Scalar> ProbeLattice<T> {
    /// `{0, 1/n, ..., 1}` on every axis.
    pub fn uniform(dims: usize, resolution: u32) -> Self {
        let n = i64::from(resolution.max(1));
        let axis: Vec<T> = (0..=n).map(|k| T::ratio(k, n)).collect();
        Self { axes: vec![axis; dims] }
    }

    /// Uniform lattice merged with extra per-axis points (typically a skeleton grid).
    pub fn covering(resolution: u32, extra: &[Vec<T>]) -> Self {
        let mut lattice = Self::uniform(extra.len(), resolution);
        for (axis, more) in lattice.axes.iter_mut().zip(extra) {
            axis.extend(more.iter().cloned());
            axis.sort_by(cmp_scalar);
            axis.dedup();
        }
        lattice
    }

    pub fn from_axes(axes: Vec<Vec<T>>) -> Self {
        Self { axes }
    }

    pub fn dims(&self) -> usize {
        self.axes.len()
    }

    pub fn axes(&self) -> &[Vec<T>] {
        &self.axes
    }

    pub fn len(&self) -> usize {
        self.axes.iter().map(Vec::len).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Lattice points in row-major order.
    pub fn points(&self) -> impl Iterator<Item = Vec<T>> + '_ {
        let shape: Vec<usize> = self.axes.iter().map(Vec::len).collect();
        ndarray::indices(IxDyn(&shape))
            .into_iter()
            .map(move |idx| idx.slice().iter().zip(&self.axes).map(|(&i, a)| a[i].clone()).collect())
    }
}

/// `P(X <= x)` by summing every cell.
pub fn cdf_by_enumeration<T: Scalar>(j: &JointPmf<T>, x: &[ExtReal<T>]) -> Result<T> {
    if x.len() != j.dims() {
        return Err(Error::DimensionMismatch { expected: j.dims(), got: x.len() });
    }
    let mut total = T::zero();
    for (idx, m) in j.mass().indexed_iter() {
        let inside = idx
            .slice()
            .iter()
            .zip(j.axes())
            .zip(x)
            .all(|((&i, axis), xk)| ExtReal::Finite(axis[i].clone()) <= *xk);
        if inside {
            total = total + m.clone();
        }
    }
    Ok(total)
}

/// Kendall's `τ_a` by enumerating all ordered pairs of cells.
pub fn tau_by_pair_enumeration<T: Scalar>(j: &JointPmf<T>) -> Result<T> {
    if j.dims() != 2 {
        return Err(Error::Unsupported(format!("Kendall's tau needs d = 2, got {}", j.dims())));
    }
    let cells: Vec<(T, T, T)> = j
        .mass()
        .indexed_iter()
        .map(|(idx, m)| (j.axes()[0][idx[0]].clone(), j.axes()[1][idx[1]].clone(), m.clone()))
        .collect();
    let mut concordant = T::zero();
    let mut discordant = T::zero();
    for (x1, y1, p1) in &cells {
        for (x2, y2, p2) in &cells {
            let dx = x1.clone() - x2.clone();
            let dy = y1.clone() - y2.clone();
            let sign = dx * dy;
            if sign.is_positive() {
                concordant = concordant + p1.clone() * p2.clone();
            } else if sign.is_negative() {
                discordant = discordant + p1.clone() * p2.clone();
            }
        }
    }
    Ok(concordant - discordant)
}

/// `∬ C` over `[0, 1]^2` by nested adaptive midpoint-rule refinement.
///
/// Each interval is halved until its composite midpoint and trapezoid
/// estimates (4 panels each) differ by less than `rel_tol` times the interval
/// length. Both rules are exact on linear pieces, and a kink strictly inside
/// a panel pushes them apart with opposite signs.
pub fn copula_integral_by_quadrature(c: &(impl CopulaFn<f64> + ?Sized), rel_tol: f64) -> Result<f64> {
    if c.dims() != 2 {
        return Err(Error::Unsupported(format!("quadrature oracle needs d = 2, got {}", c.dims())));
    }
    if !(rel_tol > 0.0) {
        return Err(Error::InvalidTolerance { name: "rel_tol", value: rel_tol });
    }
    let inner = |v: f64| adaptive(&|u: f64| c.eval(&[u, v]), rel_tol);
    Ok(adaptive(&inner, rel_tol))
}

fn adaptive(f: &dyn Fn(f64) -> f64, tol: f64) -> f64 {
    const START: usize = 16;
    let h = 1.0 / START as f64;
    (0..START)
        .map(|k| refine(f, k as f64 * h, (k + 1) as f64 * h, tol, 0))
        .sum()
}

fn refine(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
    const PANELS: usize = 4;
    let h = (b - a) / PANELS as f64;
    let nodes: Vec<f64> = (0..=PANELS).map(|i| f(a + i as f64 * h)).collect();
    let trapezoid = h * (nodes.iter().sum::<f64>() - 0.5 * (nodes[0] + nodes[PANELS]));
    let midpoint = h * (0..PANELS).map(|i| f(a + (i as f64 + 0.5) * h)).sum::<f64>();
    if (midpoint - trapezoid).abs() <= tol * (b - a) || depth >= 48 {
        (2.0 * midpoint + trapezoid) / 3.0
    } else {
        let m = 0.5 * (a + b);
        refine(f, a, m, tol, depth + 1) + refine(f, m, b, tol, depth + 1)
    }
}
