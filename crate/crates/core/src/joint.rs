//! Discrete joint distributions on a finite product grid.

use ndarray::{ArrayD, Axis, Dimension, IxDyn};

use crate::error::{Error, Result};
use crate::margins::Margin;
use crate::numerics::{cmp_scalar, convert, ExtReal, Scalar, TolerancePolicy};

/// Probability mass on the grid `axes[0] x ... x axes[d-1]`.
///
/// Zero cells are kept. The cumulative array backing [`JointPmf::joint_cdf`]
/// is computed once at construction.
#[derive(Clone, Debug, PartialEq)]
pub struct JointPmf<T> {
    axes: Vec<Vec<T>>,
    mass: ArrayD<T>,
    cumulative: ArrayD<T>,
}

impl<T: Scalar> JointPmf<T> {
    pub fn new(axes: Vec<Vec<T>>, mass: ArrayD<T>) -> Result<Self> {
        Self::check_shape(&axes, &mass)?;
        for (idx, m) in mass.indexed_iter() {
            if m.is_negative() {
                return Err(Error::NegativeMass { cell: idx.slice().to_vec(), value: m.to_repr() });
            }
        }
        let total = mass.iter().cloned().fold(T::zero(), |a, b| a + b);
        if !(total.clone() - T::one()).negligible(&TolerancePolicy::default()) {
            return Err(Error::Normalization { total: total.to_repr() });
        }
        Ok(Self::build(axes, mass))
    }

    /// Like [`JointPmf::new`] for a flat row-major value list.
    pub fn from_flat(axes: Vec<Vec<T>>, values: Vec<T>) -> Result<Self> {
        let shape: Vec<usize> = axes.iter().map(Vec::len).collect();
        let mass = ArrayD::from_shape_vec(IxDyn(&shape), values)
            .map_err(|e| Error::Shape(e.to_string()))?;
        Self::new(axes, mass)
    }

    /// Normalizes nonnegative counts (or unnormalized weights) to probabilities.
    pub fn from_counts(axes: Vec<Vec<T>>, counts: ArrayD<T>) -> Result<Self> {
        Self::check_shape(&axes, &counts)?;
        for (idx, m) in counts.indexed_iter() {
            if m.is_negative() {
                return Err(Error::NegativeMass { cell: idx.slice().to_vec(), value: m.to_repr() });
            }
        }
        let total = counts.iter().cloned().fold(T::zero(), |a, b| a + b);
        if total.is_zero() {
            return Err(Error::Normalization { total: total.to_repr() });
        }
        let mass = counts.mapv(|c| c / total.clone());
        Ok(Self::build(axes, mass))
    }

    /// Empirical joint: axes are the distinct observed values, masses `count / n`.
    pub fn from_samples(records: &[Vec<T>]) -> Result<Self> {
        let first = records.first().ok_or(Error::EmptyInput)?;
        let d = first.len();
        if d < 2 {
            return Err(Error::Shape(format!("records need at least 2 coordinates, got {d}")));
        }
        for (index, r) in records.iter().enumerate() {
            if r.len() != d {
                return Err(Error::RaggedRecord { index, expected: d, got: r.len() });
            }
        }
        let axes: Vec<Vec<T>> = (0..d)
            .map(|k| {
                let mut vals: Vec<T> = records.iter().map(|r| r[k].clone()).collect();
                vals.sort_by(cmp_scalar);
                vals.dedup();
                vals
            })
            .collect();
        let shape: Vec<usize> = axes.iter().map(Vec::len).collect();
        let mut counts = ArrayD::from_elem(IxDyn(&shape), T::zero());
        for r in records {
            let idx: Vec<usize> = r
                .iter()
                .zip(&axes)
                .map(|(v, axis)| axis.binary_search_by(|a| cmp_scalar(a, v)).expect("observed value"))
                .collect();
            counts[IxDyn(&idx)] = counts[IxDyn(&idx)].clone() + T::one();
        }
        Self::from_counts(axes, counts)
    }

    fn check_shape(axes: &[Vec<T>], mass: &ArrayD<T>) -> Result<()> {
        if axes.len() < 2 {
            return Err(Error::Shape(format!("need at least 2 dimensions, got {}", axes.len())));
        }
        let shape: Vec<usize> = axes.iter().map(Vec::len).collect();
        if mass.shape() != shape.as_slice() {
            return Err(Error::Shape(format!(
                "mass array has shape {:?}, axes imply {:?}",
                mass.shape(),
                shape
            )));
        }
        for (k, axis) in axes.iter().enumerate() {
            if axis.is_empty() {
                return Err(Error::Shape(format!("axis {k} is empty")));
            }
            if axis.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::Shape(format!("axis {k} is not strictly increasing")));
            }
        }
        Ok(())
    }

    fn build(axes: Vec<Vec<T>>, mass: ArrayD<T>) -> Self {
        let mut cumulative = mass.clone();
        for k in 0..cumulative.ndim() {
            cumulative.accumulate_axis_inplace(Axis(k), |prev, cur| *cur = cur.clone() + prev.clone());
        }
        Self { axes, mass, cumulative }
    }

    pub fn dims(&self) -> usize {
        self.axes.len()
    }

    pub fn axes(&self) -> &[Vec<T>] {
        &self.axes
    }

    pub fn shape(&self) -> &[usize] {
        self.mass.shape()
    }

    pub fn mass(&self) -> &ArrayD<T> {
        &self.mass
    }

    /// `F(x) = P(X <= x)` componentwise.
    pub fn joint_cdf(&self, x: &[ExtReal<T>]) -> Result<T> {
        if x.len() != self.dims() {
            return Err(Error::DimensionMismatch { expected: self.dims(), got: x.len() });
        }
        let mut idx = Vec::with_capacity(x.len());
        for (xk, axis) in x.iter().zip(&self.axes) {
            let count = match xk {
                ExtReal::NegInf => 0,
                ExtReal::PosInf => axis.len(),
                ExtReal::Finite(v) => axis.partition_point(|a| a <= v),
            };
            if count == 0 {
                return Ok(T::zero());
            }
            idx.push(count - 1);
        }
        Ok(self.cumulative[IxDyn(&idx)].clone())
    }

    /// Signed `2^d` corner sum of the joint CDF over `(lower, upper]`.
    pub fn box_volume(&self, lower: &[ExtReal<T>], upper: &[ExtReal<T>]) -> Result<T> {
        let d = self.dims();
        if lower.len() != d || upper.len() != d {
            return Err(Error::DimensionMismatch { expected: d, got: lower.len().min(upper.len()) });
        }
        let mut total = T::zero();
        let mut corner = upper.to_vec();
        for mask in 0u32..(1 << d) {
            let mut lows = 0;
            for k in 0..d {
                if mask & (1 << k) != 0 {
                    corner[k] = lower[k].clone();
                    lows += 1;
                } else {
                    corner[k] = upper[k].clone();
                }
            }
            let v = self.joint_cdf(&corner)?;
            total = if lows % 2 == 0 { total + v } else { total - v };
        }
        Ok(total)
    }

    /// Distribution of the `axis`-th coordinate (0-based).
    pub fn marginal(&self, axis: usize) -> Result<Margin<T>> {
        if axis >= self.dims() {
            return Err(Error::AxisOutOfRange { axis, dims: self.dims() });
        }
        let masses: Vec<T> = self
            .mass
            .axis_iter(Axis(axis))
            .map(|slice| slice.iter().cloned().fold(T::zero(), |a, b| a + b))
            .collect();
        Margin::discrete(self.axes[axis].clone(), masses)
    }

    pub fn marginals(&self) -> Vec<Margin<T>> {
        (0..self.dims()).map(|k| self.marginal(k).expect("axis in range")).collect()
    }

    /// `mass'(i_1..i_d) ∝ w_1[i_1] ... w_d[i_d] mass(i_1..i_d)`, renormalized.
    pub fn diagonal_scaling(&self, weights: &[Vec<T>]) -> Result<Self> {
        if weights.len() != self.dims() {
            return Err(Error::DimensionMismatch { expected: self.dims(), got: weights.len() });
        }
        for (axis, w) in weights.iter().enumerate() {
            if w.len() != self.axes[axis].len() {
                return Err(Error::Shape(format!(
                    "axis {axis} has {} atoms but {} weights",
                    self.axes[axis].len(),
                    w.len()
                )));
            }
            if let Some(index) = w.iter().position(|x| !x.is_positive()) {
                return Err(Error::NonPositiveWeight { axis, index });
            }
        }
        let mut scaled = self.mass.clone();
        for (idx, m) in scaled.indexed_iter_mut() {
            let factor = idx
                .slice()
                .iter()
                .enumerate()
                .fold(T::one(), |acc, (k, &i)| acc * weights[k][i].clone());
            *m = m.clone() * factor;
        }
        Self::from_counts(self.axes.clone(), scaled)
    }

    /// The same joint on another scalar track.
    pub fn convert<U: Scalar>(&self) -> JointPmf<U> {
        let axes = self.axes.iter().map(|a| a.iter().map(convert).collect()).collect();
        let mass = self.mass.map(convert);
        JointPmf::build(axes, mass)
    }
}
