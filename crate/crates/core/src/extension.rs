//! Extending a subcopula from its range grid to the whole unit cube.
//!
//! Outside the grid the extension is not determined by the subcopula, so
//! several constructions are offered: the checkerboard (multilinear)
//! extension in any dimension, and patchwork extensions in two dimensions
//! that fill each grid cell with a comonotone, countermonotone or product
//! copula shape.

use std::fmt;

use ndarray::{ArrayD, Dimension, IxDyn};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::oracle::ProbeLattice;
use crate::report::{Location, Report, Witness};
use crate::subcopula::{verify_subcopula_axioms, Subcopula};
use crate::numerics::{Scalar, TolerancePolicy};

/// Anything that can be evaluated as a copula on `[0, 1]^d`.
///
/// Arguments outside `[0, 1]` are clamped, which extends the copula as a
/// distribution function on the whole of `R^d`.
pub trait CopulaFn<T>: Send + Sync {
    fn dims(&self) -> usize;
    fn eval(&self, u: &[T]) -> T;
}

fn clamp_unit<T: Scalar>(v: &T) -> T {
    if v.is_negative() {
        T::zero()
    } else if *v > T::one() {
        T::one()
    } else {
        v.clone()
    }
}

/// `Π(u) = u_1 ... u_d`.
#[derive(Clone, Copy, Debug)]
pub struct Independence(pub usize);

impl<T: Scalar> CopulaFn<T> for Independence {
    fn dims(&self) -> usize {
        self.0
    }

    fn eval(&self, u: &[T]) -> T {
        u.iter().fold(T::one(), |acc, v| acc * clamp_unit(v))
    }
}

/// Upper Fréchet bound `M(u) = min_k u_k`.
#[derive(Clone, Copy, Debug)]
pub struct Comonotone(pub usize);

impl<T: Scalar> CopulaFn<T> for Comonotone {
    fn dims(&self) -> usize {
        self.0
    }

    fn eval(&self, u: &[T]) -> T {
        u.iter().map(clamp_unit).fold(T::one(), |acc, v| if v < acc { v } else { acc })
    }
}

/// Lower Fréchet bound `W(u, v) = max(u + v - 1, 0)`; a copula only for `d = 2`.
#[derive(Clone, Copy, Debug)]
pub struct Countermonotone;

impl<T: Scalar> CopulaFn<T> for Countermonotone {
    fn dims(&self) -> usize {
        2
    }

    fn eval(&self, u: &[T]) -> T {
        let s = clamp_unit(&u[0]) + clamp_unit(&u[1]) - T::one();
        if s.is_negative() {
            T::zero()
        } else {
            s
        }
    }
}

/// Wraps a closure as a [`CopulaFn`]. No clamping is applied.
pub struct FnCopula<F> {
    dims: usize,
    f: F,
}

impl<F> FnCopula<F> {
    pub fn new(dims: usize, f: F) -> Self {
        Self { dims, f }
    }
}

impl<T, F: Fn(&[T]) -> T + Send + Sync> CopulaFn<T> for FnCopula<F> {
    fn dims(&self) -> usize {
        self.dims
    }

    fn eval(&self, u: &[T]) -> T {
        (self.f)(u)
    }
}

/// Shape used to spread a cell's mass in a patchwork extension.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Fill {
    /// `min(s, t)`: mass on the cell diagonal.
    M,
    /// `max(s + t - 1, 0)`: mass on the cell anti-diagonal.
    W,
    /// `s t`: uniform mass, reproducing the checkerboard.
    Product,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExtensionKind {
    Checkerboard,
    Patchwork(Fill),
}

impl ExtensionKind {
    pub fn name(&self) -> &'static str {
        match self {
            ExtensionKind::Checkerboard => "checkerboard",
            ExtensionKind::Patchwork(Fill::M) => "patchwork_m",
            ExtensionKind::Patchwork(Fill::W) => "patchwork_w",
            ExtensionKind::Patchwork(Fill::Product) => "patchwork_pi",
        }
    }

    pub fn from_name(s: &str) -> Result<Self> {
        match s.replace('-', "_").as_str() {
            "checkerboard" => Ok(ExtensionKind::Checkerboard),
            "patchwork_m" => Ok(ExtensionKind::Patchwork(Fill::M)),
            "patchwork_w" => Ok(ExtensionKind::Patchwork(Fill::W)),
            "patchwork_pi" => Ok(ExtensionKind::Patchwork(Fill::Product)),
            other => Err(Error::Parse(format!("unknown extension kind {other:?}"))),
        }
    }
}

impl fmt::Display for ExtensionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A copula built from a tabulated subcopula (its skeleton).
#[derive(Clone, Debug)]
pub struct Copula<T> {
    kind: ExtensionKind,
    skeleton: Subcopula<T>,
}

/// Multilinear interpolation of the skeleton grid.
pub fn extend_checkerboard<T: Scalar>(h: &Subcopula<T>) -> Result<Copula<T>> {
    extend(h, ExtensionKind::Checkerboard)
}

/// Two-dimensional patchwork extension with the given cell fill.
pub fn extend_patchwork<T: Scalar>(h: &Subcopula<T>, fill: Fill) -> Result<Copula<T>> {
    extend(h, ExtensionKind::Patchwork(fill))
}

pub fn extend<T: Scalar>(h: &Subcopula<T>, kind: ExtensionKind) -> Result<Copula<T>> {
    if h.grid().is_none() {
        return Err(Error::Unsupported("extension needs a tabulated subcopula".into()));
    }
    if matches!(kind, ExtensionKind::Patchwork(_)) && h.dims() != 2 {
        return Err(Error::Unsupported(format!("patchwork extension in {} dimensions", h.dims())));
    }
    let report = verify_subcopula_axioms(h)?;
    if !report.pass {
        let note = report.witness.map(|w| w.note).unwrap_or_default();
        return Err(Error::InvalidSubcopula(note));
    }
    Ok(Copula { kind, skeleton: h.clone() })
}

/// Cell containing `u` along one grid axis, and the relative position inside it.
fn locate<T: Scalar>(axis: &[T], u: &T) -> (usize, T) {
    let n = axis.len();
    let i = axis.partition_point(|a| a <= u).clamp(1, n - 1);
    let (lo, hi) = (&axis[i - 1], &axis[i]);
    let width = hi.clone() - lo.clone();
    let w = if width.is_zero() { T::zero() } else { (u.clone() - lo.clone()) / width };
    (i - 1, w)
}

impl<T: Scalar> Copula<T> {
    pub fn kind(&self) -> ExtensionKind {
        self.kind
    }

    pub fn skeleton(&self) -> &Subcopula<T> {
        &self.skeleton
    }

    fn grid(&self) -> (&[Vec<T>], &ArrayD<T>) {
        self.skeleton.grid().expect("skeleton is tabulated")
    }

    fn multilinear(&self, u: &[T]) -> T {
        let (axes, values) = self.grid();
        let d = axes.len();
        let located: Vec<(usize, T)> = u.iter().zip(axes).map(|(v, a)| locate(a, &clamp_unit(v))).collect();
        // corner values indexed by a mask whose bit k selects the upper end
        // on axis k, then interpolated away one axis at a time
        let mut corner = vec![0usize; d];
        let mut level: Vec<T> = (0..1usize << d)
            .map(|mask| {
                for (k, (i, _)) in located.iter().enumerate() {
                    corner[k] = i + (mask >> k & 1);
                }
                values[IxDyn(&corner)].clone()
            })
            .collect();
        for (_, w) in &located {
            level = level
                .chunks(2)
                .map(|pair| {
                    if w.is_zero() {
                        pair[0].clone()
                    } else {
                        pair[0].clone() + w.clone() * (pair[1].clone() - pair[0].clone())
                    }
                })
                .collect();
        }
        level.pop().expect("one value left")
    }

    fn patchwork(&self, fill: Fill, u: &[T]) -> T {
        let (axes, values) = self.grid();
        let (i, s) = locate(&axes[0], &clamp_unit(&u[0]));
        let (j, t) = locate(&axes[1], &clamp_unit(&u[1]));
        let h00 = values[[i, j].as_slice()].clone();
        let h10 = values[[i + 1, j].as_slice()].clone();
        let h01 = values[[i, j + 1].as_slice()].clone();
        let h11 = values[[i + 1, j + 1].as_slice()].clone();
        let mass = h11 - h10.clone() - h01.clone() + h00.clone();
        let base = h00.clone() + (h10 - h00.clone()) * s.clone() + (h01 - h00) * t.clone();
        let degenerate = axes[0][i] == axes[0][i + 1] || axes[1][j] == axes[1][j + 1];
        if degenerate || mass.is_zero() {
            return base;
        }
        base + mass * fill_shape(fill, &s, &t)
    }

    /// `∫ C` over `[0, 1]^d`, in closed form cell by cell.
    pub fn integral(&self) -> T {
        let (axes, values) = self.grid();
        let d = axes.len();
        let cells: Vec<usize> = axes.iter().map(|a| a.len() - 1).collect();
        let two = T::one() + T::one();
        let mut total = T::zero();
        for cell in ndarray::indices(IxDyn(&cells)) {
            let cell = cell.slice();
            let volume = cell
                .iter()
                .zip(axes)
                .fold(T::one(), |acc, (&i, a)| acc * (a[i + 1].clone() - a[i].clone()));
            let mean = match self.kind {
                ExtensionKind::Checkerboard => {
                    let mut corner = vec![0usize; d];
                    let mut sum = T::zero();
                    for mask in 0u32..(1 << d) {
                        for k in 0..d {
                            corner[k] = cell[k] + usize::from(mask & (1 << k) != 0);
                        }
                        sum = sum + values[IxDyn(&corner)].clone();
                    }
                    sum / T::from_u64(1 << d).expect("small integer")
                }
                ExtensionKind::Patchwork(fill) => {
                    let (i, j) = (cell[0], cell[1]);
                    let h00 = values[[i, j].as_slice()].clone();
                    let h10 = values[[i + 1, j].as_slice()].clone();
                    let h01 = values[[i, j + 1].as_slice()].clone();
                    let h11 = values[[i + 1, j + 1].as_slice()].clone();
                    let mass = h11 - h10.clone() - h01.clone() + h00.clone();
                    let shape_mean = match fill {
                        Fill::M => T::ratio(1, 3),
                        Fill::W => T::ratio(1, 6),
                        Fill::Product => T::ratio(1, 4),
                    };
                    h00.clone() + (h10 - h00.clone()) / two.clone() + (h01 - h00) / two.clone() + mass * shape_mean
                }
            };
            total = total + volume * mean;
        }
        total
    }
}

fn fill_shape<T: Scalar>(fill: Fill, s: &T, t: &T) -> T {
    match fill {
        Fill::M => {
            if s < t {
                s.clone()
            } else {
                t.clone()
            }
        }
        Fill::W => {
            let v = s.clone() + t.clone() - T::one();
            if v.is_negative() {
                T::zero()
            } else {
                v
            }
        }
        Fill::Product => s.clone() * t.clone(),
    }
}

impl<T: Scalar> CopulaFn<T> for Copula<T> {
    fn dims(&self) -> usize {
        self.skeleton.dims()
    }

    fn eval(&self, u: &[T]) -> T {
        assert_eq!(u.len(), self.dims(), "copula argument has wrong dimension");
        match self.kind {
            ExtensionKind::Checkerboard => self.multilinear(u),
            ExtensionKind::Patchwork(fill) => self.patchwork(fill, u),
        }
    }
}

const PROBE_DENOMINATOR: i64 = 1 << 20;

fn random_unit<T: Scalar>(rng: &mut ChaCha8Rng) -> T {
    T::ratio(rng.random_range(0..=PROBE_DENOMINATOR), PROBE_DENOMINATOR)
}

/// Signed `2^d` corner sum of `c` over the box `[lower, upper]`.
pub fn box_volume<T: Scalar>(c: &(impl CopulaFn<T> + ?Sized), lower: &[T], upper: &[T]) -> T {
    let d = lower.len();
    let mut corner = upper.to_vec();
    let mut total = T::zero();
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
        let v = c.eval(&corner);
        total = if lows % 2 == 0 { total + v } else { total - v };
    }
    total
}

/// Checks the copula axioms: groundedness, uniform margins on a fixed
/// `α`-grid plus seeded random `α`, and nonnegative volume on `n_boxes`
/// seeded random boxes.
pub fn verify_copula_axioms<T: Scalar>(c: &(impl CopulaFn<T> + ?Sized), n_boxes: usize, seed: u64) -> Report<T> {
    verify_copula_axioms_with(c, n_boxes, seed, &TolerancePolicy::default())
}

pub fn verify_copula_axioms_with<T: Scalar>(
    c: &(impl CopulaFn<T> + ?Sized),
    n_boxes: usize,
    seed: u64,
    policy: &TolerancePolicy,
) -> Report<T> {
    let d = c.dims();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut alphas: Vec<T> = (0..=16).map(|k| T::ratio(k, 16)).collect();
    alphas.extend((0..16).map(|_| random_unit(&mut rng)));
    let mut report = Report::new("copula_axioms");

    let mut grounded_points: Vec<Vec<T>> = vec![vec![T::zero(); d]];
    for k in 0..d {
        for a in &alphas {
            let mut p = vec![a.clone(); d];
            p[k] = T::zero();
            grounded_points.push(p);
        }
        for _ in 0..16 {
            let mut p: Vec<T> = (0..d).map(|_| random_unit(&mut rng)).collect();
            p[k] = T::zero();
            grounded_points.push(p);
        }
    }
    for p in grounded_points {
        let v = c.eval(&p);
        report.record(v.negligible(policy), v.abs(), || Witness {
            location: Location::Unit(p.clone()),
            expected: T::zero(),
            actual: v.clone(),
            note: "groundedness".into(),
        });
    }

    for k in 0..d {
        for a in &alphas {
            let mut p = vec![T::one(); d];
            p[k] = a.clone();
            let v = c.eval(&p);
            let diff = (v.clone() - a.clone()).abs();
            report.record(diff.negligible(policy), diff, || Witness {
                location: Location::Unit(p.clone()),
                expected: a.clone(),
                actual: v.clone(),
                note: format!("margin condition on axis {} at alpha {}", k + 1, a.to_repr()),
            });
        }
    }

    for _ in 0..n_boxes {
        let (lower, upper): (Vec<T>, Vec<T>) = (0..d)
            .map(|_| {
                let (a, b) = (random_unit::<T>(&mut rng), random_unit::<T>(&mut rng));
                if a <= b {
                    (a, b)
                } else {
                    (b, a)
                }
            })
            .unzip();
        let vol = box_volume(c, &lower, &upper);
        let deficit = if vol.is_negative() { -vol.clone() } else { T::zero() };
        report.record(vol.nonnegative(policy), deficit, || Witness {
            location: Location::Box { lower: lower.clone(), upper: upper.clone() },
            expected: T::zero(),
            actual: vol.clone(),
            note: "negative C-volume".into(),
        });
    }
    report
}

/// Checks that an extension reproduces its skeleton at every grid point.
pub fn grid_agreement<T: Scalar>(c: &Copula<T>) -> Report<T> {
    let policy = TolerancePolicy::default();
    let (axes, values) = c.grid();
    let mut report = Report::new("grid_agreement");
    for (idx, h) in values.indexed_iter() {
        let u: Vec<T> = idx.slice().iter().zip(axes).map(|(&i, a)| a[i].clone()).collect();
        let v = c.eval(&u);
        let diff = (v.clone() - h.clone()).abs();
        report.record(diff.negligible(&policy), diff, || Witness {
            location: Location::Unit(u.clone()),
            expected: h.clone(),
            actual: v.clone(),
            note: format!("{} extension off its skeleton", c.kind),
        });
    }
    report
}

/// Largest `|c1 - c2|` over a probe lattice and the first point attaining it.
#[derive(Clone, Debug, PartialEq)]
pub struct Coincidence<T> {
    pub max_diff: T,
    pub witness: Vec<T>,
}

pub fn extensions_coincide<T: Scalar>(
    c1: &(impl CopulaFn<T> + ?Sized),
    c2: &(impl CopulaFn<T> + ?Sized),
    lattice: &ProbeLattice<T>,
) -> Result<Coincidence<T>> {
    if c1.dims() != c2.dims() {
        return Err(Error::DimensionMismatch { expected: c1.dims(), got: c2.dims() });
    }
    if lattice.dims() != c1.dims() {
        return Err(Error::DimensionMismatch { expected: c1.dims(), got: lattice.dims() });
    }
    let mut best: Option<Coincidence<T>> = None;
    for p in lattice.points() {
        let diff = (c1.eval(&p) - c2.eval(&p)).abs();
        if best.as_ref().is_none_or(|b| diff > b.max_diff) {
            best = Some(Coincidence { max_diff: diff, witness: p });
        }
    }
    best.ok_or(Error::EmptyInput)
}
