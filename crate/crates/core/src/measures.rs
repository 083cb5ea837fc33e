//! Kendall's tau and Spearman's rho of bivariate discrete joints, and how
//! both move under a change of margins that keeps the odds ratios.

use ndarray::{Array2, Ix2};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::extension::{extend, ExtensionKind, Fill};
use crate::joint::JointPmf;
use crate::marginfree::{cross_product_ratios, ipf, DiscreteCopula, IpfDiagnostics, DEFAULT_MAX_ITER, DEFAULT_TOL};
use crate::numerics::Scalar;
use crate::subcopula::extract;

fn bivariate<T: Scalar>(j: &JointPmf<T>, what: &str) -> Result<Array2<T>> {
    j.mass()
        .clone()
        .into_dimensionality::<Ix2>()
        .map_err(|_| Error::Unsupported(format!("{what} needs d = 2, got {}", j.dims())))
}

/// `τ_a`: concordant minus discordant probability over two independent
/// draws; ties on either coordinate count for neither.
pub fn kendall_tau<T: Scalar>(j: &JointPmf<T>) -> Result<T> {
    let p = bivariate(j, "Kendall's tau")?;
    let (rows, cols) = p.dim();
    // below[i][k] = mass strictly below row i and strictly left of column k
    let mut below = Array2::from_elem((rows + 1, cols + 1), T::zero());
    for i in 0..rows {
        for k in 0..cols {
            below[[i + 1, k + 1]] =
                p[[i, k]].clone() + below[[i, k + 1]].clone() + below[[i + 1, k]].clone() - below[[i, k]].clone();
        }
    }
    let mut total = T::zero();
    for ((i, k), m) in p.indexed_iter() {
        let lower_left = below[[i, k]].clone();
        let lower_right = below[[i, cols]].clone() - below[[i, k + 1]].clone();
        total = total + m.clone() * (lower_left - lower_right);
    }
    Ok(T::ratio(2, 1) * total)
}

/// `12 ∬ C - 3` for the `kind` extension of the joint's subcopula.
pub fn spearman_rho<T: Scalar>(j: &JointPmf<T>, kind: ExtensionKind) -> Result<T> {
    bivariate(j, "Spearman's rho")?;
    let c = extend(&extract(j), kind)?;
    Ok(T::ratio(12, 1) * c.integral() - T::ratio(3, 1))
}

pub fn spearman_rho_checkerboard<T: Scalar>(j: &JointPmf<T>) -> Result<T> {
    spearman_rho(j, ExtensionKind::Checkerboard)
}

#[derive(Clone, Debug, PartialEq)]
pub struct MeasureReport<T> {
    pub tau: T,
    /// Under the checkerboard extension.
    pub rho: T,
    /// Under the patchwork-M extension; differs from `rho` whenever the
    /// margins have atoms.
    pub rho_patchwork_m: T,
    pub notes: Vec<&'static str>,
}

impl<T: Scalar> MeasureReport<T> {
    pub fn to_json(&self) -> Value {
        json!({
            "tau": self.tau.to_json(),
            "rho": self.rho.to_json(),
            "rho_patchwork_m": self.rho_patchwork_m.to_json(),
            "notes": self.notes,
        })
    }
}

pub fn measures<T: Scalar>(j: &JointPmf<T>) -> Result<MeasureReport<T>> {
    Ok(MeasureReport {
        tau: kendall_tau(j)?,
        rho: spearman_rho_checkerboard(j)?,
        rho_patchwork_m: spearman_rho(j, ExtensionKind::Patchwork(Fill::M))?,
        notes: vec![
            "tau is tau_a: tied pairs count as neither concordant nor discordant",
            "rho = 12 * integral of the checkerboard extension - 3",
            "rho_patchwork_m uses the patchwork extension with comonotone cells",
        ],
    })
}

/// Dependence measures of a joint and of a diagonal rescaling of it, next to
/// their IPF cores.
#[derive(Clone, Debug)]
pub struct MarginSensitivity<T> {
    pub scaled: JointPmf<T>,
    pub original_measures: MeasureReport<T>,
    pub scaled_measures: MeasureReport<T>,
    /// True when every 2x2 cross-product ratio is unchanged (exactly on the
    /// exact track).
    pub cross_ratios_equal: bool,
    pub original_core: (DiscreteCopula, IpfDiagnostics),
    pub scaled_core: (DiscreteCopula, IpfDiagnostics),
    pub original_core_tau: f64,
    pub scaled_core_tau: f64,
    pub core_distance: f64,
}

impl<T: Scalar> MarginSensitivity<T> {
    pub fn tau_delta(&self) -> T {
        self.original_measures.tau.clone() - self.scaled_measures.tau.clone()
    }

    pub fn to_json(&self) -> Value {
        let core = |(c, d): &(DiscreteCopula, IpfDiagnostics), tau: f64| {
            json!({ "copula": c.to_json(), "diagnostics": d.to_json(), "tau": tau })
        };
        json!({
            "scaled_mass": crate::io::nested_json(self.scaled.mass()),
            "original": self.original_measures.to_json(),
            "scaled": self.scaled_measures.to_json(),
            "tau_delta": self.tau_delta().to_json(),
            "rho_delta": (self.original_measures.rho.clone() - self.scaled_measures.rho.clone()).to_json(),
            "cross_ratios_equal": self.cross_ratios_equal,
            "original_core": core(&self.original_core, self.original_core_tau),
            "scaled_core": core(&self.scaled_core, self.scaled_core_tau),
            "core_sup_distance": self.core_distance,
        })
    }
}

pub fn margin_sensitivity<T: Scalar>(j: &JointPmf<T>, weights: &[Vec<T>]) -> Result<MarginSensitivity<T>> {
    bivariate(j, "margin sensitivity")?;
    let scaled = j.diagonal_scaling(weights)?;
    let cross_ratios_equal = match (cross_product_ratios(j.mass()), cross_product_ratios(scaled.mass())) {
        (Ok(a), Ok(b)) => a == b || (!T::EXACT && a.iter().zip(&b).all(|(x, y)| close(x, y))),
        _ => false,
    };
    let original_core = ipf(j, DEFAULT_TOL, DEFAULT_MAX_ITER)?;
    let scaled_core = ipf(&scaled, DEFAULT_TOL, DEFAULT_MAX_ITER)?;
    let original_core_tau = kendall_tau(&original_core.0.to_joint()?)?;
    let scaled_core_tau = kendall_tau(&scaled_core.0.to_joint()?)?;
    let core_distance = original_core.0.sup_distance(&scaled_core.0)?;
    Ok(MarginSensitivity {
        original_measures: measures(j)?,
        scaled_measures: measures(&scaled)?,
        scaled,
        cross_ratios_equal,
        original_core,
        scaled_core,
        original_core_tau,
        scaled_core_tau,
        core_distance,
    })
}

fn close<T: Scalar>(x: &T, y: &T) -> bool {
    let (x, y) = (x.to_f64_lossy(), y.to_f64_lossy());
    (x - y).abs() <= 1e-9 * x.abs().max(y.abs())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{rational, Rational};
    use crate::oracle::{copula_integral_by_quadrature, tau_by_pair_enumeration};
    use ndarray::{arr2, ArrayD, IxDyn};

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

    fn p_prime() -> JointPmf<Rational> {
        joint([[q(8, 15), q(2, 15)], [q(1, 15), q(4, 15)]])
    }

    fn product(row: &[Rational], col: &[Rational]) -> JointPmf<Rational> {
        let axes = vec![(0..row.len() as i64).map(|k| q(k, 1)).collect(), (0..col.len() as i64).map(|k| q(k * k, 1)).collect()];
        let mass = ArrayD::from_shape_fn(IxDyn(&[row.len(), col.len()]), |i| row[i[0]].clone() * col[i[1]].clone());
        JointPmf::new(axes, mass).unwrap()
    }

    #[test]
    fn tau_examples() {
        assert_eq!(kendall_tau(&pa()).unwrap(), q(3, 10));
        assert_eq!(kendall_tau(&p_prime()).unwrap(), q(4, 15));
        let ind = product(&[q(1, 6), q(1, 2), q(1, 3)], &[q(1, 4), q(3, 4)]);
        assert_eq!(kendall_tau(&ind).unwrap(), q(0, 1));
        assert_eq!(tau_by_pair_enumeration(&pa()).unwrap(), kendall_tau(&pa()).unwrap());
    }

    #[test]
    fn rho_examples() {
        assert_eq!(spearman_rho_checkerboard(&pa()).unwrap(), q(9, 20));
        let ind = product(&[q(1, 6), q(1, 2), q(1, 3)], &[q(1, 4), q(3, 4)]);
        assert_eq!(spearman_rho_checkerboard(&ind).unwrap(), q(0, 1));
        let c = extend(&extract(&pa().convert::<f64>()), ExtensionKind::Checkerboard).unwrap();
        let oracle = 12.0 * copula_integral_by_quadrature(&c, 1e-10).unwrap() - 3.0;
        assert!((oracle - 0.45).abs() < 1e-8, "{oracle}");
    }

    #[test]
    fn rho_of_dense_comonotone_skeleton() {
        let n = 64;
        let axes: Vec<Vec<Rational>> = vec![(0..n).map(|k| q(k, 1)).collect(); 2];
        let mass = ArrayD::from_shape_fn(IxDyn(&[n as usize, n as usize]), |i| {
            if i[0] == i[1] { q(1, n) } else { q(0, 1) }
        });
        let j = JointPmf::new(axes, mass).unwrap();
        let rho = spearman_rho_checkerboard(&j).unwrap();
        assert!((rho.to_f64_lossy() - 1.0).abs() < 0.01);
        // M itself is recovered by the patchwork-M fill
        assert_eq!(spearman_rho(&j, ExtensionKind::Patchwork(Fill::M)).unwrap(), q(1, 1));
    }

    #[test]
    fn rho_depends_on_the_extension() {
        let r = measures(&pa()).unwrap();
        assert_ne!(r.rho, r.rho_patchwork_m);
    }

    #[test]
    fn bivariate_only() {
        let axes = vec![vec![q(0, 1), q(1, 1)]; 3];
        let j = JointPmf::new(axes, ArrayD::from_elem(IxDyn(&[2, 2, 2]), q(1, 8))).unwrap();
        assert!(matches!(kendall_tau(&j), Err(Error::Unsupported(_))));
        assert!(matches!(spearman_rho_checkerboard(&j), Err(Error::Unsupported(_))));
    }

    #[test]
    fn sensitivity_examples() {
        let w = vec![vec![q(2, 1), q(1, 1)], vec![q(1, 1), q(1, 1)]];
        let s = margin_sensitivity(&pa(), &w).unwrap();
        assert_eq!(s.scaled, p_prime());
        assert_eq!(s.tau_delta(), q(1, 30));
        assert!(s.cross_ratios_equal);
        assert!(s.core_distance < 1e-8);
        assert!((s.original_core_tau - s.scaled_core_tau).abs() < 1e-8);

        let identity = vec![vec![q(1, 1), q(1, 1)]; 2];
        let s = margin_sensitivity(&pa(), &identity).unwrap();
        assert_eq!(s.scaled, pa());
        assert_eq!(s.tau_delta(), q(0, 1));

        let ind = product(&[q(1, 6), q(1, 2), q(1, 3)], &[q(1, 4), q(3, 4)]);
        let w = vec![vec![q(1, 1), q(7, 1), q(2, 1)], vec![q(5, 1), q(1, 1)]];
        let s = margin_sensitivity(&ind, &w).unwrap();
        assert_eq!(s.original_measures.tau, q(0, 1));
        assert_eq!(s.scaled_measures.tau, q(0, 1));
    }
}
