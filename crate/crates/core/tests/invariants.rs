use ndarray::{ArrayD, IxDyn};
use num_traits::{One, Zero};
use proptest::prelude::*;
use sklar_core::extension::{extend, grid_agreement};
use sklar_core::marginfree::{DEFAULT_MAX_ITER, DEFAULT_TOL};
use sklar_core::measures::spearman_rho;
use sklar_core::subcopula::extract;
use sklar_core::{
    ipf, kendall_tau, rational, roundtrip_check, sklar_compose, spearman_rho_checkerboard, CopulaFn, ExtensionKind,
    Fill, JointPmf, Rational,
};

const KINDS: [ExtensionKind; 4] = [
    ExtensionKind::Checkerboard,
    ExtensionKind::Patchwork(Fill::M),
    ExtensionKind::Patchwork(Fill::W),
    ExtensionKind::Patchwork(Fill::Product),
];

fn q(n: i64, d: i64) -> Rational {
    rational(n, d).unwrap()
}

fn joint_from(shape: &[usize], counts: &[u32]) -> JointPmf<Rational> {
    let axes = shape.iter().map(|&n| (0..n as i64).map(|k| q(k, 1)).collect()).collect();
    let counts = ArrayD::from_shape_vec(IxDyn(shape), counts.iter().map(|&c| q(c as i64, 1)).collect()).unwrap();
    JointPmf::from_counts(axes, counts).unwrap()
}

/// Bivariate count tables with `min..=max` per cell and at least one
/// positive count.
fn bivariate(min: u32, max: u32) -> impl Strategy<Value = JointPmf<Rational>> {
    (1usize..=4, 1usize..=4)
        .prop_flat_map(move |(r, c)| (Just(vec![r, c]), prop::collection::vec(min..=max, r * c)))
        .prop_filter("empty table", |(_, counts)| counts.iter().any(|&c| c > 0))
        .prop_map(|(shape, counts)| joint_from(&shape, &counts))
}

fn trivariate() -> impl Strategy<Value = JointPmf<Rational>> {
    (1usize..=3, 1usize..=3, 1usize..=3)
        .prop_flat_map(|(a, b, c)| (Just(vec![a, b, c]), prop::collection::vec(0u32..=4, a * b * c)))
        .prop_filter("empty table", |(_, counts)| counts.iter().any(|&c| c > 0))
        .prop_map(|(shape, counts)| joint_from(&shape, &counts))
}

fn relabel(j: &JointPmf<Rational>) -> JointPmf<Rational> {
    // strictly increasing on each axis
    let axes = j
        .axes()
        .iter()
        .map(|a| a.iter().map(|x| x.clone() * x.clone() * x.clone() + q(5, 2) * x.clone() - q(7, 1)).collect())
        .collect();
    JointPmf::new(axes, j.mass().clone()).unwrap()
}

fn unit() -> impl Strategy<Value = Rational> {
    (0i64..=1024).prop_map(|k| q(k, 1024))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn roundtrip_is_exact_for_every_kind(j in bivariate(0, 5)) {
        for kind in KINDS {
            let r = roundtrip_check(&j, kind).unwrap();
            prop_assert!(r.pass, "{kind}: {:?}", r.witness);
        }
    }

    #[test]
    fn checkerboard_roundtrip_in_three_dimensions(j in trivariate()) {
        let r = roundtrip_check(&j, ExtensionKind::Checkerboard).unwrap();
        prop_assert!(r.pass, "{:?}", r.witness);
    }

    #[test]
    fn composition_preserves_margins(j in trivariate()) {
        let c = extend(&extract(&j), ExtensionKind::Checkerboard).unwrap();
        let composed = sklar_compose(c, j.marginals()).unwrap();
        prop_assert_eq!(composed.derived().unwrap().marginals(), j.marginals());
    }

    #[test]
    fn extensions_agree_with_the_skeleton(j in bivariate(0, 5)) {
        for kind in KINDS {
            let c = extend(&extract(&j), kind).unwrap();
            let r = grid_agreement(&c);
            prop_assert!(r.pass, "{kind}: {:?}", r.witness);
        }
    }

    #[test]
    fn extensions_have_uniform_margins(j in bivariate(0, 5), u in unit()) {
        for kind in KINDS {
            let c = extend(&extract(&j), kind).unwrap();
            prop_assert_eq!(c.eval(&[u.clone(), Rational::one()]), u.clone());
            prop_assert_eq!(c.eval(&[Rational::one(), u.clone()]), u.clone());
            prop_assert_eq!(c.eval(&[u.clone(), Rational::zero()]), Rational::zero());
        }
    }

    #[test]
    fn product_fill_is_the_checkerboard(j in bivariate(0, 5), u in unit(), v in unit()) {
        let h = extract(&j);
        let pi = extend(&h, ExtensionKind::Patchwork(Fill::Product)).unwrap();
        let cb = extend(&h, ExtensionKind::Checkerboard).unwrap();
        prop_assert_eq!(pi.eval(&[u.clone(), v.clone()]), cb.eval(&[u, v]));
    }

    #[test]
    fn measures_lie_in_the_unit_interval(j in bivariate(0, 5)) {
        let one = Rational::one();
        let tau = kendall_tau(&j).unwrap();
        let rho = spearman_rho_checkerboard(&j).unwrap();
        let rho_m = spearman_rho(&j, ExtensionKind::Patchwork(Fill::M)).unwrap();
        for m in [tau, rho, rho_m] {
            prop_assert!(-one.clone() <= m && m <= one, "{m}");
        }
    }

    #[test]
    fn measures_ignore_monotone_relabeling(j in bivariate(0, 5)) {
        let r = relabel(&j);
        prop_assert_eq!(kendall_tau(&r).unwrap(), kendall_tau(&j).unwrap());
        prop_assert_eq!(spearman_rho_checkerboard(&r).unwrap(), spearman_rho_checkerboard(&j).unwrap());
    }

    #[test]
    fn ipf_conserves_mass_and_is_idempotent(j in bivariate(1, 6)) {
        let (core, diag) = ipf(&j, DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap();
        prop_assert!(diag.converged);
        prop_assert!((core.mass().sum() - 1.0).abs() < 1e-12);
        let shape = core.shape().to_vec();
        for axis in 0..2 {
            let target = 1.0 / shape[axis] as f64;
            for s in core.mass().lanes(ndarray::Axis(1 - axis)) {
                // lanes along the other axis are slices of this one
                prop_assert!((s.sum() - target).abs() < 1e-9);
            }
        }
        let (again, diag) = ipf(&core.to_joint().unwrap(), DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap();
        prop_assert!(diag.iterations <= 1);
        prop_assert!(core.sup_distance(&again).unwrap() < 1e-9);
    }
}
