//! Property tests for the algebraic invariants of the group operations and
//! the closed-form bounds.

use hgap_core::bounds::{f_objective, x_star};
use hgap_core::clifford::build_generators;
use hgap_core::group::{
    dilate, homogeneous_norm, inverse, multiply, vector_field, GroupElement,
};
use proptest::prelude::*;

fn arb_point(m: usize, n: usize) -> impl Strategy<Value = GroupElement<f64>> {
    (
        prop::collection::vec(-3.0f64..3.0, m),
        prop::collection::vec(-3.0f64..3.0, n),
    )
        .prop_map(|(h, c)| GroupElement::new(h, c))
}

proptest! {
    // No failure-persistence files: the suite must leave the tree clean.
    #![proptest_config(ProptestConfig {
        failure_persistence: None,
        ..ProptestConfig::default()
    })]

    #[test]
    fn multiplication_is_associative(
        x in arb_point(4, 3),
        y in arb_point(4, 3),
        z in arb_point(4, 3),
    ) {
        let s = build_generators(4, 3).unwrap();
        let left = multiply(&s, &multiply(&s, &x, &y).unwrap(), &z).unwrap();
        let right = multiply(&s, &x, &multiply(&s, &y, &z).unwrap()).unwrap();
        for (a, b) in left.to_flat().iter().zip(right.to_flat()) {
            prop_assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn inverse_cancels(x in arb_point(2, 1)) {
        let s = build_generators(2, 1).unwrap();
        let e = multiply(&s, &x, &inverse(&s, &x).unwrap()).unwrap();
        for v in e.to_flat() {
            prop_assert!(v.abs() < 1e-12);
        }
    }

    #[test]
    fn norm_is_homogeneous_under_dilations(x in arb_point(2, 1), a in 0.01f64..20.0) {
        let scaled = dilate(&x, a).unwrap();
        let lhs = homogeneous_norm(&scaled);
        let rhs = a * homogeneous_norm(&x);
        prop_assert!((lhs - rhs).abs() <= 1e-12 * rhs.max(1.0));
    }

    #[test]
    fn norm_is_symmetric_and_dominates_horizontal(x in arb_point(4, 3)) {
        let s = build_generators(4, 3).unwrap();
        let n = homogeneous_norm(&x);
        prop_assert_eq!(n, homogeneous_norm(&inverse(&s, &x).unwrap()));
        let b: f64 = x.horizontal.iter().map(|v| v * v).sum::<f64>().sqrt();
        prop_assert!(n >= b - 1e-14 * b.max(1.0));
    }

    #[test]
    fn frame_coefficients_are_half_the_twist(x in arb_point(2, 1), j in 0usize..2) {
        let s = build_generators(2, 1).unwrap();
        let v = vector_field(&s, j, &x).unwrap();
        // Heisenberg: central coefficient of X_1 is -y/2, of X_2 is +x/2.
        let want = match j {
            0 => -x.horizontal[1] / 2.0,
            _ => x.horizontal[0] / 2.0,
        };
        prop_assert!((v[2] - want).abs() < 1e-15);
    }

    #[test]
    fn objective_dominates_lower_bound(
        lambda_m in 0.1f64..100.0,
        c in 0.001f64..0.999,
        x in 0.001f64..0.999,
    ) {
        let lambda_n = c * lambda_m;
        let f = f_objective(lambda_m, lambda_n, x).unwrap();
        prop_assert!(f > lambda_m);
    }

    #[test]
    fn minimizer_is_interior_and_stationary(
        lambda_m in 0.1f64..100.0,
        c in 0.001f64..0.999,
    ) {
        let lambda_n = c * lambda_m;
        let xs = x_star(lambda_m, lambda_n).unwrap();
        prop_assert!(xs > 0.0 && xs < 1.0);
        let h = 1e-7;
        let fp = f_objective(lambda_m, lambda_n, xs + h).unwrap();
        let fm = f_objective(lambda_m, lambda_n, xs - h).unwrap();
        let fx = f_objective(lambda_m, lambda_n, xs).unwrap();
        prop_assert!(((fp - fm) / (2.0 * h)).abs() < 1e-5 * fx);
    }
}
