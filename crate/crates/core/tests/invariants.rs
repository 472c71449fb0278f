use homoclinic::basis::{build_basis_auto, default_quadrature_nodes, euclid};
use homoclinic::problem::nonlinearity;
use homoclinic::strauss::StraussApproximant;
use proptest::prelude::*;

fn quadratic_fk(k: u64) -> StraussApproximant {
    StraussApproximant::new(nonlinearity::quadratic(), k).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn fk_has_the_sign_of_s(k in 1u64..100_000, s in -50.0f64..50.0) {
        let fk = quadratic_fk(k);
        prop_assert!(s * fk.eval(s).unwrap() >= -1e-12);
    }

    #[test]
    fn fk_is_odd(k in 1u64..100_000, s in -50.0f64..50.0) {
        let fk = quadratic_fk(k);
        let (a, b) = (fk.eval(s).unwrap(), fk.eval(-s).unwrap());
        prop_assert!((a + b).abs() <= 1e-12 * (1.0 + a.abs()));
    }

    #[test]
    fn fk_is_uniformly_close_on_the_unit_interval(k in 2u64..100_000, s in -1.0f64..1.0) {
        let fk = quadratic_fk(k);
        let kf = k as f64;
        let bound = 1.0 / kf + 1.0 / (3.0 * kf * kf);
        prop_assert!((fk.eval(s).unwrap() - s * s.abs()).abs() <= bound * (1.0 + 1e-12));
    }

    #[test]
    fn fk_is_constant_beyond_k(k in 1u64..50, s in 0.0f64..10.0) {
        let fk = quadratic_fk(k);
        let kf = k as f64;
        prop_assert_eq!(fk.eval(kf + s).unwrap(), fk.eval(kf).unwrap());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn syntheses_are_even(xi in prop::collection::vec(-1.0f64..1.0, 6), t in 0.0f64..3.0) {
        let b = build_basis_auto(3.0, 6, default_quadrature_nodes(3.0, 6)).unwrap();
        let (u, du, _) = b.synthesize_point(&xi, t);
        let (v, dv, _) = b.synthesize_point(&xi, -t);
        prop_assert!((u - v).abs() <= 1e-14);
        prop_assert!((du + dv).abs() <= 1e-14);
    }

    #[test]
    fn quadrature_norm_is_euclidean(xi in prop::collection::vec(-1.0f64..1.0, 8)) {
        let b = build_basis_auto(2.0, 8, default_quadrature_nodes(2.0, 8)).unwrap();
        prop_assert!((b.quadrature_norm(&xi) - euclid(&xi)).abs() <= 1e-9 * (1.0 + euclid(&xi)));
    }

    #[test]
    fn projection_inverts_synthesis(xi in prop::collection::vec(-1.0f64..1.0, 5)) {
        let b = build_basis_auto(2.0, 5, default_quadrature_nodes(2.0, 5)).unwrap();
        let rule = b.rule();
        let (u, du) = b.synthesize(&xi, rule.nodes());
        let back = b.project_samples(rule.nodes(), rule.weights(), &u, &du);
        let err: Vec<f64> = back.iter().zip(&xi).map(|(a, b)| a - b).collect();
        prop_assert!(euclid(&err) <= 1e-9);
    }
}
