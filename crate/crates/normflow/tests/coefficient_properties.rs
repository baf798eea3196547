use normflow::coefficients::{
    certify_assumptions, certify_groundstate_remark, default_samples, monotone_gap, truncate, Family, TruncationParams,
};
use proptest::prelude::*;

fn vec3() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-3.0f64..3.0, 3)
}

#[test]
fn two_q_growth_constants() {
    let f = Family::two_q(3.0).unwrap();
    assert_eq!((f.c1, f.c2), (2.0 / 3.0, 1.0));
    let f = Family::two_q(1.5).unwrap();
    assert_eq!((f.c1, f.c2), (1.0, 4.0 / 3.0));
    let f = Family::two_q(2.0).unwrap();
    assert_eq!(f.b(0.3), 2.0);
}

#[test]
fn subcritical_family_passes_its_assumptions() {
    let f = Family::two_q(3.0).unwrap();
    let rep = certify_assumptions(&f, &default_samples(&f), 3, 3.0);
    assert!(rep.b0_positive.pass && rep.b1_growth.pass && rep.b2_increasing.pass);
}

#[test]
fn born_infeld_truncation_is_below_the_original() {
    for theta in [0.5, 0.25, 0.125] {
        let r = certify_groundstate_remark(&Family::born_infeld(), theta, 4.0).unwrap();
        assert!(r.direct.pass);
    }
}

#[test]
fn truncation_agrees_below_the_junction() {
    let bi = Family::born_infeld();
    let tr = truncate(&bi, TruncationParams::for_dim(0.25, 4.0, 3).unwrap()).unwrap();
    for s in [0.0, 0.1, 0.5, 0.74] {
        assert!((tr.b(s) - bi.b(s)).abs() < 1e-14);
        assert!((tr.big_b(s) - bi.big_b(s)).abs() < 1e-14);
    }
    assert!(tr.b(10.0).is_finite());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn monotone_gap_nonnegative_two_q(q in 2.0f64..5.0, x in vec3(), y in vec3()) {
        let f = Family::two_q(q).unwrap();
        prop_assert!(monotone_gap(&f, &x, &y) >= 0.0);
    }

    #[test]
    fn monotone_gap_nonnegative_truncated(x in vec3(), y in vec3()) {
        let f = truncate(&Family::born_infeld(), TruncationParams::for_dim(0.25, 4.0, 3).unwrap()).unwrap();
        prop_assert!(monotone_gap(&f, &x, &y) >= 0.0);
    }

    #[test]
    fn primitive_is_consistent(q in 1.5f64..5.0, s in 1e-3f64..10.0) {
        // B′ = b
        let f = Family::two_q(q).unwrap();
        let h = 1e-6 * s;
        let d = (f.big_b(s + h) - f.big_b(s - h)) / (2.0 * h);
        prop_assert!((d - f.b(s)).abs() < 1e-6 * f.b(s));
    }
}
