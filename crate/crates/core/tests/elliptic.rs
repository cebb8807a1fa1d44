use rdld::elliptic::{linear_instability_count, linearization_spectrum, Census, ProfileKind, StationaryProfile};
use rdld::reaction::{bd_polynomials, chafee_infante_params, ReactionPolynomials};

fn ci(a: f64) -> ReactionPolynomials {
    bd_polynomials(&chafee_infante_params(1.0, 1.0 + 2.0 * a, None).unwrap().rates().unwrap()).unwrap()
}

#[test]
fn census_matches_linear_instability_count_and_grows_with_a() {
    let mut last = 0;
    for a in [0.5, 1.5, 2.5, 3.5, 4.5, 5.5, 8.0, 12.0] {
        let poly = ci(a);
        let census = Census::compute(&poly, 256).unwrap();
        assert_eq!(census.len(), 3 + linear_instability_count(a), "a = {a}");
        assert!(census.len() >= last);
        last = census.len();
    }
}

#[test]
fn profiles_are_bounded_away_from_the_boundary_and_canonical() {
    for a in [5.5, 12.0] {
        let poly = ci(a);
        for p in Census::compute(&poly, 256).unwrap().profiles {
            assert!(p.delta() > 0.0 && p.field.min() >= p.delta() && p.field.max() <= 1.0 - p.delta());
            assert!(p.residual(&poly) < 1e-8);
            if p.kind == ProfileKind::Nonconstant {
                let v = p.field.values();
                let (argmax, _) =
                    v.iter().enumerate().fold((0, f64::NEG_INFINITY), |b, (i, &x)| if x > b.1 { (i, x) } else { b });
                assert_eq!(argmax, 0, "maximum not at θ = 0");
            }
        }
    }
}

#[test]
fn rotations_preserve_residual_and_spectrum() {
    let poly = ci(12.0);
    let census = Census::compute(&poly, 128).unwrap();
    for p in census.profiles.iter().filter(|p| p.kind == ProfileKind::Nonconstant) {
        let base = linearization_spectrum(p, &poly, 6);
        for shift in [1, 7, 33, 64] {
            let rot = StationaryProfile { field: p.field.rotated(shift), ..p.clone() };
            assert!((rot.residual(&poly) - p.residual(&poly)).abs() < 1e-10);
            let spec = linearization_spectrum(&rot, &poly, 6);
            for (x, y) in spec.iter().zip(&base) {
                assert!((x - y).abs() < 1e-10 * (1.0 + y.abs()), "shift {shift}: {x} vs {y}");
            }
        }
    }
}

#[test]
fn stable_constants_have_negative_spectrum() {
    let poly = ci(5.5);
    let census = Census::compute(&poly, 128).unwrap();
    for i in census.stable() {
        assert!(linearization_spectrum(&census.profiles[i], &poly, 1)[0] < 0.0);
    }
    for p in census.profiles.iter().filter(|p| p.kind != ProfileKind::StableConstant) {
        assert!(linearization_spectrum(p, &poly, 1)[0] > 0.0);
    }
}

#[test]
fn nearest_family_recognizes_translates() {
    let poly = ci(5.5);
    let census = Census::compute(&poly, 128).unwrap();
    let phi = census.profiles.iter().find(|p| p.kind == ProfileKind::Nonconstant).unwrap();
    let (id, d) = census.nearest_family(&phi.field.rotated(40)).unwrap();
    assert_eq!(id, phi.family_id);
    assert!(d < 1e-12);
}
