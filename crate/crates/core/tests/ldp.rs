use std::f64::consts::PI;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rdld::ldp::{
    energy_e, energy_qt, j_functional, pointwise_maximizer, pointwise_maximizer_bd, pointwise_objective, rate_i,
    solve_h, NewtonOptions, TestField,
};
use rdld::pde::{hydro_solve, DensityField, DensityPath, HydroOptions};
use rdld::reaction::{bd_polynomials, chafee_infante_params, ReactionPolynomials};

fn ci() -> ReactionPolynomials {
    bd_polynomials(&chafee_infante_params(1.0, 2.0, None).unwrap().rates().unwrap()).unwrap()
}

fn wavy(amp: f64, speed: f64, drift: f64) -> DensityPath {
    DensityPath::from_fn(0.5, 40, 16, |t, th| 0.5 + drift * t + amp * (2.0 * PI * th + speed * t).cos()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn j_never_exceeds_i(
        amp in 0.0f64..0.3,
        speed in -4.0f64..4.0,
        drift in -0.3f64..0.3,
        g_amp in 0.0f64..3.0,
        k in 0usize..4,
        om in -5.0f64..5.0,
    ) {
        let poly = ci();
        let path = wavy(amp, speed, drift);
        let i = rate_i(&path, &poly).unwrap().value;
        prop_assert!(i >= 0.0);
        let g = TestField::from_fn(&path, |t, th| g_amp * (2.0 * PI * k as f64 * th + om * t).sin());
        let j = j_functional(&path, &g, &poly).unwrap();
        prop_assert!(j <= i + 1e-6, "J = {} > I = {}", j, i);
    }

    #[test]
    fn maximizer_beats_random_fields(w in -5.0f64..5.0, rho in 0.01f64..0.99) {
        let poly = ci();
        let g = pointwise_maximizer(w, rho, &poly);
        let (b, d) = (poly.b(rho), poly.d(rho));
        let best = pointwise_objective(w, b, d, g);
        let mut r = ChaCha8Rng::seed_from_u64(w.to_bits() ^ rho.to_bits());
        for _ in 0..1000 {
            let h = g + r.gen_range(-3.0..3.0);
            prop_assert!(pointwise_objective(w, b, d, h) <= best + 1e-12);
        }
    }

    #[test]
    fn maximizer_is_odd_when_rates_balance(w in -5.0f64..5.0, b in 0.01f64..10.0) {
        prop_assert!((pointwise_maximizer_bd(-w, b, b) + pointwise_maximizer_bd(w, b, b)).abs() < 1e-12);
    }
}

#[test]
fn maximizer_vanishes_on_the_reaction_term() {
    let poly = ci();
    for rho in [0.1, 0.4, 0.5, 0.77] {
        assert!(pointwise_maximizer(poly.f(rho), rho, &poly).abs() < 1e-12);
    }
}

#[test]
fn hydro_path_has_zero_field() {
    let poly = ci();
    let gamma = DensityField::from_fn(32, |t| 0.5 + 0.3 * (2.0 * PI * t).sin()).unwrap();
    let path = hydro_solve(&gamma, 0.2, &poly, &HydroOptions { save_every: 5, ..HydroOptions::with_dt(1e-4) }).unwrap();
    let h = solve_h(&path, &poly, &NewtonOptions::default()).unwrap();
    assert!(h.h.sup_norm() < 5e-3, "{}", h.h.sup_norm());
    assert!(h.max_residual < 1e-10);
}

#[test]
fn energies_of_a_single_mode() {
    let eps = 0.1;
    let path = DensityPath::from_fn(2.0, 10, 64, |_, th| 0.5 + eps * (2.0 * PI * th).cos()).unwrap();
    let q = energy_qt(&path);
    let exact = 2.0 * eps * eps * (2.0 * PI).powi(2) / 2.0;
    assert!((q - exact).abs() / exact < 1e-2, "{q} vs {exact}");
    assert!(energy_e(&path) >= q * 4.0 * 0.99, "dividing by χ ≤ 1/4 at least quadruples the energy");
    let flat = DensityPath::from_fn(1.0, 10, 16, |t, _| 0.3 + 0.2 * t).unwrap();
    assert_eq!(energy_qt(&flat), 0.0);
}

#[test]
fn cost_is_positive_off_the_flow_and_grows_with_speed() {
    let poly = ci();
    let slow = rate_i(&wavy(0.2, 1.0, 0.0), &poly).unwrap().value;
    let fast = rate_i(&wavy(0.2, 4.0, 0.0), &poly).unwrap().value;
    assert!(slow > 0.0 && fast > slow, "{slow} {fast}");
}
