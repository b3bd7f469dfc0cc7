use carl_core::fpmodes::{
    derivative, integrate, linearized_matrix, periodic_grid, reconstruct_density, FourierState, FpSettings,
};
use carl_core::Complex64;
use proptest::prelude::*;

fn seeded_state(n_max: usize, b1: Complex64, b2: Complex64, a: Complex64) -> FourierState {
    let mut s = FourierState::new(n_max, a).unwrap();
    s.modes[1] = b1;
    s.modes[2] = b2;
    s
}

fn max_diff(x: &FourierState, y: &FourierState) -> f64 {
    x.modes
        .iter()
        .zip(&y.modes)
        .map(|(p, q)| (p - q).norm())
        .fold((x.field - y.field).norm(), f64::max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn translation_commutes_with_evolution(
        theta0 in -6.0f64..6.0,
        b1r in -0.3f64..0.3, b1i in -0.3f64..0.3,
        ar in -0.5f64..0.5, ai in -0.5f64..0.5,
    ) {
        let (kappa, d) = (0.075, 1.49);
        let start = seeded_state(16, Complex64::new(b1r, b1i), Complex64::new(0.05, -0.02), Complex64::new(ar, ai));
        let settings = FpSettings::new(0.004, 5.0, 50);
        let moved = integrate(start.translated(theta0), kappa, d, &settings).unwrap();
        let plain = integrate(start, kappa, d, &settings).unwrap();
        prop_assert!(max_diff(&moved.final_state, &plain.final_state.translated(theta0)) < 1e-12);
        // Observables that do not depend on the origin agree sample by sample.
        for (p, q) in moved.trajectory.samples.iter().zip(&plain.trajectory.samples) {
            prop_assert!((p.bunching - q.bunching).abs() < 1e-12);
            prop_assert!((p.abs_a_sq - q.abs_a_sq).abs() < 1e-12);
        }
    }

    #[test]
    fn density_stays_normalised(ar in 0.01f64..1.0, tau in 1.0f64..30.0) {
        let start = FourierState::new(32, Complex64::new(ar, 0.0)).unwrap();
        let settings = FpSettings::new(0.001, tau, 1000).clamped(32, 1.49);
        let run = integrate(start, 0.075, 1.49, &settings).unwrap();
        let grid = periodic_grid(256);
        let profile = reconstruct_density(&run.final_state, &grid);
        prop_assert!((profile.periodic_integral() - 1.0).abs() < 1e-10);
        prop_assert_eq!(run.final_state.modes[0], Complex64::new(1.0, 0.0));
    }
}

#[test]
fn linearisation_is_accurate_to_second_order() {
    let (kappa, d) = (0.075, 1.49);
    let lin = linearized_matrix(kappa, d);
    let mut previous: Option<f64> = None;
    for eps in [1e-3, 1e-4, 1e-5] {
        let b1 = Complex64::new(0.7, -0.4) * eps;
        let a = Complex64::new(-0.2, 0.9) * eps;
        let b2 = Complex64::new(0.3, 0.1) * eps * eps;
        let state = seeded_state(8, b1, b2, a);
        let f = derivative(&state, kappa, d);
        let lin_b1 = lin[0][0] * b1 + lin[0][1] * a;
        let lin_a = lin[1][0] * b1 + lin[1][1] * a;
        let err = (f.modes[1] - lin_b1).norm().max((f.field - lin_a).norm());
        assert!(err <= 2.0 * eps * eps, "eps {eps}: {err}");
        if let Some(p) = previous {
            // Halving the amplitude by ten cuts the error by about a hundred.
            assert!(err < p / 50.0, "{err} vs {p}");
        }
        previous = Some(err);
    }
}
