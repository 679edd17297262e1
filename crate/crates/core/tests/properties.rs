//! Property-based invariants over randomly generated models.

mod common;

use epimm_core::model::{GeneratorMatrix, ModelParams, SimplexPoint};
use epimm_core::spectral;
use epimm_core::strategies;
use ndarray::Array2;
use proptest::prelude::*;

fn params_strategy() -> impl Strategy<Value = ModelParams<f64>> {
    (1usize..5)
        .prop_flat_map(|m| {
            (
                proptest::collection::vec(0.2f64..4.0, m),
                proptest::collection::vec(0.05f64..4.0, m),
            )
        })
        .prop_map(|(beta, gamma)| ModelParams::new(beta, gamma).unwrap())
}

fn simplex_strategy(m: usize) -> impl Strategy<Value = SimplexPoint<f64>> {
    proptest::collection::vec(0.05f64..1.0, m)
        .prop_map(|raw| SimplexPoint::normalized(raw).unwrap())
}

fn generator_strategy(m: usize) -> impl Strategy<Value = GeneratorMatrix<f64>> {
    proptest::collection::vec(0.05f64..5.0, m * m).prop_map(move |flat| {
        if m == 1 {
            return GeneratorMatrix::zero(1);
        }
        let off = Array2::from_shape_vec((m, m), flat).unwrap();
        GeneratorMatrix::from_off_diagonal(off).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn chi_omega_signs_agree(params in params_strategy()) {
        let chi = strategies::chi(&params);
        let omega = strategies::omega(&params).unwrap();
        if chi.abs() > 1e-12 {
            prop_assert_eq!(chi > 0.0, omega > 1.0);
        }
    }

    #[test]
    fn pi_star_sums_to_one_when_defined(params in params_strategy()) {
        if let strategies::TauOptimalPi::Interior(pi) = strategies::tau_optimal_pi(&params) {
            let sum: f64 = pi.probs().iter().sum();
            prop_assert!((sum - 1.0).abs() <= 1e-12);
            prop_assert!(pi.is_interior());
        }
    }

    #[test]
    fn row_sums_of_the_mean_generator_are_exact(
        (params, pi, q) in params_strategy().prop_flat_map(|p| {
            let m = p.m();
            (Just(p), simplex_strategy(m), generator_strategy(m))
        })
    ) {
        let a = spectral::build_a(&params, &pi, &q).unwrap();
        for i in 0..params.m() {
            let row: f64 = a.entries().row(i).iter().sum();
            let expected = params.beta()[i] * pi.probs()[i] - params.gamma()[i];
            prop_assert!((row - expected).abs() <= 1e-12);
        }
    }

    #[test]
    fn growth_rate_is_midpoint_convex_in_pi(
        (params, pi1, pi2, q) in params_strategy().prop_flat_map(|p| {
            let m = p.m();
            (Just(p), simplex_strategy(m), simplex_strategy(m), generator_strategy(m))
        })
    ) {
        let mid_raw: Vec<f64> = pi1
            .probs()
            .iter()
            .zip(pi2.probs().iter())
            .map(|(a, b)| 0.5 * (a + b))
            .collect();
        let mid = SimplexPoint::new(mid_raw).unwrap();
        let t_mid = spectral::tau(&params, &mid, &q).unwrap();
        let t1 = spectral::tau(&params, &pi1, &q).unwrap();
        let t2 = spectral::tau(&params, &pi2, &q).unwrap();
        prop_assert!(t_mid <= 0.5 * (t1 + t2) + 1e-9);
    }

    #[test]
    fn reproduction_number_is_midpoint_convex_in_pi(
        (params, pi1, pi2, q) in params_strategy().prop_flat_map(|p| {
            let m = p.m();
            (Just(p), simplex_strategy(m), simplex_strategy(m), generator_strategy(m))
        })
    ) {
        let mid_raw: Vec<f64> = pi1
            .probs()
            .iter()
            .zip(pi2.probs().iter())
            .map(|(a, b)| 0.5 * (a + b))
            .collect();
        let mid = SimplexPoint::new(mid_raw).unwrap();
        let r_mid = spectral::r0(&params, &mid, &q).unwrap();
        let r1 = spectral::r0(&params, &pi1, &q).unwrap();
        let r2 = spectral::r0(&params, &pi2, &q).unwrap();
        prop_assert!(r_mid <= 0.5 * (r1 + r2) + 1e-9);
    }

    #[test]
    fn stationary_distribution_is_fixed_by_border_controls(
        (target, r) in (2usize..5).prop_flat_map(|m| {
            (simplex_strategy(m), generator_strategy(m))
        })
    ) {
        let bc = strategies::border_controls(&r, &target).unwrap();
        let stat = epimm_core::model::stationary_distribution(&bc.modified).unwrap();
        for i in 0..target.m() {
            prop_assert!((stat.probs()[i] - target.probs()[i]).abs() <= 1e-10);
        }
    }
}
