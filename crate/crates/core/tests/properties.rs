//! Randomized invariants across modules.

use boltzmann_green::inversion::{energy_density_integrand, once_collided_term, uncollided_term, QuadratureSpec};
use boltzmann_green::mc_oracle::{decompose_collision_orders, simulate, McConfig, Source};
use boltzmann_green::special::{assoc_legendre_p_real, spherical_harmonic, wigner_d};
use boltzmann_green::{Direction, Error, PhaseFunction};
use proptest::prelude::*;
use std::f64::consts::PI;

fn direction() -> impl Strategy<Value = Direction> {
    (-1.0f64..1.0, 0.0f64..2.0 * PI).prop_map(|(mu, phi)| Direction::new(mu.acos(), phi).unwrap())
}

fn phase() -> impl Strategy<Value = PhaseFunction> {
    (0usize..=4, 0.02f64..0.98, proptest::collection::vec(-0.9f64..0.9, 4)).prop_map(|(big_l, c, frac)| {
        let mut beta = vec![1.0];
        beta.extend((1..=big_l).map(|l| frac[l - 1] * (2 * l + 1) as f64));
        PhaseFunction::new(c, beta).unwrap()
    })
}

/// Linear phase functions `(1 + beta_1 mu)/2` with `|beta_1| <= 1`, which stay nonnegative.
fn physical_phase() -> impl Strategy<Value = PhaseFunction> {
    (0.05f64..0.95, -1.0f64..1.0).prop_map(|(c, b1)| PhaseFunction::new(c, vec![1.0, b1]).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn direction_round_trips(d in direction()) {
        let v = d.to_vector();
        prop_assert!(((v[0] * v[0] + v[1] * v[1] + v[2] * v[2]) - 1.0).abs() < 1e-15);
        let back = Direction::from_vector(v).unwrap();
        prop_assert!((back.dot(&d) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn harmonic_addition_theorem(a in direction(), b in direction(), l in 0usize..12) {
        let mut s = 0.0;
        for m in -(l as i32)..=(l as i32) {
            s += (spherical_harmonic(l, m, &a) * spherical_harmonic(l, m, &b).conj()).re;
        }
        let p = assoc_legendre_p_real(l, 0, a.dot(&b)).unwrap()[l];
        prop_assert!((s - (2 * l + 1) as f64 / (4.0 * PI) * p).abs() < 1e-12 * (2 * l + 1) as f64);
    }

    #[test]
    fn wigner_rows_are_orthonormal(l in 0usize..30, beta in 0.0f64..PI) {
        let d = wigner_d(l, beta);
        let n = 2 * l + 1;
        for i in 0..n {
            for j in 0..n {
                let s: f64 = (0..n).map(|k| d[i][k] * d[j][k]).sum();
                let want = if i == j { 1.0 } else { 0.0 };
                prop_assert!((s - want).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn energy_integrand_is_real(p in phase(), logk in -3.0f64..3.0) {
        let v = energy_density_integrand(10f64.powf(logk), &p);
        prop_assert!(v.is_ok(), "{:?}", v);
    }

    #[test]
    fn singular_weights_are_physical(p in phase(), r in proptest::array::uniform3(-3.0f64..3.0), w in direction(), w0 in direction()) {
        let norm = (r[0] * r[0] + r[1] * r[1] + r[2] * r[2]).sqrt();
        prop_assume!(norm > 1e-3);
        let u = uncollided_term(norm, &w, &w0).unwrap();
        prop_assert!((u.weight - (-norm).exp() / (norm * norm)).abs() < 1e-15 * u.weight);
        match once_collided_term(r, &w, &w0, &p) {
            Ok(t) => prop_assert!(t.weight.is_finite()),
            Err(e) => prop_assert!(matches!(e, Error::CoplanarDegenerate(_))),
        }
    }

    #[test]
    fn quadrature_spec_json_round_trip(k_max in 1.0f64..500.0, n_k in 2usize..2000, lmax in 0usize..60) {
        let q = QuadratureSpec { k_max, n_k, lmax, ..QuadratureSpec::default() };
        let back: QuadratureSpec = serde_json::from_str(&serde_json::to_string(&q).unwrap()).unwrap();
        prop_assert_eq!(back, q);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn monte_carlo_bookkeeping(p in physical_phase(), seed in any::<u64>(), histories in 1u64..400, beam in direction()) {
        let config = McConfig { histories, seed, shells: vec![0.3, 1.0, 2.5], source: Source::Beam(beam), max_scatter_order: None };
        let est = simulate(&p, &config).unwrap();
        let d = decompose_collision_orders(&est);
        for i in 0..est.density.len() {
            prop_assert!(est.std_error[i] >= 0.0);
            let sum = d.uncollided[i] + d.once[i] + d.multiple[i];
            prop_assert!((sum - est.density[i]).abs() <= 1e-12 * est.density[i].abs());
        }
        prop_assert_eq!(simulate(&p, &config).unwrap(), est);
    }
}
