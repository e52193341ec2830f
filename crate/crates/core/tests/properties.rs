use approx::assert_relative_eq;
use cyclonet_core::analysis::{
    oscillation_condition, phase_crossing_frequency, required_connectivity, solve_equilibrium, sync_condition,
    z0_max_gain,
};
use cyclonet_core::config::RunConfig;
use cyclonet_core::fmt::format_sig;
use cyclonet_core::harmonic::{describing_functions, estimate_period};
use cyclonet_core::model::{hill, hill_derivative};
use cyclonet_core::poly;
use cyclonet_core::topology::{generate_topology, Topology};
use cyclonet_core::{build_laplacian, NetworkModel, OscillatorParams};
use proptest::prelude::*;

fn random_coupling(n: usize, seed: u64) -> cyclonet_core::CouplingLaplacian {
    build_laplacian(&generate_topology(&Topology::Random { low: 0.0, high: 20.0 }, n, seed).unwrap()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn laplacian_structure(n in 1usize..16, seed in any::<u64>(), scale in 0.01f64..100.0) {
        let c = random_coupling(n, seed);
        let l = c.laplacian();
        let tol = 1e-9 * (1.0 + l.frobenius_norm());
        for i in 0..n {
            prop_assert!(l.row(i).iter().sum::<f64>().abs() < tol);
        }
        let ev = c.eigenvalues();
        prop_assert!(ev[0].abs() < tol);
        prop_assert!(ev.iter().all(|&e| e > -tol));
        prop_assert!((ev.iter().sum::<f64>() - l.trace()).abs() < tol);
        let s = c.scaled(scale).unwrap();
        for (a, b) in ev.iter().zip(s.eigenvalues()) {
            prop_assert!((a * scale - b).abs() < 1e-9 * (1.0 + b.abs()));
        }
    }

    #[test]
    fn crossing_scales_with_rates(m in 3usize..12, c in 0.1f64..10.0, seed in any::<u64>()) {
        let b: Vec<f64> = (0..m).map(|i| 0.3 + ((seed >> (i % 60)) & 7) as f64 * 0.1).collect();
        let scaled: Vec<f64> = b.iter().map(|x| x * c).collect();
        let w = phase_crossing_frequency(&b, None).unwrap();
        prop_assert!((phase_crossing_frequency(&scaled, None).unwrap() - c * w).abs() < 1e-10 * c * w);
    }

    #[test]
    fn balance_frequency_ignores_coupling(b in 0.3f64..1.0, n in 2usize..10, seed in any::<u64>(), k in 2usize..9) {
        let osc = OscillatorParams::uniform(9, b, 3.0).unwrap();
        let net = NetworkModel::new(osc.clone(), random_coupling(n, seed), k).unwrap();
        let est = estimate_period(&net).unwrap();
        let alone = phase_crossing_frequency(osc.b(), None).unwrap();
        prop_assert_eq!(est.mu.to_bits(), alone.to_bits());
    }

    #[test]
    fn oscillation_index_decreases_with_b(m in 3usize..12, p in 1.0f64..8.0, b in 0.1f64..2.0, db in 1e-3f64..0.5) {
        let r1 = oscillation_condition(&OscillatorParams::uniform(m, b, p).unwrap()).unwrap().r;
        let r2 = oscillation_condition(&OscillatorParams::uniform(m, b + db, p).unwrap()).unwrap().r;
        prop_assert!(r2 < r1, "{} !< {}", r2, r1);
    }

    // z0 dips from 1 to about 0.6085 on (1, 1.543) before rising
    #[test]
    fn z0_increases_with_p(p in 1.55f64..20.0, dp in 1e-3f64..2.0) {
        prop_assert!(z0_max_gain(p + dp).unwrap() > z0_max_gain(p).unwrap());
    }

    #[test]
    fn required_connectivity_is_the_boundary(b in 0.45f64..0.9, p in 2.0f64..5.0, n in 2usize..12, seed in any::<u64>()) {
        let osc = OscillatorParams::uniform(9, b, p).unwrap();
        let req = required_connectivity(&osc, n, 2).unwrap();
        let c = random_coupling(n, seed);
        prop_assume!(c.is_connected());
        let v2 = c.algebraic_connectivity().unwrap();
        let above = NetworkModel::new(osc.clone(), c.scaled((req * 1.0001 + 1e-9) / v2).unwrap(), 2).unwrap();
        prop_assert!(sync_condition(&above).unwrap().necessary_condition_satisfied);
        if req > 1e-6 {
            let below = NetworkModel::new(osc, c.scaled(req * 0.999 / v2).unwrap(), 2).unwrap();
            prop_assert!(!sync_condition(&below).unwrap().necessary_condition_satisfied);
        }
    }

    #[test]
    fn equilibrium_is_a_root(p in 1.0f64..12.0, bb in 1e-5f64..100.0) {
        let eq = solve_equilibrium(p, bb).unwrap();
        prop_assert!((hill(eq.x0, p) - bb * eq.x0).abs() < 1e-12 * (1.0 + hill(eq.x0, p)));
    }

    #[test]
    fn hill_derivative_matches_difference(x in 0.01f64..10.0, p in 1.0f64..8.0) {
        let h = 1e-6 * x;
        let fd = (hill(x + h, p) - hill(x - h, p)) / (2.0 * h);
        prop_assert!((hill_derivative(x, p) - fd).abs() < 1e-6 * (1.0 + fd.abs()));
    }

    #[test]
    fn describing_gain_signs(p in 1.0f64..6.0, alpha in 0.1f64..5.0, frac in 0.01f64..0.99) {
        let g = describing_functions(p, alpha, frac * alpha).unwrap();
        prop_assert!(g.xi > 0.0 && g.xi < 1.0 / alpha);
        prop_assert!(g.eta < 0.0);
    }

    #[test]
    fn roots_have_small_residuals(coeffs in prop::collection::vec(-5.0f64..5.0, 2..14)) {
        prop_assume!(coeffs.last().unwrap().abs() > 1e-3);
        let roots = poly::roots(&coeffs);
        prop_assert_eq!(roots.len(), coeffs.len() - 1);
        for r in roots {
            prop_assert!(poly::relative_residual(&coeffs, r) < 1e-10, "{}", r);
        }
    }

    #[test]
    fn formatted_numbers_round_trip(v in prop::num::f64::NORMAL, digits in 1usize..12) {
        let text = format_sig(v, digits);
        let back: f64 = text.parse().unwrap();
        prop_assert!((back - v).abs() <= 0.5001 * 10f64.powi(1 - digits as i32) * v.abs(), "{} -> {}", v, text);
    }

    #[test]
    fn config_round_trips(b in 0.1f64..2.0, p in 1.0f64..6.0, n in 1usize..20, seed in any::<u64>(), scale in 0.1f64..10.0) {
        let mut cfg = RunConfig::example();
        cfg.model = cyclonet_core::config::ModelSection::Dimensionless {
            m: Some(9),
            b: cyclonet_core::config::PerSpecies::Uniform(b),
            p,
        };
        cfg.network.n = n;
        cfg.network.seed = seed;
        cfg.network.weight_scale = scale;
        let back = RunConfig::from_json_str(&cfg.to_json()).unwrap();
        prop_assert_eq!(back, cfg);
    }
}

#[test]
fn z0_minimum_near_p_one_and_a_half() {
    let z = |p: f64| z0_max_gain(p).unwrap();
    assert!(z(1.01) < z(1.0));
    assert!(z(1.5) < z(1.2));
    assert!(z(1.6) > z(1.55));
}

#[test]
fn required_connectivity_tracks_reference_values() {
    let reference = [127.98, 59.45, 29.36, 15.19, 8.11, 4.37, 2.30, 1.09];
    for (i, r) in reference.iter().enumerate() {
        let b = 0.5 + 0.05 * i as f64;
        let v = required_connectivity(&OscillatorParams::uniform(9, b, 3.0).unwrap(), 9, 2).unwrap();
        assert_relative_eq!(v, *r, max_relative = 0.01);
    }
}
