use std::f64::consts::PI;

use proptest::prelude::*;

use exwave::cutoff::{mu, mu_deriv, C_MU};
use exwave::grid::RadialGrid;
use exwave::lifespan::{critical_exponent, fit_lifespan, gamma2, predicted_exponent, DetectorSettings, LifespanRecord, Model};
use exwave::obstacle::{build_star_map, metric_at, StarObstacle};
use exwave::testfn::{Kind, TestFunction};
use exwave::wave::Outcome;

fn arb_obstacle() -> impl Strategy<Value = StarObstacle> {
    (0.1f64..0.3, 2.0f64..4.0, prop::collection::vec(-0.02f64..0.02, 0..4), prop::collection::vec(-0.02f64..0.02, 0..4))
        .prop_map(|(delta2, scale, cos, sin)| StarObstacle {
            a0: scale * delta2,
            cos,
            sin,
            delta2,
        })
}

fn record(epsilon: f64, t: f64) -> LifespanRecord {
    LifespanRecord {
        epsilon,
        p: 2.0,
        t_num: t,
        outcome: Some(Outcome::BlewUp(t)),
        confirmation: Some(0.0),
        grid_fingerprint: String::new(),
        detector: DetectorSettings {
            threshold: 1e6,
            cfl: 0.5,
            dr: 0.05,
            confirm: true,
        },
        error: None,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn star_map_preserves_boundary_and_far_field(obs in arb_obstacle(), theta in 0.0f64..2.0 * PI, s in 2.0f64..5.0) {
        let map = build_star_map(&obs).unwrap();
        let r0 = map.boundary(theta);
        prop_assert!((map.eval(r0, theta).f - map.r3).abs() <= 4.0 * f64::EPSILON * map.r3);
        let far = s * map.r4;
        let e = map.eval(far, theta);
        prop_assert_eq!((e.f, e.f_r, e.f_theta), (far, 1.0, 0.0));
    }

    #[test]
    fn inversion_round_trips(obs in arb_obstacle(), theta in 0.0f64..2.0 * PI, u in 0.0f64..1.0) {
        let map = build_star_map(&obs).unwrap();
        let r0 = map.boundary(theta);
        let r = r0 + u * (2.5 * map.r4 - r0);
        let e = map.eval(r, theta);
        prop_assume!(e.f_r > 0.0);
        let back = map.invert(e.f, theta).unwrap();
        prop_assert!((back - r).abs() <= 1e-10 * r, "{} vs {}", back, r);
    }

    #[test]
    fn pulled_back_metric_is_spd(obs in arb_obstacle(), theta in 0.0f64..2.0 * PI, u in 0.0f64..1.0) {
        let map = build_star_map(&obs).unwrap();
        let rho = map.r3 + u * (3.0 * map.r4 - map.r3);
        let (m, trip) = metric_at(&map, rho, theta).unwrap();
        prop_assert!(m.eig_min > 0.0 && m.eig_max >= m.eig_min);
        prop_assert!(m.g11 * m.g22 - m.g12 * m.g12 > 0.0);
        prop_assert!(trip < 1e-10);
    }

    #[test]
    fn cutoff_is_monotone_and_slope_bounded(r in 0.0f64..3.0, dr in 0.0f64..0.5) {
        prop_assert!((0.0..=1.0).contains(&mu(r)));
        prop_assert!(mu(r + dr) <= mu(r));
        prop_assert!(mu_deriv(r).abs() <= C_MU + 1e-15);
    }

    #[test]
    fn planted_power_law_is_recovered(a in -3.0f64..-0.2, c in 0.5f64..20.0) {
        let records: Vec<LifespanRecord> = [0.4, 0.3, 0.2, 0.1, 0.05].iter().map(|&e| record(e, c * e.powf(a))).collect();
        let fit = fit_lifespan(&records, Model::Power).unwrap();
        prop_assert!((fit.slope - a).abs() < 1e-10);
        prop_assert!((fit.constant / c - 1.0).abs() < 1e-10);
        prop_assert!(fit.rms < 1e-12);
    }

    #[test]
    fn predicted_slopes_below_critical(p in 2.0f64..3.5) {
        let pc = critical_exponent(2).unwrap();
        prop_assume!(pc - p > 1e-6);
        let pr = predicted_exponent(p).unwrap();
        prop_assert_eq!(pr.model, Model::Power);
        prop_assert!(pr.slope < 0.0 && gamma2(p) > 0.0);
        prop_assert!((pr.slope * gamma2(p) + 2.0 * p * (p - 1.0)).abs() < 1e-9);
    }

    #[test]
    fn refinement_nests(r0 in 0.5f64..3.0, ratio in 10.0f64..500.0, density in 4.0f64..40.0, cap in 0.5f64..20.0) {
        for g in [
            RadialGrid::log_graded(r0, r0 * ratio, density).unwrap(),
            RadialGrid::log_capped(r0, r0 * ratio, density, cap).unwrap(),
            RadialGrid::uniform(r0, r0 * ratio, r0 * ratio / density).unwrap(),
        ] {
            let fine = g.refined();
            prop_assert_eq!(fine.len(), 2 * g.len() - 1);
            prop_assert!(g.nodes().iter().zip(fine.nodes().iter().step_by(2)).all(|(a, b)| a == b));
            prop_assert!(fine.nodes().windows(2).all(|w| w[1] > w[0]));
        }
    }

    #[test]
    fn cubic_hermite_is_exact_on_cubics(c in prop::collection::vec(-2.0f64..2.0, 4), r in 1.0f64..9.0) {
        let f = |x: f64| c[0] + x * (c[1] + x * (c[2] + x * c[3]));
        let df = |x: f64| c[1] + x * (2.0 * c[2] + 3.0 * x * c[3]);
        let grid = RadialGrid::uniform(1.0, 9.0, 0.7).unwrap();
        let tf = TestFunction::new(
            Kind::Phi0,
            grid.clone(),
            grid.nodes().iter().map(|&x| f(x)).collect(),
            grid.nodes().iter().map(|&x| df(x)).collect(),
            None,
            String::new(),
        )
        .unwrap();
        prop_assert!((tf.eval(r) - f(r)).abs() < 1e-10 * (1.0 + f(r).abs()));
    }
}
