use std::collections::BTreeMap;

use proptest::prelude::*;
use spherimax::eta::{check_condition, compute_eta, continuity_probe};
use spherimax::functionals::{gradient_check, radial_profile, zoo_get, FunctionalSpec};
use spherimax::solvers::{max_on_ball, max_on_sphere, min_shifted};
use spherimax::space::{project_to_sphere, ExtendedReal, Point, ProblemInstance, Tolerances};

fn spec(name: &str, kv: &[(&str, f64)], n: usize) -> FunctionalSpec {
    let params: BTreeMap<String, f64> = kv.iter().map(|(k, v)| (k.to_string(), *v)).collect();
    zoo_get(name, &params, n).unwrap()
}

fn inst(name: &str, kv: &[(&str, f64)], n: usize, tol: Tolerances) -> ProblemInstance {
    ProblemInstance::new(spec(name, kv, n), 1.0, tol).unwrap()
}

fn coords(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-2.0..2.0f64, n)
}

/// A rotation of the plane applied to the first two coordinates.
fn rotate(x: &[f64], angle: f64) -> Vec<f64> {
    let (s, c) = angle.sin_cos();
    let mut y = x.to_vec();
    y[0] = c * x[0] - s * x[1];
    y[1] = s * x[0] + c * x[1];
    y
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn sphere_projection_is_idempotent_and_exact(x in coords(3), r in 0.01..4.0f64) {
        prop_assume!(x.iter().map(|v| v * v).sum::<f64>() > 1e-6);
        let p = Point::new(x).unwrap();
        let q = project_to_sphere(&p, r).unwrap();
        prop_assert!((q.norm_sq() - r).abs() <= 1e-12 * (1.0 + r));
        let q2 = project_to_sphere(&q, r).unwrap();
        prop_assert!(q.dist(&q2) <= 1e-12);
    }

    #[test]
    fn norm_is_absolutely_homogeneous(x in coords(3), t in -5.0..5.0f64) {
        let p = Point::new(x).unwrap();
        let scaled = p.scaled(t).unwrap();
        prop_assert!((scaled.norm() - t.abs() * p.norm()).abs() <= 1e-12 * (1.0 + p.norm() * t.abs()));
    }

    #[test]
    fn extended_real_order_is_total(a in -1e6..1e6f64, b in -1e6..1e6f64) {
        let (x, y) = (ExtendedReal::Finite(a), ExtendedReal::Finite(b));
        prop_assert_eq!(x < y, a < b);
        prop_assert!(x < ExtendedReal::PositiveInfinity);
        prop_assert!(ExtendedReal::PositiveInfinity.exceeds(a));
        prop_assert_eq!(x.exceeds(b), b < a);
    }

    #[test]
    fn radial_entries_are_rotation_invariant(x in coords(2), angle in 0.0..6.3f64, q in 0.2..1.9f64) {
        for f in [spec("NORM_POWER", &[("q", q)], 2), spec("QUADRATIC", &[], 2), spec("TWO_BUMP", &[], 2)] {
            let a = f.value(&x);
            let b = f.value(&rotate(&x, angle));
            prop_assert!((a - b).abs() <= 1e-12 * (1.0 + a.abs()), "{}: {a} vs {b}", f.name());
            let t = x.iter().map(|v| v * v).sum::<f64>();
            prop_assert!((radial_profile(&f, t).unwrap() - a).abs() <= 1e-12 * (1.0 + a.abs()));
        }
    }

    #[test]
    fn gradients_match_finite_differences(x in coords(2)) {
        let p = Point::new(x.clone()).unwrap();
        let ns = p.norm_sq();
        // stay away from the kinks of the non-smooth entries
        prop_assume!(ns > 1e-2 && x[0].abs() > 1e-2);
        let entries = [
            spec("NORM_POWER", &[("q", 1.0)], 2),
            spec("NORM_POWER", &[("q", 1.5)], 2),
            spec("QUADRATIC", &[("c", 2.0)], 2),
            spec("ZERO", &[], 2),
            spec("COORD_POWER", &[], 2),
            spec("NORM_PLUS_LINEAR", &[], 2),
        ];
        for f in entries {
            let err = gradient_check(&f, &p, 1e-6).unwrap();
            prop_assert!(err <= 1e-5, "{}: relative error {err:e} at {x:?}", f.name());
        }
    }

    #[test]
    fn two_bump_gradient_away_from_support_edges(t in 0.05..1.5f64, angle in 0.0..6.3f64) {
        let edges = [0.1, 0.3, 0.5, 0.9];
        prop_assume!(edges.iter().all(|e| (t - e).abs() > 1e-2));
        let f = spec("TWO_BUMP", &[], 2);
        let p = Point::new(rotate(&[t.sqrt(), 0.0], angle)).unwrap();
        let err = gradient_check(&f, &p, 1e-7).unwrap();
        prop_assert!(err <= 1e-4, "relative error {err:e} at t = {t}");
    }

    #[test]
    fn norm_power_blows_up_relative_to_squared_norm(q in 0.2..1.95f64, k in 1..6i32) {
        let f = spec("NORM_POWER", &[("q", q)], 2);
        let small = 10f64.powi(-2 * k);
        let big = 10f64.powi(-2 * (k - 1));
        let ratio = |t: f64| radial_profile(&f, t).unwrap() / t;
        prop_assert!(ratio(small) > ratio(big));
    }
}

#[test]
fn every_entry_vanishes_at_the_origin() {
    for n in 1..=3 {
        for name in spherimax::functionals::ZOO_NAMES {
            let f = spec(name, &[], n);
            assert_eq!(f.value(&vec![0.0; n]), 0.0, "{name}, n = {n}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn more_restarts_never_lower_the_sphere_maximum(r in 0.05..1.0f64, seed in 0u64..1000) {
        let few = Tolerances { restarts: 8, ..Tolerances::default() };
        let many = Tolerances { restarts: 48, ..Tolerances::default() };
        let a = max_on_sphere(&inst("NORM_PLUS_LINEAR", &[], 3, few).with_seed(seed), r).unwrap();
        let b = max_on_sphere(&inst("NORM_PLUS_LINEAR", &[], 3, many).with_seed(seed), r).unwrap();
        prop_assert!(b.value >= a.value - 1e-9);
    }

    #[test]
    fn radial_sphere_maximum_equals_profile(r in 0.05..1.0f64, q in 0.3..1.9f64) {
        let p = inst("NORM_POWER", &[("q", q)], 3, Tolerances::default());
        let m = max_on_sphere(&p, r).unwrap();
        let want = radial_profile(&p.functional, r).unwrap();
        prop_assert!((m.value - want).abs() <= 1e-12 * (1.0 + want));
    }

    #[test]
    fn ball_maximum_dominates_every_sphere(r in 0.05..1.0f64) {
        for name in ["COORD_POWER", "NORM_PLUS_LINEAR", "TWO_BUMP"] {
            let p = inst(name, &[], 2, Tolerances::default());
            let ball = max_on_ball(&p).unwrap().value;
            let sphere = max_on_sphere(&p, r).unwrap().value;
            prop_assert!(ball >= sphere - 1e-9, "{name}: ball {ball} < sphere {sphere}");
        }
    }

    #[test]
    fn shifted_minimum_at_zero_multiplier_is_the_origin(seed in 0u64..1000) {
        for name in ["COORD_POWER", "NORM_PLUS_LINEAR", "TWO_BUMP"] {
            let p = inst(name, &[], 2, Tolerances::default()).with_seed(seed);
            let m = min_shifted(&p, 0.0).unwrap();
            prop_assert!(m.point.norm() <= 1e-6 && m.value.abs() <= 1e-12, "{name}: {m:?}");
        }
    }

    #[test]
    fn eta_is_bounded_below_by_the_origin_ratio(r in 1.2..6.0f64) {
        // y = 0 is admissible, so eta(r) >= rho/r
        let p = inst("COORD_POWER", &[], 2, Tolerances::default());
        let c = check_condition(&p).unwrap();
        let s = compute_eta(&p, &c, r).unwrap();
        prop_assert!(s.eta >= 1.0 / r - 1e-12);
        prop_assert!(s.trace.windows(2).all(|w| w[1].t >= w[0].t - 1e-12));
    }
}

#[test]
fn sampling_is_reproducible_for_a_fixed_seed() {
    let p = inst("TWO_BUMP", &[], 2, Tolerances::default()).with_seed(42);
    let c = check_condition(&p).unwrap();
    let a = compute_eta(&p, &c, 1.5).unwrap();
    let b = compute_eta(&p, &c, 1.5).unwrap();
    assert_eq!(a, b);
}

#[test]
fn argmax_moves_continuously_on_singleton_levels() {
    // Away from beta the representative is Lipschitz in r: halving the step
    // halves the largest displacement up to a first-order term in the step.
    let p = inst("NORM_PLUS_LINEAR", &[], 2, Tolerances::default());
    let c = check_condition(&p).unwrap();
    let coarse = continuity_probe(&p, &c, 1.5, 3.0, 16).unwrap();
    let fine = continuity_probe(&p, &c, 1.5, 3.0, 32).unwrap();
    assert!(coarse.ratio() <= 0.575, "{coarse:?}");
    assert!(fine.ratio() <= coarse.ratio(), "{fine:?} vs {coarse:?}");
    assert!(fine.fine < coarse.fine);
}
