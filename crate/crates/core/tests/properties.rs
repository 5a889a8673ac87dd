use proptest::prelude::*;

use agog_core::algorithms::{agog_run, seg_run, RunOptions, SolverState};
use agog_core::harness::{check_bounds, start_point, BoundKind};
use agog_core::oracle::gap_v;
use agog_core::pair::sq_dist;
use agog_core::problems::{make_bilinear_game, make_quadratic_game, BilinearGameSpec, QuadraticGameSpec};
use agog_core::schedules::{alpha, eta_agog, ScheduleSet};
use agog_core::CallCounts;

fn game(n: usize, l: f64, mu: f64, l_h: f64, seed: u64) -> agog_core::OracleBundle {
    let mut spec = QuadraticGameSpec::from_constants(n, n, l.max(mu), mu, l.max(mu), mu, l_h, l_h / 3.0, seed);
    spec.b1 = Some((0..n).map(|i| (i as f64 - 1.5) * 0.7).collect());
    make_quadratic_game(&spec).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn iterates_never_leave_the_start_ball_and_meet_the_rate(
        n in 2usize..7, l in 1.0f64..80.0, mu in 0.1f64..1.0, l_h in 0.0f64..20.0,
        seed in 0u64..1000, radius in 0.01f64..10.0,
    ) {
        let b = game(n, l, mu, l_h, seed);
        let z0 = start_point(&b, radius, seed);
        let sched = ScheduleSet::agog_effective(b.constants()).unwrap();
        let r = agog_run(&b, &z0, 300, &sched, &RunOptions::default()).unwrap();
        let ne = check_bounds(&r, &b, BoundKind::Nonexpansive).unwrap();
        let rate = check_bounds(&r, &b, BoundKind::Rate).unwrap();
        prop_assert!(ne.passed(), "max ratio {}", ne.max_ratio);
        prop_assert!(rate.passed(), "max ratio {}", rate.max_ratio);
    }

    #[test]
    fn bilinear_runs_meet_their_bound(
        sv in prop::collection::vec(0.2f64..5.0, 2..6), seed in 0u64..1000,
    ) {
        let b = make_bilinear_game(&BilinearGameSpec {
            n: sv.len(), matrix: None, singular_values: Some(sv), u_x: None, u_y: None, seed,
        }).unwrap();
        let z0 = start_point(&b, 1.0, seed);
        let r = agog_core::algorithms::bilinear_agog_run(&b, &z0, 200, &RunOptions::default()).unwrap();
        prop_assert!(check_bounds(&r, &b, BoundKind::BilinearRate).unwrap().passed());
    }

    #[test]
    fn calls_are_single_for_agog_and_double_for_seg(k in 1u64..200, seed in 0u64..100) {
        let b = game(3, 4.0, 1.0, 1.0, seed);
        let z0 = start_point(&b, 1.0, seed);
        let sched = ScheduleSet::agog_effective(b.constants()).unwrap();
        let r = agog_run(&b, &z0, k, &sched, &RunOptions::default()).unwrap();
        prop_assert_eq!((r.calls.h, r.calls.f), (k + 1, k));
        let s = seg_run(&b, &z0, k, k, &RunOptions::default()).unwrap();
        prop_assert_eq!(s.calls.h.min(s.calls.f), 2 * k);
    }

    #[test]
    fn gap_dominates_the_strong_monotonicity_floor(
        n in 2usize..6, l in 1.0f64..50.0, mu in 0.1f64..2.0, l_h in 0.0f64..10.0,
        seed in 0u64..1000, radius in 1e-3f64..1e2,
    ) {
        let b = game(n, l, mu, l_h, seed);
        let zs = b.optimum().unwrap().clone();
        let z = start_point(&b, radius, seed + 1);
        let v = gap_v(&b, &z, &zs).unwrap();
        let floor = 0.5 * b.constants().mu() * sq_dist(&z, &zs).unwrap();
        prop_assert!(v >= floor - 1e-9, "V = {v}, floor = {floor}");
    }

    #[test]
    fn stepsizes_grow_to_the_coupling_limit(k in 0u64..100_000, l in 0.1f64..1e3, l_h in 0.1f64..1e3) {
        let a = eta_agog(k, l, l_h).unwrap();
        let b = eta_agog(k + 1, l, l_h).unwrap();
        prop_assert!(a <= b);
        prop_assert!(b < 1.0 / (l_h * (3.0 + 3f64.sqrt()).sqrt()));
        prop_assert!((0.0..=1.0).contains(&alpha(k)));
    }

    #[test]
    fn minimax_point_is_a_fixed_point(n in 2usize..6, seed in 0u64..1000) {
        let b = game(n, 8.0, 0.5, 2.0, seed);
        let zs = b.optimum().unwrap().clone();
        let sched = ScheduleSet::agog_effective(b.constants()).unwrap();
        let mut calls = CallCounts::default();
        let mut st = SolverState::new(&b, &zs, &mut calls);
        for _ in 0..20 {
            st.step(&b, &sched, true, &mut calls);
        }
        prop_assert!(sq_dist(&st.z_ag, &zs).unwrap() < 1e-24 * (1.0 + zs.norm().powi(2)));
    }
}
