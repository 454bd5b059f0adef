use orbit_offload::baselines::{hroa_process, CctRouter, IslTopology, LinkBudget};
use orbit_offload::checks::{check_budget, check_link_capacity};
use orbit_offload::geo::{great_circle_km, LatLon};
use orbit_offload::harness::instances::{random_instance, InstanceShape};
use orbit_offload::model::validate_assignment;
use orbit_offload::oracle::{exact_solve, OracleLimits};
use orbit_offload::orbit::build_snapshot;
use orbit_offload::orchestrator::ranking;
use orbit_offload::sites::builtin_sites;
use orbit_offload::utility::{
    delta_sustainability, interval_utility, normalized_fee, normalized_volume,
};
use orbit_offload::{
    ao2, ao2_parallel, Assignment, BatteryState, ConstellationConfig, ContactParams, GroundSiteId,
    IntervalIndex, SatelliteId, Task, TaskId,
};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn feasible(state: &orbit_offload::IntervalState, a: &Assignment) -> bool {
    validate_assignment(a, &state.snapshot, &state.tasks).is_empty()
        && check_link_capacity(a, &state.tasks, &state.snapshot).is_empty()
        && check_budget(
            a,
            &state.tasks,
            &state.sites,
            &state.prices,
            state.ledger.budget_per_interval,
        )
        .is_ok()
}

fn latlon() -> impl Strategy<Value = LatLon> {
    (-90.0f64..=90.0, -180.0f64..180.0).prop_map(|(a, b)| LatLon::new(a, b))
}

fn task(megabits: f64) -> Task {
    Task {
        id: TaskId(0),
        source: SatelliteId(0),
        destination: GroundSiteId(0),
        cycles: megabits * 737.5e6,
        volume_bits: megabits * 1e6,
        created_at: 0,
        priority: 0,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn ao2_assignments_are_feasible_and_deterministic(seed in any::<u64>()) {
        let base = random_instance(&mut ChaCha8Rng::seed_from_u64(seed), InstanceShape::MEDIUM);
        let (mut s1, mut s2) = (base.clone(), base.clone());
        let a1 = ao2(&mut s1);
        prop_assert!(feasible(&base, &a1));
        prop_assert_eq!(&a1, &ao2(&mut s2));
        prop_assert!(s1.ledger.spent() <= base.ledger.budget_per_interval);
    }

    #[test]
    fn parallel_pipelines_stay_feasible(seed in any::<u64>(), lanes in 2usize..6) {
        let base = random_instance(&mut ChaCha8Rng::seed_from_u64(seed), InstanceShape::MEDIUM);
        let mut s = base.clone();
        let a = ao2_parallel(&mut s, lanes);
        prop_assert!(feasible(&base, &a));
    }

    #[test]
    fn oracle_bounds_greedy_and_greedy_bounds_local(seed in any::<u64>()) {
        let base = random_instance(&mut ChaCha8Rng::seed_from_u64(seed), InstanceShape::ORACLE);
        let exact = exact_solve(&base, OracleLimits::default()).unwrap();
        prop_assert!(feasible(&base, &exact.assignment));
        let greedy = ao2(&mut base.clone());
        let u_exact = exact.utility.total;
        let u_greedy = interval_utility(&base, &greedy).total;
        let u_local = interval_utility(&base, &Assignment::new()).total;
        let tol = |x: f64| 1e-9 * x.abs().max(1.0);
        prop_assert!(u_exact >= u_greedy - tol(u_greedy));
        prop_assert!(u_greedy >= u_local - tol(u_local));
    }

    #[test]
    fn ranking_is_deterministic_and_sorted(seed in any::<u64>()) {
        let base = random_instance(&mut ChaCha8Rng::seed_from_u64(seed), InstanceShape::MEDIUM);
        let r1 = ranking(&base);
        prop_assert_eq!(&r1, &ranking(&base));
        prop_assert!(r1.windows(2).all(|w| w[0].m >= w[1].m));
        prop_assert!(r1.iter().all(|r| r.delta_sus >= 0.0));
    }

    #[test]
    fn normalization_is_scale_free(xs in prop::collection::vec(0.01f64..1e3, 1..20), k in 1e-3f64..1e3) {
        let scaled: Vec<f64> = xs.iter().map(|x| x * k).collect();
        prop_assert!((normalized_fee(&xs) - normalized_fee(&scaled)).abs() < 1e-12);
        let tasks: Vec<Task> = xs.iter().map(|&x| task(x)).collect();
        let big: Vec<Task> = scaled.iter().map(|&x| task(x)).collect();
        let (r1, r2): (Vec<&Task>, Vec<&Task>) = (tasks.iter().collect(), big.iter().collect());
        prop_assert!((normalized_volume(&r1) - normalized_volume(&r2)).abs() < 1e-12);
    }

    #[test]
    fn delta_sustainability_is_never_negative(
        level in 0.0f64..=1.44e5,
        harvest in 0.0f64..1e4,
        baseline in 0.0f64..1e4,
        sizes in prop::collection::vec(0.1f64..2000.0, 0..12),
    ) {
        let b = BatteryState { level_j: level, ..BatteryState::default() };
        let tasks: Vec<Task> = sizes.iter().map(|&m| task(m)).collect();
        let refs: Vec<&Task> = tasks.iter().collect();
        prop_assert!(delta_sustainability(&b, harvest, baseline, &refs) >= 0.0);
    }

    #[test]
    fn great_circle_is_a_metric(a in latlon(), b in latlon(), c in latlon()) {
        let d = |x, y| great_circle_km(x, y);
        prop_assert!(d(a, b) >= 0.0);
        prop_assert!((d(a, b) - d(b, a)).abs() < 1e-9);
        prop_assert!(d(a, a).abs() < 1e-9);
        prop_assert!(d(a, c) <= d(a, b) + d(b, c) + 1e-9);
    }

    #[test]
    fn hroa_never_grows_downlink(megabits in 0.0f64..1e4, r in 0.001f64..=1.0) {
        let out = hroa_process(&task(megabits), &BatteryState::default(), r).unwrap();
        prop_assert!(out.downlink_bits <= megabits * 1e6);
    }

    #[test]
    fn cct_paths_follow_isl_neighbors(source in 0u32..288, dest in 0u32..24, interval in 0u32..96) {
        let cfg = ConstellationConfig { num_planes: 24, sats_per_plane: 12, ..ConstellationConfig::default() };
        let sites = builtin_sites();
        let snap = build_snapshot(&cfg, &sites, IntervalIndex::new(interval, 60.0), &ContactParams::default());
        let isl = IslTopology::plus_grid(&cfg);
        let mut router = CctRouter::new(&isl, &snap, LinkBudget::default());
        let t = Task { source: SatelliteId(source), destination: GroundSiteId(dest), ..task(100.0) };
        if let Some(route) = router.route(&t) {
            prop_assert_eq!(route.path.first(), Some(&SatelliteId(source)));
            prop_assert_eq!(route.path.last().copied(), router.overhead_of(GroundSiteId(dest)));
            prop_assert!(route.path.windows(2).all(|w| isl.are_neighbors(w[0], w[1])));
            let split: f64 = route.per_satellite_energy().map(|(_, e)| e).sum();
            prop_assert!((split - route.energy_j).abs() <= 1e-9 * route.energy_j.max(1.0));
        }
    }
}
