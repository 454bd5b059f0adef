use std::collections::BTreeMap;
use std::sync::Arc;

use orbit_offload::checks::{check_budget, check_link_capacity};
use orbit_offload::model::validate_assignment;
use orbit_offload::oracle::{exact_solve, OracleLimits};
use orbit_offload::utility::interval_utility;
use orbit_offload::{
    ao2, BatteryState, GroundSite, GroundSiteId, GslEdge, IntervalIndex, IntervalState, LinkId,
    SatelliteId, SiteCatalog, Task, TaskId, TaskSet, TopologySnapshot,
};

const A: SatelliteId = SatelliteId(0);
const B: SatelliteId = SatelliteId(1);
const CPB: f64 = 737.5;

fn site(id: u32, lon: f64) -> GroundSite {
    GroundSite {
        id: GroundSiteId(id),
        name: format!("g{id}"),
        lat_deg: 0.0,
        lon_deg: lon,
        compute_power_w: 10.72,
        compute_capability_hz: 1.43e9,
        bandwidth_bps: None,
        population_weight: 1.0,
        has_price_trace: false,
    }
}

fn task(id: u64, source: SatelliteId, dest: u32, megabits: f64, priority: u32) -> Task {
    Task {
        id: TaskId(id),
        source,
        destination: GroundSiteId(dest),
        cycles: megabits * 1e6 * CPB,
        volume_bits: megabits * 1e6,
        created_at: 0,
        priority,
    }
}

/// Bill in USD for `megabits` at `price` USD/kWh on a Jetson-class site.
fn bill(megabits: f64, price: f64) -> f64 {
    10.72 * megabits * 1e6 * CPB / 1.43e9 / 3.6e6 * price
}

fn edge(sat: SatelliteId, site: u32, megabits_per_s: f64) -> GslEdge {
    GslEdge {
        satellite: sat,
        site: GroundSiteId(site),
        bandwidth_bps: megabits_per_s * 1e6,
        elevation_deg: 60.0,
    }
}

/// Two satellites, three links, six tasks.
///
/// B's tasks are destined for the site B can see, so B ranks first. B's
/// link fits only one of its two 100 Mb tasks. A sees a cheap site with a
/// 120 Mb link and a dear site with room to spare. The budget runs out
/// before A's last task.
fn instance() -> IntervalState {
    let sites = vec![site(0, 0.0), site(1, 5.0), site(2, 12.0)];
    let snapshot = TopologySnapshot::from_edges(
        IntervalIndex::new(0, 1.0),
        vec![edge(A, 0, 1000.0), edge(A, 1, 120.0), edge(B, 1, 150.0)],
    );
    let tasks = vec![
        task(1, A, 2, 100.0, 0),
        task(2, A, 2, 100.0, 1),
        task(3, A, 2, 50.0, 2),
        task(4, A, 2, 80.0, 2),
        task(5, B, 1, 100.0, 0),
        task(6, B, 1, 100.0, 1),
    ];
    let prices = BTreeMap::from([
        (GroundSiteId(0), 0.2),
        (GroundSiteId(1), 0.1),
        (GroundSiteId(2), 0.15),
    ]);
    let budget = bill(100.0, 0.1)
        + bill(100.0, 0.1)
        + bill(100.0, 0.2)
        + bill(50.0, 0.2)
        + 0.5 * bill(80.0, 0.2);
    let batteries = [A, B]
        .into_iter()
        .map(|s| (s, BatteryState::default()))
        .collect();
    IntervalState::new(
        Arc::new(snapshot),
        Arc::new(SiteCatalog::new(sites).unwrap()),
        TaskSet::new(tasks),
        prices,
        batteries,
        budget,
    )
}

#[test]
fn hand_traced_assignment() {
    let base = instance();
    let mut state = base.clone();
    let a = ao2(&mut state);

    let link = |s, g| Some(LinkId::new(s, GroundSiteId(g)));
    // B first: task 5 takes B's link, task 6 no longer fits it.
    assert_eq!(a.link_of(TaskId(5)), link(B, 1));
    assert!(!a.is_scheduled(TaskId(6)));
    // A: task 1 takes the cheap link, which then has 20 Mb left.
    assert_eq!(a.link_of(TaskId(1)), link(A, 1));
    assert_eq!(a.link_of(TaskId(2)), link(A, 0));
    assert_eq!(a.link_of(TaskId(3)), link(A, 0));
    // Task 4 needs more than the budget left.
    assert!(!a.is_scheduled(TaskId(4)));
    assert_eq!(a.y.len(), 6);
    assert_eq!(a.scheduled_count(), 4);

    let spent = bill(100.0, 0.1) * 2.0 + bill(100.0, 0.2) + bill(50.0, 0.2);
    assert!((state.ledger.spent() - spent).abs() < 1e-15);
    assert_eq!(
        state.link_used_bits[&LinkId::new(A, GroundSiteId(1))],
        100e6
    );
    assert_eq!(
        state.link_used_bits[&LinkId::new(A, GroundSiteId(0))],
        150e6
    );

    assert!(validate_assignment(&a, &base.snapshot, &base.tasks).is_empty());
    assert!(check_link_capacity(&a, &base.tasks, &base.snapshot).is_empty());
    assert!(check_budget(
        &a,
        &base.tasks,
        &base.sites,
        &base.prices,
        base.ledger.budget_per_interval
    )
    .is_ok());

    let exact = exact_solve(&base, OracleLimits::default()).unwrap();
    assert!(interval_utility(&base, &a).total <= exact.utility.total);
}

#[test]
fn identical_states_give_identical_assignments() {
    let (mut s1, mut s2) = (instance(), instance());
    assert_eq!(ao2(&mut s1), ao2(&mut s2));
    assert_eq!(s1.link_used_bits, s2.link_used_bits);
}
