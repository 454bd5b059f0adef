use std::collections::BTreeMap;
use std::sync::Arc;

use rand::Rng;

use crate::battery::BatteryState;
use crate::geo::Vec3;
use crate::model::{
    GroundSite, GroundSiteId, GslEdge, IntervalIndex, SatelliteId, Task, TaskId, TaskSet,
    TopologySnapshot,
};
use crate::orchestrator::IntervalState;
use crate::sites::SiteCatalog;

/// Shape of randomly drawn single-interval problems.
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct InstanceShape {
    pub max_sats: u32,
    pub max_sites: u32,
    pub max_tasks: usize,
    pub max_edges_per_sat: usize,
}

impl InstanceShape {
    /// Small enough for exhaustive search.
    pub const ORACLE: InstanceShape = InstanceShape {
        max_sats: 3,
        max_sites: 5,
        max_tasks: 9,
        max_edges_per_sat: 4,
    };

    pub const MEDIUM: InstanceShape = InstanceShape {
        max_sats: 40,
        max_sites: 10,
        max_tasks: 400,
        max_edges_per_sat: 4,
    };
}

fn random_site<R: Rng>(rng: &mut R, id: u32) -> GroundSite {
    GroundSite {
        id: GroundSiteId(id),
        name: format!("site-{id}"),
        lat_deg: rng.random_range(-60.0..60.0),
        lon_deg: rng.random_range(-180.0..180.0),
        compute_power_w: rng.random_range(5.0..50.0),
        compute_capability_hz: rng.random_range(0.5e9..5e9),
        bandwidth_bps: None,
        population_weight: rng.random_range(0.1..3.0),
        has_price_trace: false,
    }
}

fn random_battery<R: Rng>(rng: &mut R) -> BatteryState {
    let capacity_j = rng.random_range(5e3..2e5);
    BatteryState {
        capacity_j,
        level_j: capacity_j * rng.random_range(0.0..=1.0),
        harvest_rate_w: rng.random_range(0.0..150.0),
        baseline_rate_w: rng.random_range(0.0..50.0),
        ..BatteryState::default()
    }
}

/// Draws a random interval: sites, links with limited capacity, tasks,
/// prices, batteries and a budget somewhere between nothing and enough.
pub fn random_instance<R: Rng>(rng: &mut R, shape: InstanceShape) -> IntervalState {
    let n_sites = rng.random_range(1..=shape.max_sites);
    let sites: Vec<GroundSite> = (0..n_sites).map(|i| random_site(rng, i)).collect();
    let n_sats = rng.random_range(1..=shape.max_sats);
    let duration = rng.random_range(1.0..60.0);

    let mut edges = Vec::new();
    for s in 0..n_sats {
        let k = rng.random_range(0..=shape.max_edges_per_sat.min(n_sites as usize));
        let mut ids: Vec<u32> = (0..n_sites).collect();
        for i in 0..k {
            let j = rng.random_range(i..ids.len());
            ids.swap(i, j);
        }
        for &site in &ids[..k] {
            edges.push(GslEdge {
                satellite: SatelliteId(s),
                site: GroundSiteId(site),
                bandwidth_bps: rng.random_range(1e6..1e8),
                elevation_deg: rng.random_range(25.0..90.0),
            });
        }
    }

    let n_tasks = rng.random_range(0..=shape.max_tasks);
    let tasks: Vec<Task> = (0..n_tasks)
        .map(|i| {
            let volume_bits = rng.random_range(1e6..1e9);
            Task {
                id: TaskId(i as u64),
                source: SatelliteId(rng.random_range(0..n_sats)),
                destination: GroundSiteId(rng.random_range(0..n_sites)),
                cycles: volume_bits * rng.random_range(100.0..1500.0),
                volume_bits,
                created_at: 0,
                priority: rng.random_range(0..3),
            }
        })
        .collect();

    let positions = vec![Vec3::ZERO; n_sats as usize];
    let sunlit_fraction: Vec<f64> = (0..n_sats).map(|_| rng.random_range(0.0..=1.0)).collect();
    let sunlit = sunlit_fraction.iter().map(|&f| f > 0.5).collect();
    let snapshot = TopologySnapshot::new(
        IntervalIndex::new(0, duration),
        positions,
        BTreeMap::new(),
        edges,
        sunlit,
        sunlit_fraction,
    );

    let prices: BTreeMap<GroundSiteId, f64> = sites
        .iter()
        .map(|s| (s.id, rng.random_range(0.04..=0.2)))
        .collect();
    let batteries = (0..n_sats)
        .map(|s| (SatelliteId(s), random_battery(rng)))
        .collect();
    let catalog = SiteCatalog::new(sites).expect("random sites are valid");

    let demand: f64 = tasks
        .iter()
        .map(|t| {
            let s = catalog.get(t.destination).expect("destination exists");
            crate::economics::task_cost(t, s, 0.2).expect("positive capability")
        })
        .sum();
    let budget = match rng.random_range(0..10) {
        0 => 0.0,
        1 => f64::INFINITY,
        _ => demand * rng.random_range(0.0..1.5),
    };

    IntervalState::new(
        Arc::new(snapshot),
        Arc::new(catalog),
        TaskSet::new(tasks),
        prices,
        batteries,
        budget,
    )
}
