//! Fixtures shared by the benchmarks.

use std::sync::Arc;

use orbit_offload::harness::{ScenarioConfig, World};
use orbit_offload::{IntervalState, SatelliteId, TaskSet};

/// A fresh interval of the default scenario with `planes` orbital planes:
/// full batteries, the interval's new tasks and that interval's prices.
pub fn interval_state(planes: u32, interval: u32) -> IntervalState {
    let cfg = ScenarioConfig {
        num_planes: planes,
        ..ScenarioConfig::default()
    };
    let world = World::new(&cfg).expect("default scenario is valid");
    let snapshot = world.snapshot(interval);
    let tasks = world.tasks(&snapshot);
    let battery = cfg.battery();
    let batteries = (0..world.n_sats() as u32)
        .map(|i| (SatelliteId(i), battery.clone()))
        .collect();
    let prices = world.prices.snapshot(world.sites.sites(), interval);
    let mut state = IntervalState::new(
        Arc::new(snapshot),
        Arc::clone(&world.sites),
        TaskSet::new(tasks),
        prices,
        batteries,
        cfg.budget_per_interval_usd,
    );
    state.weights = cfg.weights();
    state
}
