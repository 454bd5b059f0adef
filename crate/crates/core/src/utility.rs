//! QoS and sustainability utilities, and the per-satellite marginal-gain
//! ranking that orders the greedy orchestrator.
//!
//! The ranking relaxes link capacity and budget: every task on a satellite
//! is assumed offloadable to its delay-optimal visible site.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::battery::{BatteryState, LithiumIon, WearKernel};
use crate::model::{Assignment, GroundSiteId, SatelliteId, Task};
use crate::orchestrator::IntervalState;
use crate::sites::SiteCatalog;

/// Lower bound on a total delay denominator, seconds. Applies when every
/// scheduled task lands at its own destination.
pub const DELAY_FLOOR_S: f64 = 1e-9;

/// Multipliers on the QoS and sustainability gains in the ranking key.
#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UtilityWeights {
    pub qos: f64,
    pub sustainability: f64,
}

impl Default for UtilityWeights {
    fn default() -> Self {
        Self {
            qos: 1.0,
            sustainability: 1.0,
        }
    }
}

fn count_over_delay(count: usize, total_delay_s: f64) -> f64 {
    if count == 0 {
        0.0
    } else {
        count as f64 / total_delay_s.max(DELAY_FLOOR_S)
    }
}

/// Scheduled task count over their summed site-to-destination delay.
pub fn qos_utility<'a, I>(catalog: &SiteCatalog, scheduled: I) -> f64
where
    I: IntoIterator<Item = (&'a Task, GroundSiteId)>,
{
    let (count, total) = scheduled
        .into_iter()
        .fold((0usize, 0.0), |(n, d), (t, site)| {
            (n + 1, d + catalog.delay_s(site, t.destination))
        });
    count_over_delay(count, total)
}

/// `sum / (n * max)`; 1 when the list is empty or all zero.
fn normalized(values: impl Iterator<Item = f64> + Clone) -> f64 {
    let (n, sum, max) = values.fold((0usize, 0.0, 0.0f64), |(n, s, m), v| {
        (n + 1, s + v, m.max(v))
    });
    if n == 0 || max <= 0.0 {
        1.0
    } else {
        sum / (n as f64 * max)
    }
}

/// Normalized expected electricity fee of a satellite's tasks.
pub fn normalized_fee(costs: &[f64]) -> f64 {
    normalized(costs.iter().copied())
}

/// Normalized data volume of a satellite's tasks.
pub fn normalized_volume(tasks: &[&Task]) -> f64 {
    normalized(tasks.iter().map(|t| t.volume_bits))
}

/// Visible site closest (by terrestrial delay) to the task's destination;
/// ties go to the smaller id. `None` when nothing is visible.
pub fn best_site_for_task(
    task: &Task,
    visible: &[GroundSiteId],
    catalog: &SiteCatalog,
) -> Option<GroundSiteId> {
    visible.iter().copied().min_by(|&a, &b| {
        catalog
            .delay_s(a, task.destination)
            .total_cmp(&catalog.delay_s(b, task.destination))
            .then(a.cmp(&b))
    })
}

/// QoS gain if all of a satellite's reachable tasks were offloaded to their
/// best sites. Tasks without any visible site are left out.
pub fn delta_qos(tasks_on_v: &[&Task], visible: &[GroundSiteId], catalog: &SiteCatalog) -> f64 {
    let (count, total) = tasks_on_v
        .iter()
        .filter_map(|t| {
            best_site_for_task(t, visible, catalog).map(|s| catalog.delay_s(s, t.destination))
        })
        .fold((0usize, 0.0), |(n, d), delay| (n + 1, d + delay));
    count_over_delay(count, total)
}

/// Wear avoided by offloading every task instead of processing all of them
/// on board. Never negative.
pub fn delta_sustainability(
    battery: &BatteryState,
    harvested_j: f64,
    baseline_j: f64,
    tasks_on_v: &[&Task],
) -> f64 {
    let all_process: f64 = tasks_on_v
        .iter()
        .map(|t| battery.processing_energy(t.cycles))
        .sum();
    let local = battery.remaining_energy_local(harvested_j, baseline_j, all_process);
    let offloaded = battery.remaining_energy(harvested_j, baseline_j, 0.0);
    // the common begin-depth term cancels
    LithiumIon.antiderivative(battery.dod(local))
        - LithiumIon.antiderivative(battery.dod(offloaded))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SatelliteRank {
    pub satellite: SatelliteId,
    /// Marginal utility gain, the sort key.
    pub m: f64,
    pub delta_qos: f64,
    pub delta_sus: f64,
    pub norm_fee: f64,
    pub norm_volume: f64,
}

/// Computes the ranking entry for one satellite.
pub fn rank_one(v: SatelliteId, tasks_on_v: &[&Task], state: &IntervalState) -> SatelliteRank {
    let catalog = &state.sites;
    let visible: Vec<GroundSiteId> = state
        .snapshot
        .edges_from(v)
        .iter()
        .map(|e| e.site)
        .collect();

    let costs: Vec<f64> = tasks_on_v
        .iter()
        .map(|t| {
            let site = best_site_for_task(t, &visible, catalog).unwrap_or(t.destination);
            state.cost(t, site)
        })
        .collect();
    let norm_fee = normalized_fee(&costs);
    let norm_volume = normalized_volume(tasks_on_v);
    let dq = delta_qos(tasks_on_v, &visible, catalog);
    let ds = match state.batteries.get(&v) {
        Some(b) => delta_sustainability(b, state.harvested(v, b), state.baseline(b), tasks_on_v),
        None => 0.0,
    };
    let w = state.weights;
    SatelliteRank {
        satellite: v,
        m: (w.qos * dq + w.sustainability * ds) / (norm_fee + norm_volume),
        delta_qos: dq,
        delta_sus: ds,
        norm_fee,
        norm_volume,
    }
}

/// Candidates in non-increasing order of marginal gain, ties by id.
pub fn rank_satellites(
    candidates: &BTreeMap<SatelliteId, Vec<&Task>>,
    state: &IntervalState,
) -> Vec<SatelliteRank> {
    let mut ranks: Vec<SatelliteRank> = candidates
        .iter()
        .map(|(&v, tasks)| rank_one(v, tasks, state))
        .collect();
    ranks.sort_by(|a, b| b.m.total_cmp(&a.m).then(a.satellite.cmp(&b.satellite)));
    ranks
}

#[derive(Copy, Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct UtilityBreakdown {
    pub qos: f64,
    pub sustainability: f64,
    pub total: f64,
}

/// Composite utility of an assignment, recomputed from its raw x and y
/// entries. Sustainability covers every satellite with a battery entry;
/// unscheduled tasks are charged as on-board processing.
pub fn interval_utility(state: &IntervalState, a: &Assignment) -> UtilityBreakdown {
    let mut count = 0usize;
    let mut delay = 0.0;
    for (&task, &y) in &a.y {
        if y == 1 && state.tasks.get(task).is_some() {
            count += 1;
        }
    }
    for (task, link) in a.placements() {
        if let Some(t) = state.tasks.get(task) {
            delay += state.sites.delay_s(link.site, t.destination);
        }
    }
    let qos = count_over_delay(count, delay);

    let mut unscheduled: BTreeMap<SatelliteId, f64> = BTreeMap::new();
    for t in &state.tasks {
        if !a.is_scheduled(t.id) {
            if let Some(b) = state.batteries.get(&t.source) {
                *unscheduled.entry(t.source).or_default() += b.processing_energy(t.cycles);
            }
        }
    }
    let sustainability = -state
        .batteries
        .iter()
        .map(|(v, b)| {
            let process = unscheduled.get(v).copied().unwrap_or(0.0);
            b.wear_to(b.remaining_energy(state.harvested(*v, b), state.baseline(b), process))
        })
        .sum::<f64>();

    UtilityBreakdown {
        qos,
        sustainability,
        total: qos + sustainability,
    }
}
