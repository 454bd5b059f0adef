use rand::distr::weighted::WeightedIndex;
use rand::prelude::*;
use rand::seq::index::sample_weighted;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp, Poisson};

use super::config::{ArrivalModel, ScenarioConfig, VolumeDistribution};
use crate::geo::{great_circle_km, LatLon};
use crate::model::{GroundSite, SatelliteId, Task, TaskId, TopologySnapshot};
use crate::orbit::subpoint;

/// Task-generation parameters lifted from a scenario.
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct TaskGenParams {
    pub arrival: ArrivalModel,
    pub rate_bps: f64,
    pub interval_s: f64,
    pub cycles_per_bit: f64,
    pub volume_distribution: VolumeDistribution,
    pub mean_task_bits: f64,
    pub priority_levels: u32,
    pub active_fraction: f64,
    pub activity_sigma_km: f64,
}

impl From<&ScenarioConfig> for TaskGenParams {
    fn from(c: &ScenarioConfig) -> Self {
        Self {
            arrival: c.arrival,
            rate_bps: c.rate_bps,
            interval_s: c.interval_s,
            cycles_per_bit: c.cycles_per_bit,
            volume_distribution: c.volume_distribution,
            mean_task_bits: c.mean_task_bits,
            priority_levels: c.priority_levels,
            active_fraction: c.active_fraction,
            activity_sigma_km: c.activity_sigma_km,
        }
    }
}

impl TaskGenParams {
    /// Expected task count per active satellite per interval.
    pub fn mean_tasks(&self) -> f64 {
        self.rate_bps * self.interval_s / self.mean_task_bits
    }
}

/// Deterministic stream for one interval of one run.
pub fn interval_rng(seed: u64, interval: u32) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(u64::from(interval));
    rng
}

/// Draws the tasks sensed by `sat` during one interval. Ids continue from
/// `*next_id`.
pub fn tasks_for_satellite<R: Rng>(
    rng: &mut R,
    params: &TaskGenParams,
    sat: SatelliteId,
    interval: u32,
    destinations: &[GroundSite],
    dest_index: &WeightedIndex<f64>,
    next_id: &mut u64,
) -> Vec<Task> {
    let mean = params.mean_tasks();
    if mean.is_nan() || mean <= 0.0 || destinations.is_empty() {
        return Vec::new();
    }
    let count = match params.arrival {
        ArrivalModel::Poisson => Poisson::new(mean).expect("positive mean").sample(rng) as u64,
        ArrivalModel::Fixed => mean.round() as u64,
    };
    let exp = Exp::new(1.0 / params.mean_task_bits).expect("positive mean volume");
    (0..count)
        .map(|_| {
            let volume_bits = match params.volume_distribution {
                VolumeDistribution::Exponential => exp.sample(rng),
                VolumeDistribution::Fixed => params.mean_task_bits,
            };
            let dest = &destinations[dest_index.sample(rng)];
            let priority = rng.random_range(0..params.priority_levels);
            let id = TaskId((u64::from(interval) << 32) | *next_id);
            *next_id += 1;
            Task {
                id,
                source: sat,
                destination: dest.id,
                cycles: volume_bits * params.cycles_per_bit,
                volume_bits,
                created_at: interval,
                priority,
            }
        })
        .collect()
}

/// Relative chance that each satellite is sensing, from how close its
/// ground track is to population-weighted sites.
pub fn activity_weights(
    params: &TaskGenParams,
    snapshot: &TopologySnapshot,
    sites: &[GroundSite],
) -> Vec<f64> {
    let n = snapshot.num_satellites();
    if params.activity_sigma_km <= 0.0 || sites.is_empty() {
        return vec![1.0; n];
    }
    let t = snapshot.interval().start_s();
    let two_s2 = 2.0 * params.activity_sigma_km * params.activity_sigma_km;
    let total_pop: f64 = sites.iter().map(|s| s.population_weight).sum();
    let raw: Vec<f64> = snapshot
        .positions()
        .iter()
        .map(|&p| {
            let sp = subpoint(p, t);
            sites
                .iter()
                .map(|s| {
                    let d = great_circle_km(sp, LatLon::new(s.lat_deg, s.lon_deg));
                    s.population_weight * (-d * d / two_s2).exp()
                })
                .sum::<f64>()
        })
        .collect();
    // a small floor keeps every satellite eligible
    let floor = 1e-6 * total_pop.max(f64::MIN_POSITIVE);
    raw.into_iter()
        .map(|w| if w.is_finite() { w + floor } else { floor })
        .collect()
}

/// Tasks for one interval: picks the sensing-active satellites, then draws
/// each one's arrivals. The result is ordered by id.
pub fn generate_tasks(
    params: &TaskGenParams,
    snapshot: &TopologySnapshot,
    sites: &[GroundSite],
    seed: u64,
) -> Vec<Task> {
    let interval = snapshot.interval().index;
    let n = snapshot.num_satellites();
    let active = ((params.active_fraction * n as f64).round() as usize).min(n);
    if active == 0 || params.rate_bps <= 0.0 || sites.is_empty() {
        return Vec::new();
    }
    let Ok(dest_index) = WeightedIndex::new(sites.iter().map(|s| s.population_weight)) else {
        return Vec::new();
    };
    let mut rng = interval_rng(seed, interval);
    let weights = activity_weights(params, snapshot, sites);
    let mut chosen: Vec<usize> = sample_weighted(&mut rng, n, |i| weights[i], active)
        .expect("weights are positive and finite")
        .into_vec();
    chosen.sort_unstable();

    let mut next_id = 0;
    chosen
        .into_iter()
        .flat_map(|i| {
            tasks_for_satellite(
                &mut rng,
                params,
                SatelliteId(i as u32),
                interval,
                sites,
                &dest_index,
                &mut next_id,
            )
        })
        .collect()
}
