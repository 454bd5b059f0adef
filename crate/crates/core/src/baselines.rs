//! Comparison schemes: in-space ISL routing to the destination-overhead
//! satellite (CCT), on-board pre-processing before downlink (HROA), and a
//! process-everything-on-board reference.

use std::collections::{HashMap, VecDeque};

use serde::{Deserialize, Serialize};

use crate::battery::BatteryState;
use crate::error::{domain, Result};
use crate::geo::{Vec3, SPEED_OF_LIGHT_KM_S};
use crate::model::{GroundSiteId, SatelliteId, Task, TopologySnapshot};
use crate::orbit::ConstellationConfig;

/// +Grid inter-satellite wiring: fore/aft in-plane neighbours and the
/// same-slot satellites in the adjacent planes.
#[derive(Clone, Debug)]
pub struct IslTopology {
    neighbors: Vec<Vec<SatelliteId>>,
}

impl IslTopology {
    pub fn plus_grid(cfg: &ConstellationConfig) -> Self {
        let (planes, slots) = (cfg.num_planes, cfg.sats_per_plane);
        let neighbors = (0..cfg.total() as u32)
            .map(|i| {
                let me = SatelliteId(i);
                let (p, k) = (cfg.plane_of(me), cfg.slot_of(me));
                let mut n = vec![
                    cfg.id(p, (k + 1) % slots),
                    cfg.id(p, (k + slots - 1) % slots),
                    cfg.id((p + 1) % planes, k),
                    cfg.id((p + planes - 1) % planes, k),
                ];
                n.retain(|&s| s != me);
                n.sort();
                n.dedup();
                n
            })
            .collect();
        Self { neighbors }
    }

    pub fn from_adjacency(neighbors: Vec<Vec<SatelliteId>>) -> Self {
        let neighbors = neighbors
            .into_iter()
            .map(|mut n| {
                n.sort();
                n.dedup();
                n
            })
            .collect();
        Self { neighbors }
    }

    pub fn len(&self) -> usize {
        self.neighbors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.neighbors.is_empty()
    }

    /// Neighbours in ascending id order.
    pub fn neighbors(&self, sat: SatelliteId) -> &[SatelliteId] {
        self.neighbors
            .get(sat.0 as usize)
            .map_or(&[], Vec::as_slice)
    }

    pub fn are_neighbors(&self, a: SatelliteId, b: SatelliteId) -> bool {
        self.neighbors(a).binary_search(&b).is_ok()
    }

    /// Hop counts to `target` from every satellite; `u32::MAX` if unreachable.
    pub fn hops_to(&self, target: SatelliteId) -> Vec<u32> {
        let mut dist = vec![u32::MAX; self.neighbors.len()];
        let Some(d) = dist.get_mut(target.0 as usize) else {
            return dist;
        };
        *d = 0;
        let mut queue = VecDeque::from([target]);
        while let Some(u) = queue.pop_front() {
            let next = dist[u.0 as usize] + 1;
            for &w in self.neighbors(u) {
                if dist[w.0 as usize] == u32::MAX {
                    dist[w.0 as usize] = next;
                    queue.push_back(w);
                }
            }
        }
        dist
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinkBudget {
    pub isl_rate_bps: f64,
    pub downlink_rate_bps: f64,
    pub tx_power_per_mbps_w: f64,
}

impl Default for LinkBudget {
    fn default() -> Self {
        Self {
            isl_rate_bps: 300e6,
            downlink_rate_bps: 1e9,
            tx_power_per_mbps_w: 0.08,
        }
    }
}

impl LinkBudget {
    /// Energy to push `bits` over one link at any rate.
    pub fn tx_energy(&self, bits: f64) -> f64 {
        self.tx_power_per_mbps_w * bits / 1e6
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CctRoute {
    /// Source first, destination-overhead satellite last.
    pub path: Vec<SatelliteId>,
    pub isl_energy_j: f64,
    pub downlink_energy_j: f64,
    pub energy_j: f64,
    pub delay_s: f64,
}

impl CctRoute {
    /// Radio energy spent by each satellite on the path.
    pub fn per_satellite_energy(&self) -> impl Iterator<Item = (SatelliteId, f64)> + '_ {
        let hops = self.path.len().saturating_sub(1);
        let per_hop = if hops == 0 {
            0.0
        } else {
            self.isl_energy_j / hops as f64
        };
        self.path.iter().enumerate().map(move |(i, &s)| {
            let e = if i + 1 == self.path.len() {
                self.downlink_energy_j
            } else {
                per_hop
            };
            (s, e)
        })
    }
}

/// Satellite whose position is closest to `point`; ties by id.
pub fn nearest_satellite(snapshot: &TopologySnapshot, point: Vec3) -> Option<SatelliteId> {
    snapshot
        .positions()
        .iter()
        .enumerate()
        .map(|(i, p)| (p.distance(point), i))
        .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)))
        .map(|(_, i)| SatelliteId(i as u32))
}

/// CCT routing over one snapshot, caching hop tables per target.
pub struct CctRouter<'a> {
    isl: &'a IslTopology,
    snapshot: &'a TopologySnapshot,
    link: LinkBudget,
    hops: HashMap<SatelliteId, Vec<u32>>,
    overhead: HashMap<GroundSiteId, Option<SatelliteId>>,
}

impl<'a> CctRouter<'a> {
    pub fn new(isl: &'a IslTopology, snapshot: &'a TopologySnapshot, link: LinkBudget) -> Self {
        Self {
            isl,
            snapshot,
            link,
            hops: HashMap::new(),
            overhead: HashMap::new(),
        }
    }

    pub fn overhead_of(&mut self, site: GroundSiteId) -> Option<SatelliteId> {
        let snapshot = self.snapshot;
        *self.overhead.entry(site).or_insert_with(|| {
            snapshot
                .site_position(site)
                .and_then(|p| nearest_satellite(snapshot, p))
        })
    }

    /// Shortest-hop path to the satellite above the task's destination,
    /// lexicographically smallest among equals. `None` when the destination
    /// is unknown or unreachable.
    pub fn route(&mut self, task: &Task) -> Option<CctRoute> {
        let target = self.overhead_of(task.destination)?;
        let isl = self.isl;
        let dist = self
            .hops
            .entry(target)
            .or_insert_with(|| isl.hops_to(target));
        let mut here = task.source;
        if *dist.get(here.0 as usize)? == u32::MAX {
            return None;
        }
        let mut path = vec![here];
        while here != target {
            let d = dist[here.0 as usize];
            here = *isl
                .neighbors(here)
                .iter()
                .find(|w| dist[w.0 as usize] + 1 == d)
                .expect("BFS tables always have a predecessor");
            path.push(here);
        }

        let bits = task.volume_bits;
        let hops = path.len() - 1;
        let isl_energy_j = hops as f64 * self.link.tx_energy(bits);
        let downlink_energy_j = self.link.tx_energy(bits);

        let pos = |s: SatelliteId| self.snapshot.position(s).unwrap_or_default();
        let mut delay_s = hops as f64 * bits / self.link.isl_rate_bps;
        delay_s += path
            .windows(2)
            .map(|w| pos(w[0]).distance(pos(w[1])) / SPEED_OF_LIGHT_KM_S)
            .sum::<f64>();
        let slant = self
            .snapshot
            .site_position(task.destination)
            .map_or(0.0, |g| pos(target).distance(g));
        delay_s += bits / self.link.downlink_rate_bps + slant / SPEED_OF_LIGHT_KM_S;

        Some(CctRoute {
            path,
            isl_energy_j,
            downlink_energy_j,
            energy_j: isl_energy_j + downlink_energy_j,
            delay_s,
        })
    }
}

/// One-off CCT route; see [`CctRouter::route`].
pub fn cct_route(
    task: &Task,
    snapshot: &TopologySnapshot,
    isl: &IslTopology,
    link: LinkBudget,
) -> Option<CctRoute> {
    CctRouter::new(isl, snapshot, link).route(task)
}

#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HroaOutput {
    pub onboard_energy_j: f64,
    pub downlink_bits: f64,
    pub processing_time_s: f64,
}

/// Pre-processes a task on board, shrinking its downlink volume by
/// `reduction_factor`.
pub fn hroa_process(
    task: &Task,
    battery: &BatteryState,
    reduction_factor: f64,
) -> Result<HroaOutput> {
    if !(reduction_factor > 0.0 && reduction_factor <= 1.0) {
        return Err(domain(format!(
            "reduction factor {reduction_factor} outside (0, 1]"
        )));
    }
    Ok(HroaOutput {
        onboard_energy_j: battery.processing_energy(task.cycles),
        downlink_bits: task.volume_bits * reduction_factor,
        processing_time_s: battery.processing_time(task.cycles),
    })
}

/// On-board energy when the task never leaves the satellite for compute.
pub fn no_offload(task: &Task, battery: &BatteryState) -> f64 {
    battery.processing_energy(task.cycles)
}
