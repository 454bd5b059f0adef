//! Shared domain types: identifiers, tasks, ground sites, per-interval
//! topology snapshots and offloading assignments.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::geo::Vec3;

macro_rules! id_type {
    ($(#[$meta:meta])* $name:ident, $inner:ty) => {
        $(#[$meta])*
        #[derive(
            Copy, Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
        )]
        #[serde(transparent)]
        pub struct $name(pub $inner);

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, "{}", self.0)
            }
        }
    };
}

id_type!(
    /// Index of a satellite in its constellation (`plane * sats_per_plane + slot`).
    SatelliteId,
    u32
);
id_type!(GroundSiteId, u32);
id_type!(
    /// Globally unique across intervals so carried-over tasks keep their identity.
    TaskId,
    u64
);

/// A discrete scheduling slot. Topology is frozen for its duration.
#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntervalIndex {
    pub index: u32,
    pub duration_s: f64,
}

impl IntervalIndex {
    pub fn new(index: u32, duration_s: f64) -> Self {
        debug_assert!(duration_s > 0.0);
        Self { index, duration_s }
    }

    pub fn start_s(&self) -> f64 {
        f64::from(self.index) * self.duration_s
    }

    pub fn end_s(&self) -> f64 {
        self.start_s() + self.duration_s
    }
}

/// An atomic unit of work generated on board: it is either offloaded whole
/// to one ground site or handled on the satellite.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Task {
    pub id: TaskId,
    pub source: SatelliteId,
    pub destination: GroundSiteId,
    pub cycles: f64,
    pub volume_bits: f64,
    /// Index of the interval the task was generated in.
    pub created_at: u32,
    /// Offload order within a satellite; lower values go first.
    pub priority: u32,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroundSite {
    pub id: GroundSiteId,
    pub name: String,
    pub lat_deg: f64,
    pub lon_deg: f64,
    /// Power drawn by the collocated data center while running a task.
    pub compute_power_w: f64,
    pub compute_capability_hz: f64,
    /// Per-site GSL bandwidth; `None` uses the scenario default.
    pub bandwidth_bps: Option<f64>,
    /// Relative population served, used to weight task destinations.
    pub population_weight: f64,
    pub has_price_trace: bool,
}

impl GroundSite {
    pub fn is_valid(&self) -> bool {
        (-90.0..=90.0).contains(&self.lat_deg)
            && self.lon_deg > -180.0
            && self.lon_deg <= 180.0
            && self.compute_capability_hz > 0.0
            && self.compute_power_w >= 0.0
            && self.population_weight >= 0.0
            && self.bandwidth_bps.is_none_or(|b| b > 0.0)
    }
}

/// Endpoint pair of a ground-satellite link.
#[derive(Copy, Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct LinkId {
    pub satellite: SatelliteId,
    pub site: GroundSiteId,
}

impl LinkId {
    pub fn new(satellite: SatelliteId, site: GroundSiteId) -> Self {
        Self { satellite, site }
    }
}

impl fmt::Display for LinkId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "sat{}->site{}", self.satellite, self.site)
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GslEdge {
    pub satellite: SatelliteId,
    pub site: GroundSiteId,
    pub bandwidth_bps: f64,
    /// Elevation at the start of the interval; diagnostic only.
    pub elevation_deg: f64,
}

impl GslEdge {
    pub fn link(&self) -> LinkId {
        LinkId::new(self.satellite, self.site)
    }

    /// Bits the link can carry within one interval.
    pub fn capacity_bits(&self, duration_s: f64) -> f64 {
        self.bandwidth_bps * duration_s
    }
}

/// Frozen view of the network for one interval.
///
/// Satellite ids index directly into the position and sunlight vectors.
/// Edges are kept sorted by `(satellite, site)`.
#[derive(Clone, Debug)]
pub struct TopologySnapshot {
    interval: IntervalIndex,
    sat_positions: Vec<Vec3>,
    site_positions: BTreeMap<GroundSiteId, Vec3>,
    edges: Vec<GslEdge>,
    edge_ranges: HashMap<SatelliteId, (usize, usize)>,
    sunlit: Vec<bool>,
    sunlit_fraction: Vec<f64>,
}

impl TopologySnapshot {
    pub fn new(
        interval: IntervalIndex,
        sat_positions: Vec<Vec3>,
        site_positions: BTreeMap<GroundSiteId, Vec3>,
        mut edges: Vec<GslEdge>,
        sunlit: Vec<bool>,
        sunlit_fraction: Vec<f64>,
    ) -> Self {
        edges.sort_by_key(|e| e.link());
        edges.dedup_by_key(|e| e.link());
        let mut edge_ranges = HashMap::new();
        let mut start = 0;
        while start < edges.len() {
            let sat = edges[start].satellite;
            let mut end = start;
            while end < edges.len() && edges[end].satellite == sat {
                end += 1;
            }
            edge_ranges.insert(sat, (start, end));
            start = end;
        }
        Self {
            interval,
            sat_positions,
            site_positions,
            edges,
            edge_ranges,
            sunlit,
            sunlit_fraction,
        }
    }

    /// Snapshot carrying only links, for hand-built scenarios. Every
    /// satellite referenced by an edge is treated as fully sunlit.
    pub fn from_edges(interval: IntervalIndex, edges: Vec<GslEdge>) -> Self {
        let n = edges
            .iter()
            .map(|e| e.satellite.0 as usize + 1)
            .max()
            .unwrap_or(0);
        Self::new(
            interval,
            vec![Vec3::ZERO; n],
            BTreeMap::new(),
            edges,
            vec![true; n],
            vec![1.0; n],
        )
    }

    pub fn interval(&self) -> IntervalIndex {
        self.interval
    }

    pub fn num_satellites(&self) -> usize {
        self.sat_positions.len()
    }

    pub fn position(&self, sat: SatelliteId) -> Option<Vec3> {
        self.sat_positions.get(sat.0 as usize).copied()
    }

    pub fn positions(&self) -> &[Vec3] {
        &self.sat_positions
    }

    pub fn site_position(&self, site: GroundSiteId) -> Option<Vec3> {
        self.site_positions.get(&site).copied()
    }

    pub fn edges(&self) -> &[GslEdge] {
        &self.edges
    }

    /// Links from `sat`, ordered by site id.
    pub fn edges_from(&self, sat: SatelliteId) -> &[GslEdge] {
        match self.edge_ranges.get(&sat) {
            Some(&(a, b)) => &self.edges[a..b],
            None => &[],
        }
    }

    pub fn edge(&self, link: LinkId) -> Option<&GslEdge> {
        self.edges_from(link.satellite)
            .iter()
            .find(|e| e.site == link.site)
    }

    pub fn is_sunlit(&self, sat: SatelliteId) -> bool {
        self.sunlit.get(sat.0 as usize).copied().unwrap_or(true)
    }

    /// Fraction of the interval the satellite spends in sunlight.
    pub fn sunlit_fraction(&self, sat: SatelliteId) -> f64 {
        self.sunlit_fraction
            .get(sat.0 as usize)
            .copied()
            .unwrap_or(1.0)
    }
}

/// Tasks of one interval, indexed by id.
#[derive(Clone, Debug, Default)]
pub struct TaskSet {
    tasks: Vec<Task>,
    index: HashMap<TaskId, usize>,
}

impl TaskSet {
    pub fn new(tasks: Vec<Task>) -> Self {
        let index = tasks.iter().enumerate().map(|(i, t)| (t.id, i)).collect();
        Self { tasks, index }
    }

    pub fn get(&self, id: TaskId) -> Option<&Task> {
        self.index.get(&id).map(|&i| &self.tasks[i])
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Task> {
        self.tasks.iter()
    }

    pub fn len(&self) -> usize {
        self.tasks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tasks.is_empty()
    }

    pub fn as_slice(&self) -> &[Task] {
        &self.tasks
    }

    pub fn into_vec(self) -> Vec<Task> {
        self.tasks
    }
}

impl FromIterator<Task> for TaskSet {
    fn from_iter<I: IntoIterator<Item = Task>>(iter: I) -> Self {
        Self::new(iter.into_iter().collect())
    }
}

impl<'a> IntoIterator for &'a TaskSet {
    type Item = &'a Task;
    type IntoIter = std::slice::Iter<'a, Task>;

    fn into_iter(self) -> Self::IntoIter {
        self.tasks.iter()
    }
}

/// Offloading decisions for one interval.
///
/// `x` holds link choices and `y` the scheduled flags. Both are sparse:
/// an absent entry means 0.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Assignment {
    pub x: BTreeMap<(TaskId, LinkId), u8>,
    pub y: BTreeMap<TaskId, u8>,
}

impl Assignment {
    pub fn new() -> Self {
        Self::default()
    }

    /// Schedules `task` on `link`, replacing any previous choice.
    pub fn assign(&mut self, task: TaskId, link: LinkId) {
        let stale: Vec<_> = self
            .x
            .range((task, LinkId::new(SatelliteId(0), GroundSiteId(0)))..)
            .take_while(|((t, _), _)| *t == task)
            .map(|(k, _)| *k)
            .collect();
        for k in stale {
            self.x.remove(&k);
        }
        self.x.insert((task, link), 1);
        self.y.insert(task, 1);
    }

    pub fn is_scheduled(&self, task: TaskId) -> bool {
        self.y.get(&task).copied() == Some(1)
    }

    /// The link a scheduled task was placed on.
    pub fn link_of(&self, task: TaskId) -> Option<LinkId> {
        self.x
            .range((task, LinkId::new(SatelliteId(0), GroundSiteId(0)))..)
            .take_while(|((t, _), _)| *t == task)
            .find(|(_, &v)| v == 1)
            .map(|((_, l), _)| *l)
    }

    /// `(task, link)` pairs with x = 1, in task order.
    pub fn placements(&self) -> impl Iterator<Item = (TaskId, LinkId)> + '_ {
        self.x
            .iter()
            .filter(|(_, &v)| v == 1)
            .map(|(&(t, l), _)| (t, l))
    }

    pub fn scheduled_count(&self) -> usize {
        self.y.values().filter(|&&v| v == 1).count()
    }

    /// Merges another assignment over disjoint tasks.
    pub fn extend(&mut self, other: Assignment) {
        self.x.extend(other.x);
        self.y.extend(other.y);
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum Violation {
    NonBinaryX {
        task: TaskId,
        link: LinkId,
        value: u8,
    },
    NonBinaryY {
        task: TaskId,
        value: u8,
    },
    /// x = 1 while y = 0.
    Coupling {
        task: TaskId,
    },
    /// More than one link carries the task.
    Atomicity {
        task: TaskId,
        links: usize,
    },
    /// x = 1 on a link absent from the snapshot or not leaving the task's source.
    MissingEdge {
        task: TaskId,
        link: LinkId,
    },
    UnknownTask {
        task: TaskId,
    },
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Structural feasibility of an assignment: binary domain, x ≤ y coupling,
/// single-link atomicity and link existence. Link capacity and budget are
/// checked in [`crate::checks`].
pub fn validate_assignment(
    a: &Assignment,
    snapshot: &TopologySnapshot,
    tasks: &TaskSet,
) -> ValidationReport {
    let mut violations = Vec::new();
    let mut links_per_task: BTreeMap<TaskId, usize> = BTreeMap::new();

    for (&task, &value) in &a.y {
        if value > 1 {
            violations.push(Violation::NonBinaryY { task, value });
        }
        if tasks.get(task).is_none() {
            violations.push(Violation::UnknownTask { task });
        }
    }

    for (&(task, link), &value) in &a.x {
        if value > 1 {
            violations.push(Violation::NonBinaryX { task, link, value });
        }
        if value == 0 {
            continue;
        }
        let Some(t) = tasks.get(task) else {
            if !a.y.contains_key(&task) {
                violations.push(Violation::UnknownTask { task });
            }
            continue;
        };
        *links_per_task.entry(task).or_default() += 1;
        if a.y.get(&task).copied().unwrap_or(0) == 0 {
            violations.push(Violation::Coupling { task });
        }
        if link.satellite != t.source || snapshot.edge(link).is_none() {
            violations.push(Violation::MissingEdge { task, link });
        }
    }

    for (task, links) in links_per_task {
        if links > 1 {
            violations.push(Violation::Atomicity { task, links });
        }
    }

    ValidationReport { violations }
}
