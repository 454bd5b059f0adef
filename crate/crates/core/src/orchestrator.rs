//! Adaptive offloading orchestration: the ranked greedy assignment of
//! satellite tasks to ground sites under link-capacity and budget limits.
//!
//! Satellites are ranked once per interval by marginal gain. Each
//! satellite's tasks are then visited in priority order; a task is placed
//! on the cheapest site whose link still has room for its data and whose
//! bill still fits the remaining budget. Link usage and spend are charged
//! at commit time, so later tasks see the reduced headroom.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::battery::BatteryState;
use crate::economics::{task_cost, BudgetLedger};
use crate::model::{
    Assignment, GroundSiteId, GslEdge, LinkId, SatelliteId, Task, TaskSet, TopologySnapshot,
};
use crate::sites::SiteCatalog;
use crate::utility::{rank_satellites, SatelliteRank, UtilityWeights};

/// Everything the orchestrator needs for one interval, plus the running
/// left-hand sides of the capacity and budget constraints.
#[derive(Clone, Debug)]
pub struct IntervalState {
    pub snapshot: Arc<TopologySnapshot>,
    pub sites: Arc<SiteCatalog>,
    pub tasks: TaskSet,
    /// USD/kWh per site for this interval.
    pub prices: BTreeMap<GroundSiteId, f64>,
    pub batteries: BTreeMap<SatelliteId, BatteryState>,
    pub ledger: BudgetLedger,
    pub link_used_bits: BTreeMap<LinkId, f64>,
    pub weights: UtilityWeights,
}

impl IntervalState {
    pub fn new(
        snapshot: Arc<TopologySnapshot>,
        sites: Arc<SiteCatalog>,
        tasks: TaskSet,
        prices: BTreeMap<GroundSiteId, f64>,
        batteries: BTreeMap<SatelliteId, BatteryState>,
        budget: f64,
    ) -> Self {
        Self {
            snapshot,
            sites,
            tasks,
            prices,
            batteries,
            ledger: BudgetLedger::new(budget),
            link_used_bits: BTreeMap::new(),
            weights: UtilityWeights::default(),
        }
    }

    pub fn duration_s(&self) -> f64 {
        self.snapshot.interval().duration_s
    }

    pub fn harvested(&self, v: SatelliteId, b: &BatteryState) -> f64 {
        b.harvested_energy(self.snapshot.sunlit_fraction(v), self.duration_s())
    }

    pub fn baseline(&self, b: &BatteryState) -> f64 {
        b.baseline_energy(self.duration_s())
    }

    pub fn price(&self, site: GroundSiteId) -> f64 {
        self.prices.get(&site).copied().unwrap_or(0.0)
    }

    /// Electricity bill for running `task` at `site` this interval.
    ///
    /// # Panics
    /// If `site` is not catalogued.
    pub fn cost(&self, task: &Task, site: GroundSiteId) -> f64 {
        let s = self
            .sites
            .get(site)
            .unwrap_or_else(|| panic!("site {site} missing from catalog"));
        task_cost(task, s, self.price(site)).expect("catalogued sites have positive capability")
    }

    /// Bits `link` can still carry this interval.
    pub fn link_headroom(&self, edge: &GslEdge) -> f64 {
        edge.capacity_bits(self.duration_s())
            - self
                .link_used_bits
                .get(&edge.link())
                .copied()
                .unwrap_or(0.0)
    }
}

/// Tasks grouped by source satellite, each group in priority then id order.
pub fn candidate_set(tasks: &TaskSet) -> BTreeMap<SatelliteId, Vec<&Task>> {
    let mut groups: BTreeMap<SatelliteId, Vec<&Task>> = BTreeMap::new();
    for t in tasks {
        groups.entry(t.source).or_default().push(t);
    }
    for list in groups.values_mut() {
        list.sort_by_key(|t| (t.priority, t.id));
    }
    groups
}

fn feasible_with(
    task: &Task,
    state: &IntervalState,
    ledger: &BudgetLedger,
    used: &BTreeMap<LinkId, f64>,
) -> Vec<(GslEdge, f64)> {
    let duration = state.duration_s();
    state
        .snapshot
        .edges_from(task.source)
        .iter()
        .filter(|e| {
            let u = used.get(&e.link()).copied().unwrap_or(0.0);
            u + task.volume_bits <= e.capacity_bits(duration)
        })
        .filter_map(|e| {
            let cost = state.cost(task, e.site);
            ledger.fits(cost).then_some((*e, cost))
        })
        .collect()
}

/// Links from the task's source that can still take its data and whose bill
/// fits the remaining budget, each with that bill.
pub fn feasible_edges(task: &Task, state: &IntervalState) -> Vec<(GslEdge, f64)> {
    feasible_with(task, state, &state.ledger, &state.link_used_bits)
}

/// Cheapest option; ties by delay to the destination, then site id.
fn pick(task: &Task, options: &[(GslEdge, f64)], sites: &SiteCatalog) -> Option<(GslEdge, f64)> {
    options.iter().copied().min_by(|(a, ca), (b, cb)| {
        ca.total_cmp(cb)
            .then_with(|| {
                sites
                    .delay_s(a.site, task.destination)
                    .total_cmp(&sites.delay_s(b.site, task.destination))
            })
            .then(a.site.cmp(&b.site))
    })
}

/// Visits `order` and places what fits. Unplaced tasks get an explicit
/// y = 0 entry.
fn schedule_in_order(
    order: &[SatelliteId],
    groups: &BTreeMap<SatelliteId, Vec<&Task>>,
    state: &IntervalState,
    ledger: &mut BudgetLedger,
    used: &mut BTreeMap<LinkId, f64>,
    skip: impl Fn(&Task) -> bool,
    out: &mut Assignment,
) {
    for v in order {
        let Some(tasks) = groups.get(v) else { continue };
        for task in tasks.iter().filter(|t| !skip(t)) {
            let options = feasible_with(task, state, ledger, used);
            match pick(task, &options, &state.sites) {
                Some((edge, cost)) => {
                    let accepted = ledger
                        .try_commit(task.id, cost)
                        .expect("task costs are non-negative");
                    debug_assert!(accepted);
                    *used.entry(edge.link()).or_default() += task.volume_bits;
                    out.assign(task.id, edge.link());
                }
                None => {
                    out.y.entry(task.id).or_insert(0);
                }
            }
        }
    }
}

/// Ranking used by [`ao2`], exposed for diagnostics.
pub fn ranking(state: &IntervalState) -> Vec<SatelliteRank> {
    rank_satellites(&candidate_set(&state.tasks), state)
}

/// Runs the greedy orchestration sequentially, charging `state.ledger` and
/// `state.link_used_bits`. Infeasible tasks come back with y = 0.
pub fn ao2(state: &mut IntervalState) -> Assignment {
    let groups = candidate_set(&state.tasks);
    let order: Vec<SatelliteId> = rank_satellites(&groups, state)
        .into_iter()
        .map(|r| r.satellite)
        .collect();

    let mut ledger = std::mem::take(&mut state.ledger);
    let mut used = std::mem::take(&mut state.link_used_bits);
    let mut out = Assignment::new();
    schedule_in_order(
        &order,
        &groups,
        state,
        &mut ledger,
        &mut used,
        |_| false,
        &mut out,
    );
    state.ledger = ledger;
    state.link_used_bits = used;
    out
}

/// Parallel variant: the remaining budget is split evenly across
/// `pipelines` ledgers and the ranked satellites are dealt round-robin to
/// them. Leftover budget is pooled for a final sequential pass over the
/// tasks the pipelines could not place.
///
/// Every link has exactly one satellite endpoint and each satellite lives
/// in one pipeline, so pipelines never contend for link capacity.
pub fn ao2_parallel(state: &mut IntervalState, pipelines: usize) -> Assignment {
    if pipelines <= 1 {
        return ao2(state);
    }
    let groups = candidate_set(&state.tasks);
    let order: Vec<SatelliteId> = rank_satellites(&groups, state)
        .into_iter()
        .map(|r| r.satellite)
        .collect();

    let share = state.ledger.remaining().max(0.0) / pipelines as f64;
    let lanes: Vec<Vec<SatelliteId>> = (0..pipelines)
        .map(|i| order.iter().skip(i).step_by(pipelines).copied().collect())
        .collect();

    let shared: &IntervalState = state;
    let results: Vec<(Assignment, BudgetLedger, BTreeMap<LinkId, f64>)> =
        std::thread::scope(|scope| {
            let handles: Vec<_> = lanes
                .iter()
                .map(|lane| {
                    let groups = &groups;
                    scope.spawn(move || {
                        let mut ledger = BudgetLedger::new(share);
                        let mut used: BTreeMap<LinkId, f64> = lane
                            .iter()
                            .flat_map(|v| shared.snapshot.edges_from(*v))
                            .filter_map(|e| {
                                shared.link_used_bits.get(&e.link()).map(|&u| (e.link(), u))
                            })
                            .collect();
                        let mut out = Assignment::new();
                        schedule_in_order(
                            lane,
                            groups,
                            shared,
                            &mut ledger,
                            &mut used,
                            |_| false,
                            &mut out,
                        );
                        (out, ledger, used)
                    })
                })
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("pipeline panicked"))
                .collect()
        });

    let mut merged = Assignment::new();
    let mut ledger = std::mem::take(&mut state.ledger);
    let mut used = std::mem::take(&mut state.link_used_bits);
    for (a, l, u) in results {
        merged.extend(a);
        ledger.absorb(&l);
        used.extend(u);
    }

    let placed = merged.clone();
    let mut second = Assignment::new();
    schedule_in_order(
        &order,
        &groups,
        state,
        &mut ledger,
        &mut used,
        |t| placed.is_scheduled(t.id),
        &mut second,
    );
    for (task, link) in second.placements().collect::<Vec<_>>() {
        merged.assign(task, link);
    }

    state.ledger = ledger;
    state.link_used_bits = used;
    merged
}

/// Result of moving unscheduled tasks into the next interval.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct CarryOver {
    /// Tasks that re-enter the next interval's pool.
    pub retained: Vec<Task>,
    /// Tasks leaving the pool for direct delivery over the given link.
    pub direct: Vec<(Task, LinkId)>,
}

/// Carries unscheduled tasks forward. A task whose source can see a site
/// within `proximity_km` of its destination in `next` is handed to direct
/// delivery on the closest such site instead.
pub fn carry_over(
    unscheduled: Vec<Task>,
    next: &TopologySnapshot,
    sites: &SiteCatalog,
    proximity_km: f64,
) -> CarryOver {
    let mut out = CarryOver::default();
    for task in unscheduled {
        let near = next
            .edges_from(task.source)
            .iter()
            .map(|e| (sites.distance_km(e.site, task.destination), e.site))
            .filter(|(d, _)| *d <= proximity_km)
            .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        match near {
            Some((_, site)) => {
                let link = LinkId::new(task.source, site);
                out.direct.push((task, link));
            }
            None => out.retained.push(task),
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{GroundSite, IntervalIndex, TaskId};

    fn site(id: u32, lon: f64) -> GroundSite {
        GroundSite {
            id: GroundSiteId(id),
            name: format!("s{id}"),
            lat_deg: 0.0,
            lon_deg: lon,
            compute_power_w: 10.72,
            compute_capability_hz: 1.43e9,
            bandwidth_bps: None,
            population_weight: 1.0,
            has_price_trace: false,
        }
    }

    fn edge(sat: u32, site: u32, bw: f64) -> GslEdge {
        GslEdge {
            satellite: SatelliteId(sat),
            site: GroundSiteId(site),
            bandwidth_bps: bw,
            elevation_deg: 60.0,
        }
    }

    fn task(id: u64, source: u32, dest: u32, mbits: f64, priority: u32) -> Task {
        Task {
            id: TaskId(id),
            source: SatelliteId(source),
            destination: GroundSiteId(dest),
            cycles: mbits * 1e6 * 737.5,
            volume_bits: mbits * 1e6,
            created_at: 0,
            priority,
        }
    }

    fn state(edges: Vec<GslEdge>, tasks: Vec<Task>, prices: &[f64], budget: f64) -> IntervalState {
        let sites: Vec<GroundSite> = (0..prices.len())
            .map(|i| site(i as u32, i as f64 * 5.0))
            .collect();
        let prices = sites.iter().zip(prices).map(|(s, &p)| (s.id, p)).collect();
        let snapshot = TopologySnapshot::from_edges(IntervalIndex::new(0, 1.0), edges);
        let batteries = tasks
            .iter()
            .map(|t| (t.source, BatteryState::default()))
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
    fn candidate_set_partitions_tasks() {
        let ts = TaskSet::new(vec![
            task(3, 0, 0, 1.0, 1),
            task(1, 0, 0, 1.0, 2),
            task(2, 0, 0, 1.0, 1),
            task(4, 5, 0, 1.0, 0),
        ]);
        let groups = candidate_set(&ts);
        assert_eq!(groups.len(), 2);
        let ids: Vec<u64> = groups[&SatelliteId(0)].iter().map(|t| t.id.0).collect();
        assert_eq!(ids, vec![2, 3, 1]);
        assert_eq!(groups[&SatelliteId(5)].len(), 1);
        assert!(candidate_set(&TaskSet::default()).is_empty());
    }

    #[test]
    fn feasible_edges_bounds_are_inclusive() {
        let t = task(1, 0, 0, 1.0, 0);
        let mut s = state(vec![edge(0, 0, 1e6)], vec![t.clone()], &[0.1], 1.0);
        let cost = s.cost(&t, GroundSiteId(0));
        s.ledger = BudgetLedger::new(cost);
        assert_eq!(feasible_edges(&t, &s).len(), 1);

        // 0.5 Mb link for a 1 Mb task, unlimited budget
        let mut small = state(
            vec![edge(0, 0, 0.5e6)],
            vec![t.clone()],
            &[0.1],
            f64::INFINITY,
        );
        assert!(feasible_edges(&t, &small).is_empty());
        small.ledger = BudgetLedger::new(1e9);
        assert!(feasible_edges(&t, &small).is_empty());

        let none = state(vec![edge(1, 0, 1e9)], vec![t.clone()], &[0.1], 1.0);
        assert!(feasible_edges(&t, &none).is_empty());
    }

    #[test]
    fn zero_budget_schedules_nothing() {
        let tasks = vec![task(1, 0, 0, 1.0, 0), task(2, 1, 0, 1.0, 0)];
        let mut s = state(vec![edge(0, 0, 1e9), edge(1, 0, 1e9)], tasks, &[0.1], 0.0);
        let a = ao2(&mut s);
        assert_eq!(a.scheduled_count(), 0);
        assert_eq!(a.y.len(), 2);
    }

    #[test]
    fn single_task_single_edge() {
        let mut s = state(
            vec![edge(0, 0, 1e9)],
            vec![task(1, 0, 0, 1.0, 0)],
            &[0.1],
            1.0,
        );
        let a = ao2(&mut s);
        assert!(a.is_scheduled(TaskId(1)));
        assert_eq!(
            a.link_of(TaskId(1)),
            Some(LinkId::new(SatelliteId(0), GroundSiteId(0)))
        );
    }

    #[test]
    fn cheapest_site_wins() {
        let mut s = state(
            vec![edge(0, 0, 1e9), edge(0, 1, 1e9)],
            vec![task(1, 0, 0, 1.0, 0)],
            &[0.2, 0.05],
            1.0,
        );
        let a = ao2(&mut s);
        assert_eq!(a.link_of(TaskId(1)).unwrap().site, GroundSiteId(1));
    }

    #[test]
    fn price_tie_goes_to_nearer_site() {
        // destination is site 2; site 1 (5 deg) is nearer to it than site 0 (0 deg)
        let mut s = state(
            vec![edge(0, 0, 1e9), edge(0, 1, 1e9)],
            vec![task(1, 0, 2, 1.0, 0)],
            &[0.1, 0.1, 0.1],
            1.0,
        );
        let a = ao2(&mut s);
        assert_eq!(a.link_of(TaskId(1)).unwrap().site, GroundSiteId(1));
    }

    #[test]
    fn failed_tasks_do_not_stop_the_satellite() {
        // link takes 1.5 Mb: the 2 Mb priority-0 task fails, the 1 Mb one fits
        let mut s = state(
            vec![edge(0, 0, 1.5e6)],
            vec![task(1, 0, 0, 2.0, 0), task(2, 0, 0, 1.0, 1)],
            &[0.1],
            1.0,
        );
        let a = ao2(&mut s);
        assert!(!a.is_scheduled(TaskId(1)));
        assert!(a.is_scheduled(TaskId(2)));
        assert_eq!(
            s.link_used_bits[&LinkId::new(SatelliteId(0), GroundSiteId(0))],
            1e6
        );
    }

    #[test]
    fn carry_over_splits_direct_and_retained() {
        let sites = SiteCatalog::new(vec![site(0, 0.0), site(1, 3.0), site(2, 40.0)]).unwrap();
        let snap = TopologySnapshot::from_edges(
            IntervalIndex::new(1, 60.0),
            vec![edge(0, 1, 1e9), edge(1, 2, 1e9)],
        );
        // site 1 is ~334 km from site 0; site 2 is far from site 0
        let out = carry_over(
            vec![
                task(1, 0, 0, 1.0, 0),
                task(2, 1, 0, 1.0, 0),
                task(3, 7, 0, 1.0, 0),
            ],
            &snap,
            &sites,
            500.0,
        );
        assert_eq!(out.direct.len(), 1);
        assert_eq!(out.direct[0].0.id, TaskId(1));
        assert_eq!(
            out.direct[0].1,
            LinkId::new(SatelliteId(0), GroundSiteId(1))
        );
        let kept: Vec<u64> = out.retained.iter().map(|t| t.id.0).collect();
        assert_eq!(kept, vec![2, 3]);
        assert_eq!(
            carry_over(vec![], &snap, &sites, 500.0),
            CarryOver::default()
        );
    }
}
