//! Exhaustive solver for small intervals. Every task either stays on board
//! or goes to one of its source's links; combinations breaking link capacity
//! or the budget are discarded and the best composite utility wins.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::checks::RELATIVE_TOLERANCE;
use crate::error::{Error, Result};
use crate::model::{Assignment, LinkId, SatelliteId, Task};
use crate::orchestrator::{feasible_edges, IntervalState};
use crate::utility::{interval_utility, UtilityBreakdown, DELAY_FLOOR_S};

#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleLimits {
    pub max_tasks: usize,
    pub max_edges: usize,
    pub max_states: u128,
}

impl Default for OracleLimits {
    fn default() -> Self {
        Self {
            max_tasks: 12,
            max_edges: 4,
            max_states: 20_000_000,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Solution {
    pub assignment: Assignment,
    pub utility: UtilityBreakdown,
}

/// Size of the search space: the product of (1 + edge count) over tasks.
pub fn enumerate_count<I: IntoIterator<Item = usize>>(edges_per_task: I) -> u128 {
    edges_per_task
        .into_iter()
        .fold(1u128, |acc, e| acc.saturating_mul(e as u128 + 1))
}

struct Choice {
    link: usize,
    site_link: LinkId,
    bits: f64,
    cost: f64,
    delay: f64,
}

struct Search<'a> {
    choices: Vec<Vec<Choice>>,
    sat_of_task: Vec<usize>,
    process_j: Vec<f64>,
    headroom: Vec<f64>,
    budget: f64,
    sats: Vec<SatTerm<'a>>,
    fixed_sustainability: f64,
    // running
    used: Vec<f64>,
    spent: f64,
    count: usize,
    delay: f64,
    onboard: Vec<f64>,
    current: Vec<Option<usize>>,
    best: Option<(f64, Vec<Option<usize>>)>,
}

struct SatTerm<'a> {
    battery: Option<&'a crate::battery::BatteryState>,
    harvested: f64,
    baseline: f64,
}

fn within(lhs: f64, rhs: f64) -> bool {
    lhs <= rhs + RELATIVE_TOLERANCE * rhs.abs()
}

impl Search<'_> {
    fn value(&self) -> f64 {
        let qos = if self.count == 0 {
            0.0
        } else {
            self.count as f64 / self.delay.max(DELAY_FLOOR_S)
        };
        let wear: f64 = self
            .sats
            .iter()
            .zip(&self.onboard)
            .filter_map(|(s, &e)| {
                s.battery
                    .map(|b| b.wear_to(b.remaining_energy(s.harvested, s.baseline, e)))
            })
            .sum();
        qos + self.fixed_sustainability - wear
    }

    fn visit(&mut self, i: usize) {
        if i == self.choices.len() {
            let v = self.value();
            if self.best.as_ref().is_none_or(|(b, _)| v > *b) {
                self.best = Some((v, self.current.clone()));
            }
            return;
        }
        let sat = self.sat_of_task[i];
        self.onboard[sat] += self.process_j[i];
        self.current[i] = None;
        self.visit(i + 1);
        self.onboard[sat] -= self.process_j[i];

        for c in 0..self.choices[i].len() {
            let (link, bits, cost, delay) = {
                let ch = &self.choices[i][c];
                (ch.link, ch.bits, ch.cost, ch.delay)
            };
            if !within(self.used[link] + bits, self.headroom[link])
                || !within(self.spent + cost, self.budget)
            {
                continue;
            }
            let (used, spent, d) = (self.used[link], self.spent, self.delay);
            self.used[link] += bits;
            self.spent += cost;
            self.delay += delay;
            self.count += 1;
            self.current[i] = Some(c);
            self.visit(i + 1);
            self.used[link] = used;
            self.spent = spent;
            self.delay = d;
            self.count -= 1;
        }
        self.current[i] = None;
    }
}

/// Utility-maximizing assignment for `state`, found by full enumeration.
/// Ties go to the first assignment in task-id order with "stay on board"
/// before each link in ascending link order.
pub fn exact_solve(state: &IntervalState, limits: OracleLimits) -> Result<Solution> {
    let mut tasks: Vec<&Task> = state.tasks.iter().collect();
    tasks.sort_by_key(|t| t.id);
    if tasks.len() > limits.max_tasks {
        return Err(Error::OutsideLimits(format!(
            "{} tasks exceeds {}",
            tasks.len(),
            limits.max_tasks
        )));
    }

    let options: Vec<_> = tasks.iter().map(|t| feasible_edges(t, state)).collect();
    if let Some((t, o)) = tasks
        .iter()
        .zip(&options)
        .find(|(_, o)| o.len() > limits.max_edges)
    {
        return Err(Error::OutsideLimits(format!(
            "task {} has {} feasible links, limit {}",
            t.id,
            o.len(),
            limits.max_edges
        )));
    }
    let states = enumerate_count(options.iter().map(Vec::len));
    if states > limits.max_states {
        return Err(Error::TooLarge {
            states,
            limit: limits.max_states,
        });
    }

    let mut link_index: HashMap<LinkId, usize> = HashMap::new();
    let mut headroom = Vec::new();
    let mut sat_index: BTreeMap<SatelliteId, usize> = BTreeMap::new();
    let mut sats = Vec::new();
    let mut sat_of_task = Vec::new();
    let mut process_j = Vec::new();
    let mut choices = Vec::new();
    for (t, opts) in tasks.iter().zip(&options) {
        let s = *sat_index.entry(t.source).or_insert_with(|| {
            let battery = state.batteries.get(&t.source);
            sats.push(SatTerm {
                battery,
                harvested: battery.map_or(0.0, |b| state.harvested(t.source, b)),
                baseline: battery.map_or(0.0, |b| state.baseline(b)),
            });
            sats.len() - 1
        });
        sat_of_task.push(s);
        process_j.push(
            state
                .batteries
                .get(&t.source)
                .map_or(0.0, |b| b.processing_energy(t.cycles)),
        );
        choices.push(
            opts.iter()
                .map(|(edge, cost)| {
                    let link = *link_index.entry(edge.link()).or_insert_with(|| {
                        headroom.push(state.link_headroom(edge));
                        headroom.len() - 1
                    });
                    Choice {
                        link,
                        site_link: edge.link(),
                        bits: t.volume_bits,
                        cost: *cost,
                        delay: state.sites.delay_s(edge.site, t.destination),
                    }
                })
                .collect::<Vec<_>>(),
        );
    }
    let fixed_sustainability = -state
        .batteries
        .iter()
        .filter(|(v, _)| !sat_index.contains_key(v))
        .map(|(v, b)| b.wear_to(b.remaining_energy(state.harvested(*v, b), state.baseline(b), 0.0)))
        .sum::<f64>();

    let n_links = headroom.len();
    let n_sats = sats.len();
    let n_tasks = tasks.len();
    let mut search = Search {
        choices,
        sat_of_task,
        process_j,
        headroom,
        budget: state.ledger.remaining(),
        sats,
        fixed_sustainability,
        used: vec![0.0; n_links],
        spent: 0.0,
        count: 0,
        delay: 0.0,
        onboard: vec![0.0; n_sats],
        current: vec![None; n_tasks],
        best: None,
    };
    search.visit(0);

    let (_, picks) = search
        .best
        .expect("the all-on-board assignment is always feasible");
    let mut assignment = Assignment::new();
    for ((t, pick), choices) in tasks.iter().zip(picks).zip(&search.choices) {
        match pick {
            Some(c) => assignment.assign(t.id, choices[c].site_link),
            None => {
                assignment.y.insert(t.id, 0);
            }
        }
    }
    let utility = interval_utility(state, &assignment);
    Ok(Solution {
        assignment,
        utility,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::battery::BatteryState;
    use crate::model::{
        GroundSite, GroundSiteId, GslEdge, IntervalIndex, TaskId, TaskSet, TopologySnapshot,
    };
    use crate::orchestrator::ao2;
    use crate::sites::SiteCatalog;
    use std::sync::Arc;

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

    fn task(id: u64, sat: u32, dest: u32, mbits: f64) -> Task {
        Task {
            id: TaskId(id),
            source: SatelliteId(sat),
            destination: GroundSiteId(dest),
            cycles: mbits * 1e6 * 737.5,
            volume_bits: mbits * 1e6,
            created_at: 0,
            priority: 0,
        }
    }

    fn edge(sat: u32, site: u32, bps: f64) -> GslEdge {
        GslEdge {
            satellite: SatelliteId(sat),
            site: GroundSiteId(site),
            bandwidth_bps: bps,
            elevation_deg: 45.0,
        }
    }

    fn state(tasks: Vec<Task>, edges: Vec<GslEdge>, budget: f64) -> IntervalState {
        let sites =
            Arc::new(SiteCatalog::new(vec![site(0, 0.0), site(1, 20.0), site(2, 40.0)]).unwrap());
        let snap = Arc::new(TopologySnapshot::from_edges(
            IntervalIndex::new(0, 1.0),
            edges,
        ));
        let prices = BTreeMap::from([
            (GroundSiteId(0), 0.1),
            (GroundSiteId(1), 0.05),
            (GroundSiteId(2), 0.2),
        ]);
        let mut batteries = BTreeMap::new();
        for t in &tasks {
            batteries.insert(
                t.source,
                BatteryState {
                    harvest_rate_w: 0.0,
                    level_j: 5e3,
                    ..BatteryState::default()
                },
            );
        }
        IntervalState::new(snap, sites, TaskSet::new(tasks), prices, batteries, budget)
    }

    #[test]
    fn counts() {
        assert_eq!(enumerate_count([2, 2, 2]), 27);
        assert_eq!(enumerate_count([0, 3]), 4);
        assert_eq!(enumerate_count([4; 12]), 244_140_625);
    }

    #[test]
    fn refuses_large_instances() {
        let tasks: Vec<Task> = (0..12).map(|i| task(i, 0, 0, 0.001)).collect();
        let edges = (0..3).map(|s| edge(0, s, 1e12)).collect();
        let mut s = state(tasks, edges, 1e9);
        let tight = OracleLimits {
            max_states: 1000,
            ..OracleLimits::default()
        };
        assert!(matches!(
            exact_solve(&s, tight),
            Err(Error::TooLarge { .. })
        ));
        s.tasks = TaskSet::new((0..13).map(|i| task(i, 0, 0, 0.001)).collect());
        assert!(matches!(
            exact_solve(&s, OracleLimits::default()),
            Err(Error::OutsideLimits(_))
        ));
    }

    #[test]
    fn zero_tasks() {
        let s = state(vec![], vec![], 1.0);
        let sol = exact_solve(&s, OracleLimits::default()).unwrap();
        assert_eq!(sol.assignment.scheduled_count(), 0);
        assert_eq!(sol.utility.qos, 0.0);
    }

    #[test]
    fn single_task_is_scheduled() {
        let s = state(vec![task(1, 0, 1, 1.0)], vec![edge(0, 0, 1e9)], 1.0);
        let sol = exact_solve(&s, OracleLimits::default()).unwrap();
        assert!(sol.assignment.is_scheduled(TaskId(1)));
        let none = interval_utility(&s, &Assignment::new());
        assert!(sol.utility.total >= none.total);
    }

    #[test]
    fn dominates_greedy() {
        let tasks = vec![
            task(1, 0, 0, 400.0),
            task(2, 0, 1, 300.0),
            task(3, 0, 2, 300.0),
            task(4, 1, 0, 500.0),
            task(5, 1, 2, 200.0),
            task(6, 1, 1, 600.0),
        ];
        let edges = vec![edge(0, 0, 7e8), edge(0, 1, 3e8), edge(1, 2, 8e8)];
        let base = state(tasks, edges, 1.0);
        let sol = exact_solve(&base, OracleLimits::default()).unwrap();
        let mut greedy = base.clone();
        let a = ao2(&mut greedy);
        assert!(sol.utility.total >= interval_utility(&base, &a).total - 1e-12);
        let report =
            crate::model::validate_assignment(&sol.assignment, &base.snapshot, &base.tasks);
        assert!(report.is_empty());
        assert!(
            crate::checks::check_link_capacity(&sol.assignment, &base.tasks, &base.snapshot)
                .is_empty()
        );
    }
}
