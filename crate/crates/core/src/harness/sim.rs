use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;
use std::time::Instant;

use super::config::{ScenarioConfig, Scheme};
use super::metrics::{mean_std, IntervalMetrics, SchemeSummary, Summary};
use super::prices::PriceModel;
use super::taskgen::{generate_tasks, TaskGenParams};
use crate::baselines::{hroa_process, CctRouter, IslTopology, LinkBudget};
use crate::battery::BatteryState;
use crate::error::Result;
use crate::geo::SPEED_OF_LIGHT_KM_S;
use crate::model::{
    GroundSiteId, GslEdge, IntervalIndex, LinkId, SatelliteId, Task, TaskSet, TopologySnapshot,
};
use crate::orbit::{build_snapshot, ConstellationConfig, ContactParams};
use crate::orchestrator::{ao2, ao2_parallel, carry_over, IntervalState};
use crate::sites::{builtin_sites, load_sites_csv, SiteCatalog};

/// Static inputs shared by every scheme in a run.
pub struct World {
    pub cfg: ScenarioConfig,
    pub constellation: ConstellationConfig,
    pub sites: Arc<SiteCatalog>,
    pub prices: PriceModel,
    pub isl: IslTopology,
    pub contact: ContactParams,
    pub taskgen: TaskGenParams,
    pub link: LinkBudget,
}

impl World {
    /// Loads and validates every input; fails before any interval runs.
    pub fn new(cfg: &ScenarioConfig) -> Result<Self> {
        cfg.validate()?;
        let sites = match &cfg.sites_csv {
            Some(path) => load_sites_csv(path)?,
            None => builtin_sites(),
        };
        let sites = Arc::new(SiteCatalog::new(sites)?);
        let prices = PriceModel::new(cfg, sites.sites())?;
        let constellation = cfg.constellation();
        Ok(Self {
            cfg: cfg.clone(),
            constellation,
            prices,
            isl: IslTopology::plus_grid(&constellation),
            contact: cfg.contact_params(),
            taskgen: TaskGenParams::from(cfg),
            link: cfg.link_budget(),
            sites,
        })
    }

    pub fn n_sats(&self) -> usize {
        self.constellation.total()
    }

    pub fn snapshot(&self, interval: u32) -> TopologySnapshot {
        build_snapshot(
            &self.constellation,
            self.sites.sites(),
            IntervalIndex::new(interval, self.cfg.interval_s),
            &self.contact,
        )
    }

    pub fn tasks(&self, snapshot: &TopologySnapshot) -> Vec<Task> {
        generate_tasks(
            &self.taskgen,
            snapshot,
            self.sites.sites(),
            self.cfg.rng_seed,
        )
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
enum Reach {
    /// Only sites near the task's destination.
    Proximal,
    Any,
}

#[derive(Clone, Debug)]
struct Downlink {
    task: Task,
    bits: f64,
}

#[derive(Default)]
struct Step {
    work: Vec<f64>,
    used: HashMap<LinkId, f64>,
    delays: Vec<f64>,
    scheduled: u64,
    onboard: u64,
    delivered: u64,
    pool: u64,
    spent: f64,
    runtime: f64,
}

/// Per-scheme state threaded through the interval loop.
struct SchemeRun {
    scheme: Scheme,
    batteries: Vec<BatteryState>,
    carried: Vec<Task>,
    queue: Vec<Downlink>,
    rows: Vec<IntervalMetrics>,
    pool_series: Vec<u64>,
    delay_sum: f64,
    delay_count: u64,
    delivered: u64,
    onboard: u64,
    expired: u64,
}

fn slant_s(snap: &TopologySnapshot, edge: &GslEdge) -> f64 {
    match (snap.position(edge.satellite), snap.site_position(edge.site)) {
        (Some(a), Some(b)) => a.distance(b) / SPEED_OF_LIGHT_KM_S,
        _ => 0.0,
    }
}

impl SchemeRun {
    fn new(scheme: Scheme, world: &World) -> Self {
        Self {
            scheme,
            batteries: vec![world.cfg.battery(); world.n_sats()],
            carried: Vec::new(),
            queue: Vec::new(),
            rows: Vec::new(),
            pool_series: Vec::new(),
            delay_sum: 0.0,
            delay_count: 0,
            delivered: 0,
            onboard: 0,
            expired: 0,
        }
    }

    /// Latency of sending `bits` of `task` over `edge` now, having waited
    /// since its creation interval.
    fn downlink_delay(
        world: &World,
        snap: &TopologySnapshot,
        task: &Task,
        edge: &GslEdge,
        bits: f64,
    ) -> f64 {
        let wait = f64::from(snap.interval().index - task.created_at) * world.cfg.interval_s;
        wait + bits / edge.bandwidth_bps
            + slant_s(snap, edge)
            + world.sites.delay_s(edge.site, task.destination)
    }

    fn process_onboard(&self, step: &mut Step, task: &Task) {
        step.work[task.source.0 as usize] +=
            self.batteries[task.source.0 as usize].processing_energy(task.cycles);
        step.onboard += 1;
    }

    /// Sends whatever queued downlinks can go out this interval, first come
    /// first served, using only the link capacity left over.
    fn serve_queue(
        &mut self,
        world: &World,
        snap: &TopologySnapshot,
        reach: Reach,
        step: &mut Step,
        count_delay: bool,
    ) {
        let duration = world.cfg.interval_s;
        let mut waiting = Vec::new();
        for job in std::mem::take(&mut self.queue) {
            let t = &job.task;
            let edge = snap
                .edges_from(t.source)
                .iter()
                .filter(|e| {
                    reach == Reach::Any
                        || world.sites.distance_km(e.site, t.destination) <= world.cfg.proximity_km
                })
                .filter(|e| {
                    step.used.get(&e.link()).copied().unwrap_or(0.0) + job.bits
                        <= e.capacity_bits(duration)
                })
                .min_by(|a, b| {
                    world
                        .sites
                        .delay_s(a.site, t.destination)
                        .total_cmp(&world.sites.delay_s(b.site, t.destination))
                        .then(a.site.cmp(&b.site))
                });
            match edge {
                Some(e) => {
                    *step.used.entry(e.link()).or_default() += job.bits;
                    step.work[t.source.0 as usize] += world.link.tx_energy(job.bits);
                    step.delivered += 1;
                    if count_delay {
                        step.delays
                            .push(Self::downlink_delay(world, snap, t, e, job.bits));
                    }
                }
                None => waiting.push(job),
            }
        }
        self.queue = waiting;
    }

    fn step_none(&mut self, world: &World, snap: &TopologySnapshot, new: &[Task], step: &mut Step) {
        let clock = Instant::now();
        for t in new {
            self.process_onboard(step, t);
            self.queue.push(Downlink {
                task: t.clone(),
                bits: t.volume_bits,
            });
        }
        step.scheduled = new.len() as u64;
        step.runtime = clock.elapsed().as_secs_f64();
        self.serve_queue(world, snap, Reach::Proximal, step, true);
    }

    fn step_hroa(&mut self, world: &World, snap: &TopologySnapshot, new: &[Task], step: &mut Step) {
        let clock = Instant::now();
        for t in new {
            let out = hroa_process(
                t,
                &self.batteries[t.source.0 as usize],
                world.cfg.hroa_reduction,
            )
            .expect("reduction validated with the config");
            step.work[t.source.0 as usize] += out.onboard_energy_j;
            step.onboard += 1;
            self.queue.push(Downlink {
                task: t.clone(),
                bits: out.downlink_bits,
            });
        }
        step.scheduled = new.len() as u64;
        step.runtime = clock.elapsed().as_secs_f64();
        self.serve_queue(world, snap, Reach::Any, step, true);
    }

    fn step_cct(&mut self, world: &World, snap: &TopologySnapshot, new: &[Task], step: &mut Step) {
        let clock = Instant::now();
        let mut router = CctRouter::new(&world.isl, snap, world.link);
        for t in new {
            match router.route(t) {
                Some(route) => {
                    for (s, e) in route.per_satellite_energy() {
                        step.work[s.0 as usize] += e;
                    }
                    step.delays.push(route.delay_s);
                    step.scheduled += 1;
                    step.delivered += 1;
                }
                None => self.expired += 1,
            }
        }
        step.runtime = clock.elapsed().as_secs_f64();
    }

    fn step_ao2(
        &mut self,
        world: &World,
        snap: &Arc<TopologySnapshot>,
        prices: &BTreeMap<GroundSiteId, f64>,
        new: &[Task],
        step: &mut Step,
    ) {
        let now = snap.interval().index;
        let mut retry = Vec::new();
        for t in std::mem::take(&mut self.carried) {
            if now - t.created_at > world.cfg.max_defer_intervals {
                self.process_onboard(step, &t);
                let bits = t.volume_bits;
                self.queue.push(Downlink { task: t, bits });
            } else {
                retry.push(t);
            }
        }
        let moved = carry_over(retry, snap, &world.sites, world.cfg.proximity_km);
        for (t, _) in &moved.direct {
            self.process_onboard(step, t);
        }
        // direct deliveries go first in the queue so they take their link now
        let mut queue: Vec<Downlink> = moved
            .direct
            .into_iter()
            .map(|(task, _)| Downlink {
                bits: task.volume_bits,
                task,
            })
            .collect();
        queue.append(&mut self.queue);
        self.queue = queue;
        self.serve_queue(world, snap, Reach::Proximal, step, false);

        let mut pool = moved.retained;
        pool.extend_from_slice(new);
        pool.sort_by_key(|t| t.id);
        step.pool = pool.len() as u64;

        let batteries: BTreeMap<SatelliteId, BatteryState> = pool
            .iter()
            .map(|t| (t.source, self.batteries[t.source.0 as usize].clone()))
            .collect();
        let mut state = IntervalState::new(
            Arc::clone(snap),
            Arc::clone(&world.sites),
            TaskSet::new(pool),
            prices.clone(),
            batteries,
            world.cfg.budget_per_interval_usd,
        );
        state.weights = world.cfg.weights();
        state.link_used_bits = step.used.iter().map(|(&l, &u)| (l, u)).collect();

        let clock = Instant::now();
        let assignment = if world.cfg.parallel_pipelines > 1 {
            ao2_parallel(&mut state, world.cfg.parallel_pipelines as usize)
        } else {
            ao2(&mut state)
        };
        step.runtime = clock.elapsed().as_secs_f64();
        step.spent = state.ledger.spent();

        for (id, link) in assignment.placements() {
            let t = state.tasks.get(id).expect("assignment covers pool tasks");
            let edge = snap.edge(link).expect("assigned links exist");
            step.work[t.source.0 as usize] += world.link.tx_energy(t.volume_bits);
            step.delays
                .push(Self::downlink_delay(world, snap, t, edge, t.volume_bits));
            step.scheduled += 1;
        }
        step.used = state.link_used_bits.iter().map(|(&l, &u)| (l, u)).collect();
        self.carried = state
            .tasks
            .iter()
            .filter(|t| !assignment.is_scheduled(t.id))
            .cloned()
            .collect();

        self.serve_queue(world, snap, Reach::Proximal, step, false);
    }

    fn step(
        &mut self,
        world: &World,
        snap: &Arc<TopologySnapshot>,
        prices: &BTreeMap<GroundSiteId, f64>,
        new: &[Task],
    ) {
        let n = world.n_sats();
        let mut step = Step {
            work: vec![0.0; n],
            pool: new.len() as u64,
            ..Step::default()
        };
        match self.scheme {
            Scheme::Ao2 => self.step_ao2(world, snap, prices, new, &mut step),
            Scheme::Cct => self.step_cct(world, snap, new, &mut step),
            Scheme::Hroa => self.step_hroa(world, snap, new, &mut step),
            Scheme::None => self.step_none(world, snap, new, &mut step),
        }

        let duration = world.cfg.interval_s;
        let mut life = 0.0;
        for (v, b) in self.batteries.iter_mut().enumerate() {
            let harvested =
                b.harvested_energy(snap.sunlit_fraction(SatelliteId(v as u32)), duration);
            let baseline = b.baseline_energy(duration);
            life += b.advance(harvested, baseline, step.work[v]).life;
        }
        let delay_total: f64 = step.delays.iter().sum();
        self.delay_sum += delay_total;
        self.delay_count += step.delays.len() as u64;
        self.delivered += step.delivered;
        self.onboard += step.onboard;
        self.pool_series.push(step.pool);
        self.rows.push(IntervalMetrics {
            interval: snap.interval().index,
            scheme: self.scheme,
            total_energy_j: step.work.iter().sum(),
            total_life_consumed: life,
            tasks_generated: new.len() as u64,
            tasks_scheduled: step.scheduled,
            avg_delay_s: if step.delays.is_empty() {
                0.0
            } else {
                delay_total / step.delays.len() as f64
            },
            budget_spent_usd: step.spent,
            algo_runtime_s: if world.cfg.record_runtime {
                step.runtime
            } else {
                0.0
            },
        });
    }

    fn finish(mut self) -> (Vec<IntervalMetrics>, SchemeSummary) {
        self.expired += (self.carried.len() + self.queue.len()) as u64;
        let rows = std::mem::take(&mut self.rows);
        let energy_series: Vec<f64> = rows.iter().map(|r| r.total_energy_j).collect();
        let life_series: Vec<f64> = rows.iter().map(|r| r.total_life_consumed).collect();
        let runtimes: Vec<f64> = rows.iter().map(|r| r.algo_runtime_s).collect();
        let (runtime_mean_s, runtime_std_s) = mean_std(&runtimes);
        let pooled: u64 = self.pool_series.iter().sum();
        let n = rows.len().max(1) as f64;
        let summary = SchemeSummary {
            scheme: Some(self.scheme),
            intervals: rows.len() as u32,
            total_energy_j: energy_series.iter().sum(),
            mean_energy_j: energy_series.iter().sum::<f64>() / n,
            total_life_consumed: life_series.iter().sum(),
            mean_life_consumed: life_series.iter().sum::<f64>() / n,
            tasks_generated: rows.iter().map(|r| r.tasks_generated).sum(),
            tasks_scheduled: rows.iter().map(|r| r.tasks_scheduled).sum(),
            tasks_delivered: self.delivered,
            tasks_processed_onboard: self.onboard,
            tasks_expired: self.expired,
            avg_delay_s: if self.delay_count == 0 {
                0.0
            } else {
                self.delay_sum / self.delay_count as f64
            },
            budget_spent_usd: rows.iter().map(|r| r.budget_spent_usd).sum(),
            runtime_mean_s,
            runtime_std_s,
            runtime_per_task_ms: if pooled == 0 {
                0.0
            } else {
                runtimes.iter().sum::<f64>() / pooled as f64 * 1e3
            },
            energy_series,
            life_series,
            pool_series: self.pool_series,
        };
        (rows, summary)
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct RunOutput {
    /// Interval-major, schemes in the order requested.
    pub metrics: Vec<IntervalMetrics>,
    pub summary: Summary,
}

impl RunOutput {
    pub fn rows_for(&self, scheme: Scheme) -> impl Iterator<Item = &IntervalMetrics> {
        self.metrics.iter().filter(move |r| r.scheme == scheme)
    }
}

/// Runs `schemes` side by side on identical topology, prices and task
/// streams.
pub fn run_schemes(cfg: &ScenarioConfig, schemes: &[Scheme]) -> Result<RunOutput> {
    let world = World::new(cfg)?;
    let mut runs: Vec<SchemeRun> = schemes.iter().map(|&s| SchemeRun::new(s, &world)).collect();
    for i in 0..cfg.horizon_intervals {
        let snap = Arc::new(world.snapshot(i));
        let tasks = world.tasks(&snap);
        let prices = world.prices.snapshot(world.sites.sites(), i);
        for run in &mut runs {
            run.step(&world, &snap, &prices, &tasks);
        }
    }

    let mut per_scheme = Vec::new();
    let mut summaries = Vec::new();
    for run in runs {
        let (rows, summary) = run.finish();
        per_scheme.push(rows);
        summaries.push(summary);
    }
    let mut metrics = Vec::with_capacity(per_scheme.iter().map(Vec::len).sum());
    for i in 0..cfg.horizon_intervals as usize {
        for rows in &per_scheme {
            metrics.push(rows[i].clone());
        }
    }
    Ok(RunOutput {
        metrics,
        summary: Summary {
            n_sats: world.n_sats(),
            seed: cfg.rng_seed,
            budget_per_interval_usd: cfg.budget_per_interval_usd,
            schemes: if cfg.horizon_intervals == 0 {
                Vec::new()
            } else {
                summaries
            },
        },
    })
}

/// Runs the scheme named in `cfg`.
pub fn run(cfg: &ScenarioConfig) -> Result<RunOutput> {
    run_schemes(cfg, &[cfg.scheme])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> ScenarioConfig {
        ScenarioConfig {
            num_planes: 12,
            sats_per_plane: 10,
            horizon_intervals: 6,
            active_fraction: 0.2,
            rng_seed: 5,
            ..ScenarioConfig::default()
        }
    }

    #[test]
    fn zero_horizon_is_empty() {
        let out = run(&ScenarioConfig {
            horizon_intervals: 0,
            ..small()
        })
        .unwrap();
        assert!(out.metrics.is_empty());
        assert!(out.summary.schemes.is_empty());
    }

    #[test]
    fn schemes_see_the_same_tasks() {
        let out = run_schemes(&small(), &Scheme::ALL).unwrap();
        assert_eq!(out.metrics.len(), 6 * 4);
        for chunk in out.metrics.chunks(4) {
            assert!(chunk
                .iter()
                .all(|r| r.tasks_generated == chunk[0].tasks_generated));
        }
    }

    #[test]
    fn ao2_wears_no_more_than_no_offload() {
        let out = run_schemes(&small(), &[Scheme::Ao2, Scheme::None]).unwrap();
        let ao2 = out.summary.scheme(Scheme::Ao2).unwrap();
        let none = out.summary.scheme(Scheme::None).unwrap();
        assert!(ao2.total_life_consumed <= none.total_life_consumed);
        assert!(ao2.budget_spent_usd <= 0.5 * 6.0 + 1e-12);
    }

    #[test]
    fn bad_inputs_fail_before_running() {
        let cfg = ScenarioConfig {
            sites_csv: Some("/nonexistent/sites.csv".into()),
            ..small()
        };
        assert!(run(&cfg).is_err());
    }
}
