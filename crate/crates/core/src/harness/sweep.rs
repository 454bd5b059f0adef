use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::config::{ScenarioConfig, Scheme};
use super::instances::{random_instance, InstanceShape};
use super::metrics::{mean_std, RuntimeRow, SweepRow};
use super::sim::{run_schemes, RunOutput};
use crate::checks::{check_budget, check_link_capacity};
use crate::error::Result;
use crate::model::{validate_assignment, Assignment};
use crate::oracle::{exact_solve, OracleLimits};
use crate::orchestrator::ao2;
use crate::utility::interval_utility;

fn sweep_rows(level: f64, out: &RunOutput) -> Vec<SweepRow> {
    out.summary
        .schemes
        .iter()
        .map(|s| SweepRow {
            level,
            scheme: s.scheme.expect("run summaries name their scheme"),
            mean_energy_j: s.mean_energy_j,
            mean_life_consumed: s.mean_life_consumed,
            avg_delay_s: s.avg_delay_s,
            tasks_generated: s.tasks_generated,
            tasks_scheduled: s.tasks_scheduled,
            budget_spent_usd: s.budget_spent_usd,
        })
        .collect()
}

/// One full run per budget level.
pub fn sweep_budget(
    cfg: &ScenarioConfig,
    budgets: &[f64],
    schemes: &[Scheme],
) -> Result<Vec<SweepRow>> {
    let mut rows = Vec::new();
    for &b in budgets {
        let c = ScenarioConfig {
            budget_per_interval_usd: b,
            ..cfg.clone()
        };
        rows.extend(sweep_rows(b, &run_schemes(&c, schemes)?));
    }
    Ok(rows)
}

/// One full run per plane count; the level is the satellite total.
pub fn sweep_constellation(
    cfg: &ScenarioConfig,
    planes: &[u32],
    schemes: &[Scheme],
) -> Result<Vec<SweepRow>> {
    let mut rows = Vec::new();
    for &p in planes {
        let c = ScenarioConfig {
            num_planes: p,
            ..cfg.clone()
        };
        let n = c.constellation().total() as f64;
        rows.extend(sweep_rows(n, &run_schemes(&c, schemes)?));
    }
    Ok(rows)
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub instances: usize,
    /// Instances where the exact optimum fell below the greedy result.
    pub oracle_below_greedy: usize,
    /// Instances where the greedy result fell below the no-offload result.
    pub greedy_below_local: usize,
    /// Greedy or exact assignments failing an independent check.
    pub infeasible: usize,
    pub mean_ratio: f64,
    pub min_ratio: f64,
}

/// Compares the greedy orchestrator with the exact solver on random small
/// intervals. Utility ratios are taken over instances with positive optimum.
pub fn oracle_compare(seed: u64, instances: usize, limits: OracleLimits) -> Result<OracleReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let shape = InstanceShape {
        max_tasks: InstanceShape::ORACLE.max_tasks.min(limits.max_tasks),
        max_edges_per_sat: InstanceShape::ORACLE
            .max_edges_per_sat
            .min(limits.max_edges),
        ..InstanceShape::ORACLE
    };
    let tol = |x: f64| 1e-9 * x.abs().max(1.0);
    let mut report = OracleReport {
        instances,
        min_ratio: f64::INFINITY,
        ..OracleReport::default()
    };
    let mut ratios = Vec::new();
    for _ in 0..instances {
        let base = random_instance(&mut rng, shape);
        let exact = exact_solve(&base, limits)?;
        let mut greedy_state = base.clone();
        let greedy = ao2(&mut greedy_state);

        let u_exact = exact.utility.total;
        let u_greedy = interval_utility(&base, &greedy).total;
        let u_local = interval_utility(&base, &Assignment::new()).total;
        if u_exact < u_greedy - tol(u_greedy) {
            report.oracle_below_greedy += 1;
        }
        if u_greedy < u_local - tol(u_local) {
            report.greedy_below_local += 1;
        }
        for a in [&exact.assignment, &greedy] {
            let ok = validate_assignment(a, &base.snapshot, &base.tasks).is_empty()
                && check_link_capacity(a, &base.tasks, &base.snapshot).is_empty()
                && check_budget(
                    a,
                    &base.tasks,
                    &base.sites,
                    &base.prices,
                    base.ledger.budget_per_interval,
                )
                .is_ok();
            if !ok {
                report.infeasible += 1;
            }
        }
        if u_exact > 0.0 {
            ratios.push(u_greedy / u_exact);
        }
    }
    let (mean, _) = mean_std(&ratios);
    report.mean_ratio = mean;
    report.min_ratio = ratios.iter().copied().fold(f64::INFINITY, f64::min);
    if ratios.is_empty() {
        report.min_ratio = 0.0;
    }
    Ok(report)
}

/// Times the orchestrator per interval at each plane count. Every interval
/// keeps its fastest time over `repeats` identical runs.
pub fn bench_runtime(
    cfg: &ScenarioConfig,
    planes: &[u32],
    repeats: usize,
) -> Result<Vec<RuntimeRow>> {
    let mut rows = Vec::new();
    for &p in planes {
        let c = ScenarioConfig {
            num_planes: p,
            record_runtime: true,
            ..cfg.clone()
        };
        let mut best: Vec<f64> = Vec::new();
        let mut pools: Vec<u64> = Vec::new();
        for _ in 0..repeats.max(1) {
            let out = run_schemes(&c, &[Scheme::Ao2])?;
            let times: Vec<f64> = out.metrics.iter().map(|r| r.algo_runtime_s).collect();
            if best.is_empty() {
                best = times;
                pools = out.summary.schemes[0].pool_series.clone();
            } else {
                for (b, t) in best.iter_mut().zip(times) {
                    *b = b.min(t);
                }
            }
        }
        let per_task: Vec<f64> = best
            .iter()
            .zip(&pools)
            .filter(|(_, &n)| n > 0)
            .map(|(t, &n)| t / n as f64 * 1e3)
            .collect();
        let (mean_interval_s, std_interval_s) = mean_std(&best);
        let (mean_task_ms, std_task_ms) = mean_std(&per_task);
        rows.push(RuntimeRow {
            n_sats: c.constellation().total(),
            mean_interval_s,
            std_interval_s,
            mean_task_ms,
            std_task_ms,
        });
    }
    Ok(rows)
}
