//! Post-hoc verification of link-capacity and budget constraints, computed
//! from an assignment's raw x/y entries without reference to any
//! scheduler's running totals.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::economics::JOULES_PER_KWH;
use crate::model::{Assignment, GroundSiteId, LinkId, TaskSet, TopologySnapshot};
use crate::sites::SiteCatalog;

/// Relative slack for floating-point summation order.
pub const RELATIVE_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CapacityViolation {
    pub link: LinkId,
    pub used_bits: f64,
    pub capacity_bits: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BudgetViolation {
    pub spent: f64,
    pub budget: f64,
}

fn exceeds(lhs: f64, rhs: f64) -> bool {
    lhs > rhs + RELATIVE_TOLERANCE * rhs.abs().max(1e-300)
}

/// Links whose assigned volume exceeds bandwidth x interval length.
/// Links missing from the snapshot count as zero capacity.
pub fn check_link_capacity(
    a: &Assignment,
    tasks: &TaskSet,
    snapshot: &TopologySnapshot,
) -> Vec<CapacityViolation> {
    let mut load: BTreeMap<LinkId, f64> = BTreeMap::new();
    for (&(task, link), &x) in &a.x {
        if x == 0 {
            continue;
        }
        if let Some(t) = tasks.get(task) {
            *load.entry(link).or_default() += f64::from(x) * t.volume_bits;
        }
    }
    let duration = snapshot.interval().duration_s;
    load.into_iter()
        .filter_map(|(link, used_bits)| {
            let capacity_bits = snapshot
                .edge(link)
                .map(|e| e.bandwidth_bps * duration)
                .unwrap_or(0.0);
            exceeds(used_bits, capacity_bits).then_some(CapacityViolation {
                link,
                used_bits,
                capacity_bits,
            })
        })
        .collect()
}

/// Total bill of scheduled tasks at their chosen sites, or a violation if it
/// exceeds `budget`.
pub fn check_budget(
    a: &Assignment,
    tasks: &TaskSet,
    sites: &SiteCatalog,
    prices: &BTreeMap<GroundSiteId, f64>,
    budget: f64,
) -> Result<f64, BudgetViolation> {
    let mut spent = 0.0;
    for (&task, &y) in &a.y {
        if y == 0 {
            continue;
        }
        let (Some(t), Some(link)) = (tasks.get(task), a.link_of(task)) else {
            continue;
        };
        let Some(site) = sites.get(link.site) else {
            continue;
        };
        let price = prices.get(&link.site).copied().unwrap_or(0.0);
        let kwh = site.compute_power_w * t.cycles / site.compute_capability_hz / JOULES_PER_KWH;
        spent += f64::from(y) * kwh * price;
    }
    if exceeds(spent, budget) {
        Err(BudgetViolation { spent, budget })
    } else {
        Ok(spent)
    }
}
