//! Electricity prices, per-task processing cost and per-interval budget
//! accounting. Prices are USD/kWh throughout.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::model::{GroundSite, GroundSiteId, Task, TaskId};

pub const JOULES_PER_KWH: f64 = 3.6e6;

/// Step-hold price samples for one site.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PriceTrace {
    pub site: GroundSiteId,
    samples: Vec<(u32, f64)>,
}

impl PriceTrace {
    pub fn new(site: GroundSiteId, mut samples: Vec<(u32, f64)>) -> Result<Self> {
        if let Some(&(i, p)) = samples.iter().find(|(_, p)| p.is_nan() || *p < 0.0) {
            return Err(domain(format!(
                "negative price {p} at interval {i} for site {site}"
            )));
        }
        samples.sort_by_key(|&(i, _)| i);
        Ok(Self { site, samples })
    }

    pub fn constant(site: GroundSiteId, price: f64) -> Result<Self> {
        Self::new(site, vec![(0, price)])
    }

    pub fn samples(&self) -> &[(u32, f64)] {
        &self.samples
    }

    /// Latest sample at or before `interval`; the first sample also covers
    /// earlier intervals.
    pub fn price_at(&self, interval: u32) -> Result<f64> {
        let first = self
            .samples
            .first()
            .ok_or_else(|| Error::Config(format!("empty price trace for site {}", self.site)))?;
        let pos = self.samples.partition_point(|&(i, _)| i <= interval);
        Ok(if pos == 0 {
            first.1
        } else {
            self.samples[pos - 1].1
        })
    }
}

/// Price traces for every site, with a fallback for sites without one.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PriceBook {
    traces: BTreeMap<GroundSiteId, PriceTrace>,
    pub default_price: f64,
}

impl PriceBook {
    pub fn new(default_price: f64) -> Self {
        Self {
            traces: BTreeMap::new(),
            default_price,
        }
    }

    pub fn insert(&mut self, trace: PriceTrace) {
        self.traces.insert(trace.site, trace);
    }

    pub fn has_trace(&self, site: GroundSiteId) -> bool {
        self.traces.contains_key(&site)
    }

    pub fn price(&self, site: GroundSiteId, interval: u32) -> f64 {
        self.traces
            .get(&site)
            .and_then(|t| t.price_at(interval).ok())
            .unwrap_or(self.default_price)
    }

    /// Prices of all `sites` for one interval.
    pub fn snapshot(&self, sites: &[GroundSite], interval: u32) -> BTreeMap<GroundSiteId, f64> {
        sites
            .iter()
            .map(|s| (s.id, self.price(s.id, interval)))
            .collect()
    }
}

#[derive(Debug, Deserialize)]
struct PriceRow {
    site_id: u32,
    interval: u32,
    price_usd_per_kwh: f64,
}

/// Reads `site_id,interval,price_usd_per_kwh` rows into a book whose
/// untraced sites fall back to `default_price`.
pub fn read_prices<R: std::io::Read>(reader: R, default_price: f64) -> Result<PriceBook> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut by_site: BTreeMap<GroundSiteId, Vec<(u32, f64)>> = BTreeMap::new();
    for row in rdr.deserialize::<PriceRow>() {
        let row = row.map_err(|source| Error::Csv {
            path: "<prices>".into(),
            source,
        })?;
        by_site
            .entry(GroundSiteId(row.site_id))
            .or_default()
            .push((row.interval, row.price_usd_per_kwh));
    }
    let mut book = PriceBook::new(default_price);
    for (site, samples) in by_site {
        book.insert(PriceTrace::new(site, samples)?);
    }
    Ok(book)
}

pub fn load_prices_csv(path: &Path, default_price: f64) -> Result<PriceBook> {
    let file = std::fs::File::open(path).map_err(|source| Error::Read {
        path: path.to_path_buf(),
        source,
    })?;
    read_prices(file, default_price).map_err(|e| match e {
        Error::Csv { source, .. } => Error::Csv {
            path: path.to_path_buf(),
            source,
        },
        other => other,
    })
}

/// Electricity bill for running `task` at `site`: energy (W x cycles / Hz)
/// converted to kWh, times the site price.
pub fn task_cost(task: &Task, site: &GroundSite, price: f64) -> Result<f64> {
    if site.compute_capability_hz.is_nan() || site.compute_capability_hz <= 0.0 {
        return Err(domain(format!(
            "site {} has no compute capability",
            site.id
        )));
    }
    Ok(site.compute_power_w * task.cycles / site.compute_capability_hz / JOULES_PER_KWH * price)
}

/// Running spend against one interval's budget.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct BudgetLedger {
    pub budget_per_interval: f64,
    spent: f64,
    commitments: Vec<(TaskId, f64)>,
}

impl BudgetLedger {
    pub fn new(budget: f64) -> Self {
        Self {
            budget_per_interval: budget,
            spent: 0.0,
            commitments: Vec::new(),
        }
    }

    pub fn spent(&self) -> f64 {
        self.spent
    }

    pub fn remaining(&self) -> f64 {
        self.budget_per_interval - self.spent
    }

    pub fn commitments(&self) -> &[(TaskId, f64)] {
        &self.commitments
    }

    /// Whether `cost` fits; the bound is inclusive.
    pub fn fits(&self, cost: f64) -> bool {
        self.spent + cost <= self.budget_per_interval
    }

    /// Records the commitment if it fits. A rejection leaves the ledger
    /// untouched.
    pub fn try_commit(&mut self, task: TaskId, cost: f64) -> Result<bool> {
        if cost.is_nan() || cost < 0.0 {
            return Err(domain(format!("negative cost {cost} for task {task}")));
        }
        if !self.fits(cost) {
            return Ok(false);
        }
        self.spent += cost;
        self.commitments.push((task, cost));
        Ok(true)
    }

    /// Folds another ledger's commitments into this one.
    pub fn absorb(&mut self, other: &BudgetLedger) {
        for &(t, c) in &other.commitments {
            self.spent += c;
            self.commitments.push((t, c));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn jetson_site() -> GroundSite {
        GroundSite {
            id: GroundSiteId(0),
            name: "dc".into(),
            lat_deg: 0.0,
            lon_deg: 0.0,
            compute_power_w: 10.72,
            compute_capability_hz: 1.43e9,
            bandwidth_bps: None,
            population_weight: 1.0,
            has_price_trace: false,
        }
    }

    fn task(cycles: f64) -> Task {
        Task {
            id: TaskId(1),
            source: crate::model::SatelliteId(0),
            destination: GroundSiteId(0),
            cycles,
            volume_bits: 1e6,
            created_at: 0,
            priority: 0,
        }
    }

    #[test]
    fn step_hold_lookup() {
        let t = PriceTrace::constant(GroundSiteId(0), 0.1).unwrap();
        assert_eq!(t.price_at(5).unwrap(), 0.1);
        let t = PriceTrace::new(GroundSiteId(0), vec![(10, 0.2), (0, 0.04)]).unwrap();
        assert_eq!(t.price_at(10).unwrap(), 0.2);
        assert_eq!(t.price_at(9).unwrap(), 0.04);
        let late = PriceTrace::new(GroundSiteId(0), vec![(4, 0.07)]).unwrap();
        assert_eq!(late.price_at(0).unwrap(), 0.07);
    }

    #[test]
    fn empty_and_negative_traces() {
        let t = PriceTrace::new(GroundSiteId(0), vec![]).unwrap();
        assert!(matches!(t.price_at(0), Err(Error::Config(_))));
        assert!(PriceTrace::new(GroundSiteId(0), vec![(0, -0.1)]).is_err());
    }

    #[test]
    fn jetson_megabit_cost() {
        let c = task_cost(&task(7.375e8), &jetson_site(), 0.2).unwrap();
        assert!((c - 3.0715e-7).abs() < 1e-11, "{c}");
        assert_eq!(task_cost(&task(0.0), &jetson_site(), 0.2).unwrap(), 0.0);
        assert_eq!(task_cost(&task(7.375e8), &jetson_site(), 0.0).unwrap(), 0.0);
        let dead = GroundSite {
            compute_capability_hz: 0.0,
            ..jetson_site()
        };
        assert!(task_cost(&task(1.0), &dead, 0.1).is_err());
    }

    #[test]
    fn ledger_running_sum() {
        let mut l = BudgetLedger::new(1.0);
        assert!(l.try_commit(TaskId(1), 0.4).unwrap());
        assert!(l.try_commit(TaskId(2), 0.4).unwrap());
        assert!(!l.try_commit(TaskId(3), 0.4).unwrap());
        assert_eq!(l.commitments().len(), 2);
        assert!((l.spent() - 0.8).abs() < 1e-15);

        let mut zero = BudgetLedger::new(0.0);
        assert!(!zero.try_commit(TaskId(1), 1e-12).unwrap());
        assert!(zero.try_commit(TaskId(2), 0.0).unwrap());

        let mut exact = BudgetLedger::new(1.0);
        assert!(exact.try_commit(TaskId(1), 0.25).unwrap());
        assert!(exact.try_commit(TaskId(2), 0.75).unwrap());
        assert!(exact.try_commit(TaskId(3), -1.0).is_err());
    }

    #[test]
    fn price_csv() {
        let csv = "site_id,interval,price_usd_per_kwh\n0,10,0.2\n0,0,0.04\n3,0,0.1\n";
        let book = read_prices(csv.as_bytes(), 0.12).unwrap();
        assert_eq!(book.price(GroundSiteId(0), 9), 0.04);
        assert_eq!(book.price(GroundSiteId(0), 11), 0.2);
        assert_eq!(book.price(GroundSiteId(3), 50), 0.1);
        assert_eq!(book.price(GroundSiteId(7), 0), 0.12);
        assert!(read_prices(
            "site_id,interval,price_usd_per_kwh\n0,0,-1\n".as_bytes(),
            0.1
        )
        .is_err());
    }

    proptest! {
        #[test]
        fn ledger_conservation(budget in 0.0f64..10.0, costs in prop::collection::vec(0.0f64..3.0, 0..40)) {
            let mut l = BudgetLedger::new(budget);
            let mut accepted = 0.0;
            for (i, c) in costs.iter().enumerate() {
                if l.try_commit(TaskId(i as u64), *c).unwrap() {
                    accepted += c;
                }
                prop_assert!(l.spent() <= budget);
            }
            prop_assert!((l.spent() - accepted).abs() < 1e-12);
        }

        #[test]
        fn cost_linearity(cycles in 1.0f64..1e12, price in 0.0f64..1.0, k in 0.1f64..10.0) {
            let s = jetson_site();
            let base = task_cost(&task(cycles), &s, price).unwrap();
            let double = task_cost(&task(2.0 * cycles), &s, price).unwrap();
            prop_assert!((double - 2.0 * base).abs() <= 1e-12 * double.abs().max(1e-300));
            let scaled = GroundSite { compute_power_w: s.compute_power_w * k, compute_capability_hz: s.compute_capability_hz * k, ..s.clone() };
            let c2 = task_cost(&task(cycles), &scaled, price).unwrap();
            prop_assert!((c2 - base).abs() <= 1e-12 * base.abs().max(1e-300));
        }
    }
}
