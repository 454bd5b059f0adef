use std::collections::BTreeMap;
use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::config::ScenarioConfig;
use crate::economics::{load_prices_csv, PriceBook};
use crate::error::Result;
use crate::model::{GroundSite, GroundSiteId};

/// Per-site electricity prices over a run: supplied traces where present,
/// otherwise a flat price or a seeded base price with a daily cycle.
#[derive(Clone, Debug)]
pub struct PriceModel {
    book: Option<PriceBook>,
    flat: Option<f64>,
    base: BTreeMap<GroundSiteId, f64>,
    lon_deg: BTreeMap<GroundSiteId, f64>,
    amplitude: f64,
    range: (f64, f64),
    interval_s: f64,
}

impl PriceModel {
    pub fn new(cfg: &ScenarioConfig, sites: &[GroundSite]) -> Result<Self> {
        let book = match &cfg.prices_csv {
            Some(path) => Some(load_prices_csv(
                path,
                cfg.default_price.unwrap_or(cfg.price_max),
            )?),
            None => None,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
        rng.set_stream(u64::MAX);
        let mut ordered: Vec<&GroundSite> = sites.iter().collect();
        ordered.sort_by_key(|s| s.id);
        let base = ordered
            .iter()
            .map(|s| (s.id, rng.random_range(cfg.price_min..=cfg.price_max)))
            .collect();
        Ok(Self {
            book,
            flat: cfg.default_price,
            base,
            lon_deg: sites.iter().map(|s| (s.id, s.lon_deg)).collect(),
            amplitude: cfg.diurnal_amplitude,
            range: (cfg.price_min, cfg.price_max),
            interval_s: cfg.interval_s,
        })
    }

    pub fn price(&self, site: GroundSiteId, interval: u32) -> f64 {
        if let Some(book) = self.book.as_ref().filter(|b| b.has_trace(site)) {
            return book.price(site, interval);
        }
        if let Some(p) = self.flat {
            return p;
        }
        let base = self.base.get(&site).copied().unwrap_or(self.range.1);
        if self.amplitude == 0.0 {
            return base;
        }
        // local solar hour, cheapest in the early morning
        let lon = self.lon_deg.get(&site).copied().unwrap_or(0.0);
        let hours = f64::from(interval) * self.interval_s / 3600.0 + lon / 15.0;
        let p = base * (1.0 + self.amplitude * (TAU * (hours - 10.0) / 24.0).sin());
        p.clamp(self.range.0, self.range.1)
    }

    pub fn snapshot(&self, sites: &[GroundSite], interval: u32) -> BTreeMap<GroundSiteId, f64> {
        sites
            .iter()
            .map(|s| (s.id, self.price(s.id, interval)))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sites::builtin_sites;

    #[test]
    fn drawn_prices_stay_in_range() {
        let cfg = ScenarioConfig::default();
        let sites = builtin_sites();
        let m = PriceModel::new(&cfg, &sites).unwrap();
        for i in 0..200 {
            for s in &sites {
                let p = m.price(s.id, i);
                assert!((0.04..=0.2).contains(&p), "{p}");
            }
        }
        let again = PriceModel::new(&cfg, &sites).unwrap();
        assert_eq!(m.snapshot(&sites, 7), again.snapshot(&sites, 7));
    }

    #[test]
    fn flat_price() {
        let cfg = ScenarioConfig {
            default_price: Some(0.1),
            ..ScenarioConfig::default()
        };
        let sites = builtin_sites();
        let m = PriceModel::new(&cfg, &sites).unwrap();
        assert!(m.snapshot(&sites, 3).values().all(|&p| p == 0.1));
    }
}
