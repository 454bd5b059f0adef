//! Ground-site catalog: loading, the built-in station list, and cached
//! site-to-site terrestrial delays.

use std::collections::HashMap;
use std::path::Path;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::geo::{self, LatLon};
use crate::model::{GroundSite, GroundSiteId};

/// Sites with a precomputed pairwise delay table.
#[derive(Clone, Debug)]
pub struct SiteCatalog {
    sites: Vec<GroundSite>,
    index: HashMap<GroundSiteId, usize>,
    delay: Vec<f64>,
}

impl SiteCatalog {
    pub fn new(sites: Vec<GroundSite>) -> Result<Self> {
        let mut index = HashMap::with_capacity(sites.len());
        for (i, s) in sites.iter().enumerate() {
            if !s.is_valid() {
                return Err(Error::Config(format!("invalid ground site {}", s.id)));
            }
            if index.insert(s.id, i).is_some() {
                return Err(Error::Config(format!("duplicate ground site id {}", s.id)));
            }
        }
        let n = sites.len();
        let mut delay = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                delay[i * n + j] = geo::ground_delay_s(sites[i].location(), sites[j].location());
            }
        }
        Ok(Self {
            sites,
            index,
            delay,
        })
    }

    pub fn get(&self, id: GroundSiteId) -> Option<&GroundSite> {
        self.index.get(&id).map(|&i| &self.sites[i])
    }

    pub fn sites(&self) -> &[GroundSite] {
        &self.sites
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    /// Terrestrial light-speed delay between two catalogued sites.
    ///
    /// # Panics
    /// If either id is not in the catalog.
    pub fn delay_s(&self, a: GroundSiteId, b: GroundSiteId) -> f64 {
        let n = self.sites.len();
        self.delay[self.index[&a] * n + self.index[&b]]
    }

    pub fn distance_km(&self, a: GroundSiteId, b: GroundSiteId) -> f64 {
        self.delay_s(a, b) * geo::SPEED_OF_LIGHT_KM_S
    }
}

impl GroundSite {
    pub fn location(&self) -> LatLon {
        LatLon::new(self.lat_deg, self.lon_deg)
    }
}

#[derive(Debug, Deserialize)]
struct SiteRow {
    site_id: u32,
    lat_deg: f64,
    lon_deg: f64,
    power_w: f64,
    capability_hz: f64,
    #[serde(default)]
    bandwidth_bps: Option<f64>,
}

/// Reads `site_id,lat_deg,lon_deg,power_w,capability_hz[,bandwidth_bps]`.
pub fn load_sites_csv(path: &Path) -> Result<Vec<GroundSite>> {
    let file = std::fs::File::open(path).map_err(|source| Error::Read {
        path: path.to_path_buf(),
        source,
    })?;
    read_sites(file).map_err(|e| match e {
        Error::Csv { source, .. } => Error::Csv {
            path: path.to_path_buf(),
            source,
        },
        other => other,
    })
}

pub fn read_sites<R: std::io::Read>(reader: R) -> Result<Vec<GroundSite>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut out = Vec::new();
    for row in rdr.deserialize::<SiteRow>() {
        let row = row.map_err(|source| Error::Csv {
            path: "<sites>".into(),
            source,
        })?;
        let site = GroundSite {
            id: GroundSiteId(row.site_id),
            name: format!("site-{}", row.site_id),
            lat_deg: row.lat_deg,
            lon_deg: row.lon_deg,
            compute_power_w: row.power_w,
            compute_capability_hz: row.capability_hz,
            bandwidth_bps: row.bandwidth_bps,
            population_weight: 1.0,
            has_price_trace: false,
        };
        if !site.is_valid() {
            return Err(Error::Config(format!(
                "ground site {} has out-of-range fields",
                row.site_id
            )));
        }
        out.push(site);
    }
    if out.is_empty() {
        return Err(Error::Config("site catalog is empty".into()));
    }
    Ok(out)
}

/// Jetson-class compute figures used for every built-in site.
pub const JETSON_POWER_W: f64 = 10.72;
pub const JETSON_CAPABILITY_HZ: f64 = 1.43e9;

/// Illustrative catalog of 24 stations at commercial ground-station regions
/// and large metropolitan areas. Each serves an equal share of the traffic.
pub fn builtin_sites() -> Vec<GroundSite> {
    const SITES: &[(&str, f64, f64)] = &[
        ("oregon", 45.84, -119.70),
        ("ohio", 40.10, -83.10),
        ("ireland", 53.35, -6.26),
        ("stockholm", 59.33, 18.07),
        ("bahrain", 26.07, 50.55),
        ("cape-town", -33.92, 18.42),
        ("sydney", -33.87, 151.21),
        ("seoul", 37.57, 126.98),
        ("hawaii", 21.31, -157.86),
        ("punta-arenas", -53.16, -70.91),
        ("singapore", 1.35, 103.82),
        ("sao-paulo", -23.55, -46.63),
        ("tokyo", 35.68, 139.69),
        ("mumbai", 19.08, 72.88),
        ("delhi", 28.61, 77.21),
        ("lagos", 6.52, 3.38),
        ("cairo", 30.04, 31.24),
        ("mexico-city", 19.43, -99.13),
        ("new-york", 40.71, -74.01),
        ("beijing", 39.90, 116.40),
        ("shanghai", 31.23, 121.47),
        ("jakarta", -6.21, 106.85),
        ("los-angeles", 34.05, -118.24),
        ("moscow", 55.76, 37.62),
    ];
    SITES
        .iter()
        .enumerate()
        .map(|(i, &(name, lat, lon))| GroundSite {
            id: GroundSiteId(i as u32),
            name: name.to_string(),
            lat_deg: lat,
            lon_deg: lon,
            compute_power_w: JETSON_POWER_W,
            compute_capability_hz: JETSON_CAPABILITY_HZ,
            bandwidth_bps: None,
            population_weight: 1.0,
            has_price_trace: false,
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_optional_bandwidth_column() {
        let csv = "site_id,lat_deg,lon_deg,power_w,capability_hz,bandwidth_bps\n\
                   0,10.5,20.0,10.72,1.43e9\n\
                   1,-5.0,179.0,300,2.0e10,5e8\n";
        let sites = read_sites(csv.as_bytes()).unwrap();
        assert_eq!(sites.len(), 2);
        assert_eq!(sites[0].bandwidth_bps, None);
        assert_eq!(sites[1].bandwidth_bps, Some(5e8));
    }

    #[test]
    fn rejects_bad_rows() {
        let csv = "site_id,lat_deg,lon_deg,power_w,capability_hz\n0,95,0,1,1\n";
        assert!(read_sites(csv.as_bytes()).is_err());
        let csv = "site_id,lat_deg,lon_deg,power_w,capability_hz\n0,0,0,1,0\n";
        assert!(read_sites(csv.as_bytes()).is_err());
        let csv = "site_id,lat_deg,lon_deg,power_w,capability_hz\n";
        assert!(read_sites(csv.as_bytes()).is_err());
    }

    #[test]
    fn duplicate_ids_are_rejected() {
        let mut sites = builtin_sites();
        sites[1].id = sites[0].id;
        assert!(SiteCatalog::new(sites).is_err());
    }

    #[test]
    fn delay_table_is_a_metric() {
        let cat = SiteCatalog::new(builtin_sites()).unwrap();
        let ids: Vec<_> = cat.sites().iter().map(|s| s.id).collect();
        for &a in &ids {
            assert_eq!(cat.delay_s(a, a), 0.0);
            for &b in &ids {
                assert_eq!(cat.delay_s(a, b), cat.delay_s(b, a));
                if a != b {
                    assert!(cat.delay_s(a, b) > 0.0);
                }
                for &c in &ids {
                    assert!(cat.delay_s(a, c) <= cat.delay_s(a, b) + cat.delay_s(b, c) + 1e-12);
                }
            }
        }
    }
}
