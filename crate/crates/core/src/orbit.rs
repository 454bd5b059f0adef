//! Idealized Walker-delta propagation and ground-contact geometry.
//!
//! Orbits are circular around a spherical, non-precessing Earth. Satellite
//! positions are expressed in an Earth-centred frame that does not rotate
//! with the Earth, so every orbit closes exactly after one period; ground
//! sites are rotated into that frame at the epoch of each query.

use std::collections::{BTreeMap, HashMap};
use std::f64::consts::TAU;
use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::geo::{self, LatLon, Vec3, EARTH_MU, EARTH_RADIUS_KM, EARTH_ROTATION_RAD_S};
use crate::model::{
    GroundSite, GroundSiteId, GslEdge, IntervalIndex, SatelliteId, TopologySnapshot,
};

#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstellationConfig {
    pub num_planes: u32,
    pub sats_per_plane: u32,
    pub altitude_km: f64,
    pub inclination_deg: f64,
    /// Walker phasing factor F.
    pub phase_offset: u32,
}

impl Default for ConstellationConfig {
    /// The 72 x 22 Starlink shell at 550 km, 53 degrees.
    fn default() -> Self {
        Self {
            num_planes: 72,
            sats_per_plane: 22,
            altitude_km: 550.0,
            inclination_deg: 53.0,
            phase_offset: 1,
        }
    }
}

impl ConstellationConfig {
    pub fn is_valid(&self) -> bool {
        self.num_planes >= 1 && self.sats_per_plane >= 1 && self.altitude_km > 0.0
    }

    pub fn total(&self) -> usize {
        self.num_planes as usize * self.sats_per_plane as usize
    }

    pub fn radius_km(&self) -> f64 {
        EARTH_RADIUS_KM + self.altitude_km
    }

    pub fn period_s(&self) -> f64 {
        TAU * (self.radius_km().powi(3) / EARTH_MU).sqrt()
    }

    pub fn plane_of(&self, sat: SatelliteId) -> u32 {
        sat.0 / self.sats_per_plane
    }

    pub fn slot_of(&self, sat: SatelliteId) -> u32 {
        sat.0 % self.sats_per_plane
    }

    pub fn id(&self, plane: u32, slot: u32) -> SatelliteId {
        SatelliteId(plane * self.sats_per_plane + slot)
    }
}

/// Positions of every satellite at time `t` (seconds from epoch), km.
/// The vector index is the satellite id.
pub fn propagate(cfg: &ConstellationConfig, t: f64) -> Vec<Vec3> {
    let r = cfg.radius_km();
    let n = TAU / cfg.period_s();
    let (sin_i, cos_i) = cfg.inclination_deg.to_radians().sin_cos();
    let planes = f64::from(cfg.num_planes);
    let per_plane = f64::from(cfg.sats_per_plane);
    let total = planes * per_plane;

    let mut out = Vec::with_capacity(cfg.total());
    for p in 0..cfg.num_planes {
        let raan = TAU * f64::from(p) / planes;
        let (sin_o, cos_o) = raan.sin_cos();
        let phase = TAU * f64::from(cfg.phase_offset) * f64::from(p) / total;
        for k in 0..cfg.sats_per_plane {
            let u = TAU * f64::from(k) / per_plane + phase + n * t;
            let (sin_u, cos_u) = u.sin_cos();
            out.push(Vec3::new(
                r * (cos_o * cos_u - sin_o * sin_u * cos_i),
                r * (sin_o * cos_u + cos_o * sin_u * cos_i),
                r * sin_u * sin_i,
            ));
        }
    }
    out
}

/// Position of a ground site at time `t` in the propagation frame.
pub fn site_position(site: &GroundSite, t: f64) -> Vec3 {
    LatLon::new(site.lat_deg, site.lon_deg).to_cartesian(EARTH_RADIUS_KM, EARTH_ROTATION_RAD_S * t)
}

/// Sub-satellite point of a position at time `t`, in Earth-fixed coordinates.
pub fn subpoint(position: Vec3, t: f64) -> LatLon {
    let ll = LatLon::from_cartesian(position);
    let mut lon = ll.lon_deg - (EARTH_ROTATION_RAD_S * t).to_degrees();
    lon = (lon + 180.0).rem_euclid(360.0) - 180.0;
    LatLon::new(ll.lat_deg, lon)
}

#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContactParams {
    pub elevation_mask_deg: f64,
    pub default_bandwidth_bps: f64,
    /// Fixed unit sun vector in the propagation frame.
    pub sun_direction: Vec3,
}

impl Default for ContactParams {
    fn default() -> Self {
        Self {
            elevation_mask_deg: 25.0,
            default_bandwidth_bps: 1e9,
            sun_direction: Vec3::new(1.0, 0.0, 0.0),
        }
    }
}

const SUNLIGHT_SAMPLES: usize = 5;

/// Freezes the topology for `interval`. A link exists only if the satellite
/// clears the elevation mask at both the start and the end of the interval.
pub fn build_snapshot(
    cfg: &ConstellationConfig,
    sites: &[GroundSite],
    interval: IntervalIndex,
    params: &ContactParams,
) -> TopologySnapshot {
    let (t0, t1) = (interval.start_s(), interval.end_s());
    let start = propagate(cfg, t0);
    let end = propagate(cfg, t1);

    let site_start: Vec<Vec3> = sites.iter().map(|s| site_position(s, t0)).collect();
    let site_end: Vec<Vec3> = sites.iter().map(|s| site_position(s, t1)).collect();

    let mut edges = Vec::new();
    for (i, (p0, p1)) in start.iter().zip(&end).enumerate() {
        for (j, site) in sites.iter().enumerate() {
            let el0 = geo::elevation_deg(site_start[j], *p0);
            if el0 < params.elevation_mask_deg {
                continue;
            }
            if geo::elevation_deg(site_end[j], *p1) < params.elevation_mask_deg {
                continue;
            }
            edges.push(GslEdge {
                satellite: SatelliteId(i as u32),
                site: site.id,
                bandwidth_bps: site.bandwidth_bps.unwrap_or(params.default_bandwidth_bps),
                elevation_deg: el0,
            });
        }
    }

    let sun = params.sun_direction.unit();
    let sunlit: Vec<bool> = start.iter().map(|&p| geo::sunlit(p, sun)).collect();
    let mut lit_count = vec![0usize; start.len()];
    for k in 0..SUNLIGHT_SAMPLES {
        let t = t0 + interval.duration_s * k as f64 / (SUNLIGHT_SAMPLES - 1) as f64;
        let pos = match k {
            0 => start.clone(),
            k if k == SUNLIGHT_SAMPLES - 1 => end.clone(),
            _ => propagate(cfg, t),
        };
        for (c, p) in lit_count.iter_mut().zip(pos) {
            *c += usize::from(geo::sunlit(p, sun));
        }
    }
    let sunlit_fraction = lit_count
        .into_iter()
        .map(|c| c as f64 / SUNLIGHT_SAMPLES as f64)
        .collect();

    let site_positions: BTreeMap<GroundSiteId, Vec3> = sites
        .iter()
        .zip(site_start)
        .map(|(s, p)| (s.id, p))
        .collect();

    TopologySnapshot::new(
        interval,
        start,
        site_positions,
        edges,
        sunlit,
        sunlit_fraction,
    )
}

/// A maximal run of consecutive intervals during which a link exists.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContactWindow {
    pub satellite: SatelliteId,
    pub site: GroundSiteId,
    pub start: u32,
    /// Inclusive.
    pub end: u32,
}

impl ContactWindow {
    pub fn len(&self) -> u32 {
        self.end - self.start + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

/// Contact windows over `horizon`, sorted by satellite, site, then start.
pub fn contact_windows(
    cfg: &ConstellationConfig,
    sites: &[GroundSite],
    horizon: Range<u32>,
    interval_s: f64,
    params: &ContactParams,
) -> Vec<ContactWindow> {
    if sites.is_empty() {
        return Vec::new();
    }
    let mut open: HashMap<(SatelliteId, GroundSiteId), u32> = HashMap::new();
    let mut windows = Vec::new();
    for idx in horizon.clone() {
        let snap = build_snapshot(cfg, sites, IntervalIndex::new(idx, interval_s), params);
        let mut seen: HashMap<(SatelliteId, GroundSiteId), u32> =
            HashMap::with_capacity(open.len());
        for e in snap.edges() {
            let key = (e.satellite, e.site);
            let start = open.get(&key).copied().unwrap_or(idx);
            seen.insert(key, start);
        }
        for (&(satellite, site), &start) in &open {
            if !seen.contains_key(&(satellite, site)) {
                windows.push(ContactWindow {
                    satellite,
                    site,
                    start,
                    end: idx - 1,
                });
            }
        }
        open = seen;
    }
    if let Some(last) = horizon.end.checked_sub(1) {
        windows.extend(
            open.into_iter()
                .map(|((satellite, site), start)| ContactWindow {
                    satellite,
                    site,
                    start,
                    end: last,
                }),
        );
    }
    windows.sort_by_key(|w| (w.satellite, w.site, w.start));
    windows
}
