use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::baselines::LinkBudget;
use crate::battery::BatteryState;
use crate::error::{Error, Result};
use crate::orbit::{ConstellationConfig, ContactParams};
use crate::utility::UtilityWeights;

#[derive(Copy, Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    Ao2,
    Cct,
    Hroa,
    None,
}

impl Scheme {
    pub const ALL: [Scheme; 4] = [Scheme::Ao2, Scheme::Cct, Scheme::Hroa, Scheme::None];

    pub fn as_str(self) -> &'static str {
        match self {
            Scheme::Ao2 => "ao2",
            Scheme::Cct => "cct",
            Scheme::Hroa => "hroa",
            Scheme::None => "none",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Scheme::ALL
            .into_iter()
            .find(|k| k.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Config(format!("unknown scheme {s:?}")))
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ArrivalModel {
    /// Poisson task counts per active satellite.
    Poisson,
    /// Exactly the mean task count, rounded.
    Fixed,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VolumeDistribution {
    Exponential,
    Fixed,
}

/// Scenario parameters as flat keys, loadable from TOML.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub num_planes: u32,
    pub sats_per_plane: u32,
    pub altitude_km: f64,
    pub inclination_deg: f64,
    pub phase_offset: u32,

    pub interval_s: f64,
    pub horizon_intervals: u32,
    pub elevation_mask_deg: f64,
    pub gsl_bandwidth_bps: f64,

    pub sites_csv: Option<PathBuf>,
    pub prices_csv: Option<PathBuf>,
    /// Flat price for every site without a trace. When unset, each site
    /// draws a base price from `[price_min, price_max]`.
    pub default_price: Option<f64>,
    pub price_min: f64,
    pub price_max: f64,
    /// Relative swing of the daily price cycle around each base price.
    pub diurnal_amplitude: f64,
    pub budget_per_interval_usd: f64,

    pub scheme: Scheme,

    pub arrival: ArrivalModel,
    pub rate_bps: f64,
    pub cycles_per_bit: f64,
    pub volume_distribution: VolumeDistribution,
    pub mean_task_bits: f64,
    pub priority_levels: u32,
    pub active_fraction: f64,
    /// Width of the proximity kernel that concentrates sensing activity
    /// near ground sites; zero picks active satellites uniformly.
    pub activity_sigma_km: f64,

    pub battery_capacity_j: f64,
    pub battery_initial_soc: f64,
    pub harvest_rate_w: f64,
    pub baseline_rate_w: f64,
    pub compute_power_w: f64,
    pub compute_capability_hz: f64,
    pub tx_power_per_mbps_w: f64,

    pub isl_rate_bps: f64,
    pub hroa_reduction: f64,
    pub proximity_km: f64,
    /// Intervals an unscheduled task may wait for offloading before it is
    /// processed on board.
    pub max_defer_intervals: u32,

    pub qos_weight: f64,
    pub sustainability_weight: f64,

    pub rng_seed: u64,
    pub parallel_pipelines: u32,
    /// Fill `algo_runtime_s` with wall-clock timings. Off by default so
    /// metrics files are reproducible byte for byte.
    pub record_runtime: bool,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        let c = ConstellationConfig::default();
        let b = BatteryState::default();
        Self {
            num_planes: c.num_planes,
            sats_per_plane: c.sats_per_plane,
            altitude_km: c.altitude_km,
            inclination_deg: c.inclination_deg,
            phase_offset: c.phase_offset,
            interval_s: 60.0,
            horizon_intervals: 96,
            elevation_mask_deg: 25.0,
            gsl_bandwidth_bps: 1e9,
            sites_csv: None,
            prices_csv: None,
            default_price: None,
            price_min: 0.04,
            price_max: 0.2,
            diurnal_amplitude: 0.2,
            budget_per_interval_usd: 0.5,
            scheme: Scheme::Ao2,
            arrival: ArrivalModel::Poisson,
            rate_bps: 300e6,
            cycles_per_bit: 737.5,
            volume_distribution: VolumeDistribution::Exponential,
            mean_task_bits: 300e6,
            priority_levels: 3,
            active_fraction: 0.05,
            activity_sigma_km: 200.0,
            battery_capacity_j: b.capacity_j,
            battery_initial_soc: 1.0,
            harvest_rate_w: b.harvest_rate_w,
            baseline_rate_w: b.baseline_rate_w,
            compute_power_w: b.compute_power_w,
            compute_capability_hz: b.compute_capability_hz,
            tx_power_per_mbps_w: b.tx_power_per_mbps_w,
            isl_rate_bps: 300e6,
            hroa_reduction: 0.25,
            proximity_km: 500.0,
            max_defer_intervals: 1,
            qos_weight: 1.0,
            sustainability_weight: 1.0,
            rng_seed: 0,
            parallel_pipelines: 1,
            record_runtime: false,
        }
    }
}

impl ScenarioConfig {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(s).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Read {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("scenario config always serializes")
    }

    /// Applies `key=value` overrides. Values are parsed as TOML scalars,
    /// falling back to plain strings.
    pub fn with_overrides<'a, I>(&self, overrides: I) -> Result<Self>
    where
        I: IntoIterator<Item = (&'a str, &'a str)>,
    {
        let mut table = toml::Table::try_from(self).map_err(|e| Error::Config(e.to_string()))?;
        for (key, raw) in overrides {
            let value = format!("v = {raw}")
                .parse::<toml::Table>()
                .ok()
                .and_then(|mut t| t.remove("v"))
                .unwrap_or_else(|| toml::Value::String(raw.to_string()));
            table.insert(key.to_string(), value);
        }
        let cfg: Self = table
            .try_into()
            .map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("interval_s", self.interval_s),
            ("gsl_bandwidth_bps", self.gsl_bandwidth_bps),
            ("cycles_per_bit", self.cycles_per_bit),
            ("mean_task_bits", self.mean_task_bits),
            ("battery_capacity_j", self.battery_capacity_j),
            ("compute_capability_hz", self.compute_capability_hz),
            ("isl_rate_bps", self.isl_rate_bps),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        let non_negative = [
            ("rate_bps", self.rate_bps),
            ("budget_per_interval_usd", self.budget_per_interval_usd),
            ("harvest_rate_w", self.harvest_rate_w),
            ("baseline_rate_w", self.baseline_rate_w),
            ("compute_power_w", self.compute_power_w),
            ("tx_power_per_mbps_w", self.tx_power_per_mbps_w),
            ("proximity_km", self.proximity_km),
            ("activity_sigma_km", self.activity_sigma_km),
            ("diurnal_amplitude", self.diurnal_amplitude),
            ("price_min", self.price_min),
        ];
        for (name, v) in non_negative {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::Config(format!(
                    "{name} must be non-negative, got {v}"
                )));
            }
        }
        if self.price_max < self.price_min {
            return Err(Error::Config("price_max below price_min".into()));
        }
        if self.default_price.is_some_and(|p| p.is_nan() || p < 0.0) {
            return Err(Error::Config("default_price must be non-negative".into()));
        }
        if !(0.0..=1.0).contains(&self.active_fraction) {
            return Err(Error::Config("active_fraction must lie in [0, 1]".into()));
        }
        if !(0.0..=1.0).contains(&self.battery_initial_soc) {
            return Err(Error::Config(
                "battery_initial_soc must lie in [0, 1]".into(),
            ));
        }
        if !(self.hroa_reduction > 0.0 && self.hroa_reduction <= 1.0) {
            return Err(Error::Config("hroa_reduction must lie in (0, 1]".into()));
        }
        if self.priority_levels == 0 {
            return Err(Error::Config("priority_levels must be at least 1".into()));
        }
        if !self.constellation().is_valid() {
            return Err(Error::Config("invalid constellation geometry".into()));
        }
        Ok(())
    }

    pub fn constellation(&self) -> ConstellationConfig {
        ConstellationConfig {
            num_planes: self.num_planes,
            sats_per_plane: self.sats_per_plane,
            altitude_km: self.altitude_km,
            inclination_deg: self.inclination_deg,
            phase_offset: self.phase_offset,
        }
    }

    pub fn contact_params(&self) -> ContactParams {
        ContactParams {
            elevation_mask_deg: self.elevation_mask_deg,
            default_bandwidth_bps: self.gsl_bandwidth_bps,
            ..ContactParams::default()
        }
    }

    pub fn battery(&self) -> BatteryState {
        BatteryState {
            capacity_j: self.battery_capacity_j,
            level_j: self.battery_capacity_j * self.battery_initial_soc,
            harvest_rate_w: self.harvest_rate_w,
            baseline_rate_w: self.baseline_rate_w,
            compute_power_w: self.compute_power_w,
            compute_capability_hz: self.compute_capability_hz,
            tx_power_per_mbps_w: self.tx_power_per_mbps_w,
            life_consumed: 0.0,
        }
    }

    pub fn link_budget(&self) -> LinkBudget {
        LinkBudget {
            isl_rate_bps: self.isl_rate_bps,
            downlink_rate_bps: self.gsl_bandwidth_bps,
            tx_power_per_mbps_w: self.tx_power_per_mbps_w,
        }
    }

    pub fn weights(&self) -> UtilityWeights {
        UtilityWeights {
            qos: self.qos_weight,
            sustainability: self.sustainability_weight,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn toml_round_trip() {
        let cfg = ScenarioConfig {
            rng_seed: 9,
            sites_csv: Some("sites.csv".into()),
            ..ScenarioConfig::default()
        };
        let back = ScenarioConfig::from_toml_str(&cfg.to_toml_string()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn partial_files_use_defaults() {
        let cfg = ScenarioConfig::from_toml_str("num_planes = 4\nscheme = \"cct\"\n").unwrap();
        assert_eq!(cfg.num_planes, 4);
        assert_eq!(cfg.scheme, Scheme::Cct);
        assert_eq!(cfg.sats_per_plane, 22);
        assert!(ScenarioConfig::from_toml_str("bogus = 1").is_err());
        assert!(ScenarioConfig::from_toml_str("interval_s = 0.0").is_err());
    }

    #[test]
    fn overrides() {
        let cfg = ScenarioConfig::default()
            .with_overrides([
                ("budget_per_interval_usd", "0.25"),
                ("scheme", "hroa"),
                ("rng_seed", "3"),
            ])
            .unwrap();
        assert_eq!(cfg.budget_per_interval_usd, 0.25);
        assert_eq!(cfg.scheme, Scheme::Hroa);
        assert_eq!(cfg.rng_seed, 3);
        assert!(ScenarioConfig::default()
            .with_overrides([("hroa_reduction", "0")])
            .is_err());
    }

    #[test]
    fn scheme_names() {
        for s in Scheme::ALL {
            assert_eq!(s.as_str().parse::<Scheme>().unwrap(), s);
        }
        assert!("xyz".parse::<Scheme>().is_err());
    }
}
