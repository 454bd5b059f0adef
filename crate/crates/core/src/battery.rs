//! Satellite energy ledger and lithium-ion lifespan wear.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

/// Depth-of-discharge wear kernel.
///
/// Wear between two depths is the integral of [`WearKernel::integrand`];
/// implementors supply the antiderivative used to evaluate it exactly.
pub trait WearKernel {
    fn integrand(&self, depth: f64) -> f64;
    fn antiderivative(&self, depth: f64) -> f64;

    /// Wear accumulated while discharging from `d_begin` to `d_end`.
    /// Negative when the battery charges.
    fn consumption(&self, d_begin: f64, d_end: f64) -> Result<f64> {
        for d in [d_begin, d_end] {
            if !(0.0..=1.0).contains(&d) {
                return Err(domain(format!("depth of discharge {d} outside [0, 1]")));
            }
        }
        Ok(self.antiderivative(d_end) - self.antiderivative(d_begin))
    }
}

/// `10^{0.8(D-1)} (1 + 0.8 D ln 10)`, whose antiderivative is
/// `D * 10^{0.8(D-1)}`.
#[derive(Copy, Clone, Debug, Default, PartialEq, Eq)]
pub struct LithiumIon;

impl WearKernel for LithiumIon {
    fn integrand(&self, d: f64) -> f64 {
        10f64.powf(0.8 * (d - 1.0)) * (1.0 + 0.8 * d * std::f64::consts::LN_10)
    }

    fn antiderivative(&self, d: f64) -> f64 {
        d * 10f64.powf(0.8 * (d - 1.0))
    }
}

/// Lithium-ion wear between two depths of discharge.
pub fn life_consumption(d_begin: f64, d_end: f64) -> Result<f64> {
    LithiumIon.consumption(d_begin, d_end)
}

/// Negated total wear across satellites.
pub fn sustainability_utility<I: IntoIterator<Item = f64>>(per_satellite_life: I) -> f64 {
    -per_satellite_life.into_iter().sum::<f64>()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BatteryState {
    pub capacity_j: f64,
    /// Charge at the start of the current interval.
    pub level_j: f64,
    pub harvest_rate_w: f64,
    pub baseline_rate_w: f64,
    pub compute_power_w: f64,
    pub compute_capability_hz: f64,
    pub tx_power_per_mbps_w: f64,
    /// Accumulated positive wear.
    pub life_consumed: f64,
}

impl Default for BatteryState {
    /// 40 Wh pack, 120 W array, 30 W housekeeping, Jetson-class payload.
    fn default() -> Self {
        Self {
            capacity_j: 1.44e5,
            level_j: 1.44e5,
            harvest_rate_w: 120.0,
            baseline_rate_w: 30.0,
            compute_power_w: 10.72,
            compute_capability_hz: 1.43e9,
            tx_power_per_mbps_w: 0.08,
            life_consumed: 0.0,
        }
    }
}

/// Outcome of advancing a battery through one interval.
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct IntervalWear {
    pub d_begin: f64,
    pub d_end: f64,
    /// Wear added to the accumulator; zero for charging intervals.
    pub life: f64,
}

impl BatteryState {
    pub fn is_valid(&self) -> bool {
        self.capacity_j > 0.0 && (0.0..=self.capacity_j).contains(&self.level_j)
    }

    pub fn harvested_energy(&self, sunlit_fraction: f64, duration_s: f64) -> f64 {
        debug_assert!((0.0..=1.0).contains(&sunlit_fraction));
        self.harvest_rate_w * sunlit_fraction * duration_s
    }

    pub fn baseline_energy(&self, duration_s: f64) -> f64 {
        self.baseline_rate_w * duration_s
    }

    /// Energy to execute `cycles` on the on-board processor.
    pub fn processing_energy(&self, cycles: f64) -> f64 {
        self.compute_power_w * cycles / self.compute_capability_hz
    }

    /// Seconds of on-board compute needed for `cycles`.
    pub fn processing_time(&self, cycles: f64) -> f64 {
        cycles / self.compute_capability_hz
    }

    /// Radio energy to send `bits`; independent of the link rate since power
    /// scales with rate while airtime scales inversely.
    pub fn transmission_energy(&self, bits: f64) -> f64 {
        self.tx_power_per_mbps_w * bits / 1e6
    }

    fn clamp_level(&self, level: f64) -> f64 {
        level.clamp(0.0, self.capacity_j)
    }

    /// End-of-interval charge when the listed on-board processing runs.
    pub fn remaining_energy(
        &self,
        harvested_j: f64,
        baseline_j: f64,
        unscheduled_process_j: f64,
    ) -> f64 {
        self.clamp_level(self.level_j + harvested_j - baseline_j - unscheduled_process_j)
    }

    /// End-of-interval charge if every task on the satellite runs locally.
    pub fn remaining_energy_local(
        &self,
        harvested_j: f64,
        baseline_j: f64,
        all_process_j: f64,
    ) -> f64 {
        self.remaining_energy(harvested_j, baseline_j, all_process_j)
    }

    pub fn dod(&self, level_j: f64) -> f64 {
        ((self.capacity_j - level_j) / self.capacity_j).clamp(0.0, 1.0)
    }

    /// Wear this interval would cause, given its end-of-interval level.
    /// May be negative when charging.
    pub fn wear_to(&self, level_end_j: f64) -> f64 {
        LithiumIon
            .consumption(self.dod(self.level_j), self.dod(level_end_j))
            .expect("depths are clamped to [0, 1]")
    }

    /// Advances one interval: applies harvest, baseline draw and on-board
    /// work (processing plus transmission), then accumulates wear.
    pub fn advance(
        &mut self,
        harvested_j: f64,
        baseline_j: f64,
        onboard_work_j: f64,
    ) -> IntervalWear {
        let end = self.remaining_energy(harvested_j, baseline_j, onboard_work_j);
        let d_begin = self.dod(self.level_j);
        let d_end = self.dod(end);
        let life = self.wear_to(end).max(0.0);
        self.level_j = end;
        self.life_consumed += life;
        IntervalWear {
            d_begin,
            d_end,
            life,
        }
    }
}
