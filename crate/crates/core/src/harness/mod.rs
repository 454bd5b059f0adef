//! Scenario configuration, task generation, the interval loop and metrics
//! output.

pub mod config;
pub mod instances;
pub mod metrics;
pub mod prices;
pub mod sim;
pub mod sweep;
pub mod taskgen;

pub use config::{ArrivalModel, ScenarioConfig, Scheme, VolumeDistribution};
pub use metrics::{emit, Format, IntervalMetrics, RuntimeRow, SchemeSummary, Summary, SweepRow};
pub use sim::{run, run_schemes, RunOutput, World};
pub use sweep::{bench_runtime, oracle_compare, sweep_budget, sweep_constellation, OracleReport};
