//! Simulation of task offloading from a LEO constellation to ground compute
//! sites, with a budgeted greedy orchestrator, comparison baselines and an
//! exact small-instance solver.

pub mod baselines;
pub mod battery;
pub mod checks;
pub mod economics;
pub mod error;
pub mod geo;
pub mod harness;
pub mod model;
pub mod oracle;
pub mod orbit;
pub mod orchestrator;
pub mod sites;
pub mod utility;

pub use battery::{BatteryState, LithiumIon, WearKernel};
pub use economics::{BudgetLedger, PriceBook, PriceTrace};
pub use error::{Error, Result};
pub use model::{
    Assignment, GroundSite, GroundSiteId, GslEdge, IntervalIndex, LinkId, SatelliteId, Task,
    TaskId, TaskSet, TopologySnapshot,
};
pub use orbit::{ConstellationConfig, ContactParams};
pub use orchestrator::{ao2, ao2_parallel, IntervalState};
pub use sites::SiteCatalog;
