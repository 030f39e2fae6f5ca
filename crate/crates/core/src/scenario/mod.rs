//! Grid-state scenarios: regionalised expansion targets, random retrofit selection, replicated
//! fleet simulation and aggregation into grid load and residential demand.

mod aggregate;
mod fleet;
mod presets;
mod retrofit;
mod run;

pub use aggregate::{accumulate, summarize, LoadAccumulator, SummaryStats};
pub use fleet::{synth_registry, DemandDistribution, FleetSpec, Registry};
pub use presets::{
    regionalize_target, Composition, ExpansionTarget, RegionalizationRatios, ScenarioPreset,
    REFERENCE_REGISTRY_SIZE,
};
pub use retrofit::{apply_plan, composition_of, select_retrofits, RetrofitPlan, SelectionMode};
pub use run::{replicate, run_scenario, ReplicationReport, ScenarioConfig, ScenarioResult, StatSpread};

use crate::data::DataError;
use crate::twin::TwinError;

#[derive(Debug, thiserror::Error)]
pub enum ScenarioError {
    #[error("infeasible target: {0}")]
    Infeasible(String),
    #[error("invalid composition: {0}")]
    InvalidComposition(String),
    #[error("TargetCount mode requires fleet counts")]
    MissingCounts,
    #[error("series cover different horizons")]
    HorizonMismatch,
    #[error("nothing to aggregate")]
    Empty,
    #[error("summary window is empty or outside the horizon")]
    EmptyWindow,
    #[error("replication count must be >= 1")]
    NoReplications,
    #[error(transparent)]
    Twin(#[from] TwinError),
    #[error(transparent)]
    Data(#[from] DataError),
}
