//! Robustness maps for query execution plans.
//!
//! A deterministic micro executor ([`exec`]) runs forced plans over a
//! synthetic paged dataset ([`storage`]) and charges every page it touches.
//! [`sweep`] measures plans over 1-D or 2-D selectivity grids, [`analyze`]
//! derives robustness diagnostics from the resulting cost surfaces, and
//! [`render`] draws them as SVG maps.

pub mod analyze;
#[cfg(feature = "cli")]
pub mod cli;
pub mod exec;
pub mod render;
pub mod storage;
pub mod sweep;

pub use exec::{execute_plan, ExecConfig, OutputFlavor, PlanId, PlanResult, Query, SpillPolicy};
pub use storage::{build_dataset, CostWeights, Dataset, DatasetConfig};
pub use sweep::{run_sweep, CostSurface, GridPoint, GridSpec};
