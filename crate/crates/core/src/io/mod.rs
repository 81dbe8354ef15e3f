//! Configuration, initial conditions, checkpoints, runs and sweeps.

pub mod checkpoint;
pub mod config;
pub mod presets;
pub mod run;
pub mod sweep;

pub use checkpoint::{read_checkpoint, write_checkpoint, CheckpointMeta};
pub use config::{CoefficientConfig, DiagnosticsConfig, GridConfig, InitialCondition, RunConfig};
pub use run::{execute, require_admissible, Manifest, RunOptions, RunOutcome};
pub use sweep::{fitted_order, state_distance, sweep, SweepAxis, SweepOptions, SweepReport, SweepRow};
