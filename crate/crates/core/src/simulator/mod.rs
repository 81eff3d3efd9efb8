//! Scenarios, the coupled time loop, Picard iteration and output files.

pub mod config;
pub mod io;
pub mod picard;
pub mod run;
pub mod scenario;

pub use config::{RunConfig, ScenarioKind, PRESETS};
pub use io::{read_snapshot, write_pgm, write_run, write_series, write_snapshot, SnapshotData};
pub use picard::{picard_dt, picard_from_config, picard_solve, PicardOutcome};
pub use run::{
    run, step, DiagnosticsRecord, PopulationRecord, RunOutput, Simulation, Snapshot, StepOptions,
    StepReport,
};
pub use scenario::{init_scenario, CrowdScenario, LinearScenario, Scenario, SimState};
