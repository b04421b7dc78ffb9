//! Deterministic discrete-time world: scenario loading, scripted humanoid
//! obstacles, observation synthesis, pointing policies, and trace export.

pub mod humanoid;
pub mod observe;
pub mod run;
pub mod scenario;
pub mod trace;

pub use humanoid::{step_world, HumanoidScript, PartName, PartState};
pub use observe::{observe, Observation};
pub use run::{part_sce_id, run_policy, temporal_coverage, CoverageReport, Policy};
pub use scenario::{load_scenario, CameraRig, Scenario, ScenarioFile, SCHEMA_VERSION};
pub use trace::{compare_csv, StepRecord, WorldTrace};
