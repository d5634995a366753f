//! Scenario runner: disturbance profiles, per-case closed-loop runs,
//! metrics, comparison tables and parameter sweeps.
//!
//! A scenario is a JSON document; see `scenarios/README.md` for the
//! schema and the two shipped protocols.

mod metrics;
mod run;
mod scenario;

pub use metrics::{compute_metrics, generator_rms, max_abs, rms, Metrics, Participation, SETTLING_BAND, SETTLING_HOLD};
pub use run::{
    case_plant, compare_cases, design_lqg, hsv_csv, identify_scenario, reduction, run_scenario, scenario_params, sweep,
    sweep_csv, table_stem, write_run, CaseRun, Comparison, IdentificationSummary, OutputFormat, ScenarioReport,
    ScenarioRun, SweepRow, SweepVariant,
};
pub use scenario::{
    generate_continuous_profile, plant_disturbances, step_profile, Case, ControllerSpec, DisturbanceChannel,
    DisturbanceSpec, ProfileSpec, Scenario, StepSpec, Toggle, CONTINUOUS_IV_D_JSON, PROFILE_LABELS, STEP_IV_C_JSON,
};

use thiserror::Error;

use crate::plant::PlantError;
use crate::signal::SignalError;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("scenario: {0}")]
    Scenario(String),
    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        source: Box<dyn std::error::Error + Send + Sync>,
    },
    #[error("metrics: {0}")]
    Metrics(String),
    #[error("compare: {0}")]
    Compare(String),
    #[error("io: {0}")]
    Io(String),
    #[error(transparent)]
    Signal(#[from] SignalError),
    #[error(transparent)]
    Plant(#[from] PlantError),
}

impl HarnessError {
    pub fn stage<E: std::error::Error + Send + Sync + 'static>(stage: &'static str, e: E) -> Self {
        Self::Stage {
            stage,
            source: Box::new(e),
        }
    }
}
