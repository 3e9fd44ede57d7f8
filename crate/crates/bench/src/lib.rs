//! Shared fixtures for the criterion benches.

use lpi_isac::signal_model::{ConstraintSpec, OfdmSystemConfig, Scenario, ScenarioSpec};
use lpi_isac::DesignConstraints;

/// Desk-scale scenario and constraints for a fixed seed.
pub fn desk_instance(seed: u64) -> (Scenario, DesignConstraints) {
    let scenario = Scenario::generate(&ScenarioSpec::desk(), &OfdmSystemConfig::desk(), seed)
        .expect("desk scenario");
    let constraints = ConstraintSpec::desk()
        .build(&scenario)
        .expect("desk constraints");
    (scenario, constraints)
}
