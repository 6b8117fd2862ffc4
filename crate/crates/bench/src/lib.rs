//! Shared setup for the criterion benches.

use swerve_core::ddm::DdmParams;
use swerve_core::fixtures;
use swerve_core::kinematics::{make_scenario, ScenarioConfig, ScenarioKind, ScenarioTimeline};

/// A representative condition: the rear-end scenario at its second speed
/// group, with the shipped parameter fixture.
pub fn rearend_condition() -> (ScenarioTimeline, DdmParams) {
    let kind = ScenarioKind::RearEnd;
    let config = ScenarioConfig::default_for(kind);
    let timeline = make_scenario(kind, 22.10, &config).expect("valid scenario");
    (timeline, fixtures::ddm_params(kind))
}
