//! Calibrated parameter fixtures shipped with the crate.
//!
//! One decision-model parameter set per scenario, the default baseline-model
//! parameters, and the per-scenario initial-speed groups used by the
//! experiment protocol. The JSON sources are embedded so binaries work
//! without a fixture directory; `--fixtures` style overrides can still parse
//! the same schema from disk.

use crate::baselines::BaselineDefaults;
use crate::ddm::DdmParams;
use crate::kinematics::ScenarioKind;

pub const CUTIN_PARAMS_JSON: &str = include_str!("../fixtures/params/cutin.json");
pub const REAREND_PARAMS_JSON: &str = include_str!("../fixtures/params/rearend.json");
pub const LANECHANGE_PARAMS_JSON: &str = include_str!("../fixtures/params/lanechange.json");
pub const BASELINES_JSON: &str = include_str!("../fixtures/baselines.json");

/// Embedded JSON source for a scenario's parameter fixture.
pub fn ddm_params_json(kind: ScenarioKind) -> &'static str {
    match kind {
        ScenarioKind::CutIn => CUTIN_PARAMS_JSON,
        ScenarioKind::RearEnd => REAREND_PARAMS_JSON,
        ScenarioKind::LaneChange => LANECHANGE_PARAMS_JSON,
    }
}

/// Calibrated decision-model parameters for a scenario.
pub fn ddm_params(kind: ScenarioKind) -> DdmParams {
    serde_json::from_str(ddm_params_json(kind)).expect("embedded fixture parses")
}

/// Default baseline-model parameters.
pub fn baseline_defaults() -> BaselineDefaults {
    serde_json::from_str(BASELINES_JSON).expect("embedded fixture parses")
}

/// Median initial ego speeds (m/s) of the four per-scenario speed groups.
pub fn speed_groups(kind: ScenarioKind) -> [f64; 4] {
    match kind {
        ScenarioKind::CutIn => [25.82, 29.39, 31.69, 33.85],
        ScenarioKind::RearEnd => [19.56, 22.10, 23.32, 25.80],
        ScenarioKind::LaneChange => [20.71, 23.27, 24.62, 27.46],
    }
}
