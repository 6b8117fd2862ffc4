//! Verification support: closed-form references and degenerate scenario
//! constructions used by the test suites.
//!
//! Everything here is independent of the simulation and solver code paths it
//! is used to check.

use crate::ddm::DdmParams;
use crate::kinematics::{
    make_scenario, InitialGaps, ScenarioConfig, ScenarioKind, ScenarioTimeline, SurroundingSpeeds,
};

/// Probability that a constant-coefficient diffusion started at `z` between
/// absorbing barriers `±b` hits the upper barrier first.
///
/// Classic two-barrier result for `dX = g dt + σ dW`:
///
/// ```text
/// P(upper) = (1 - e^{-w (z + b)}) / (1 - e^{-2 w b}),   w = 2g/σ²
/// ```
///
/// with the drift-free limit `(z + b) / 2b`.
pub fn upper_hit_probability(g: f64, b: f64, z: f64, sigma: f64) -> f64 {
    assert!(b > 0.0 && sigma > 0.0 && z.abs() <= b);
    let w = 2.0 * g / (sigma * sigma);
    if w < 0.0 {
        // mirror to keep every exponent negative
        return 1.0 - upper_hit_probability(-g, b, -z, sigma);
    }
    if w * 2.0 * b < 1e-12 {
        return (z + b) / (2.0 * b);
    }
    f64::exp_m1(-w * (z + b)) / f64::exp_m1(-w * 2.0 * b)
}

/// Build a timeline/parameter pair whose drift, boundary, and bias are
/// constant: drift `g`, symmetric boundaries `±b`, start `z`, noise `sigma`.
///
/// The timeline is a cut-in geometry whose vehicles share one speed, so every
/// kinematic quantity is frozen; the parameters cancel the kinematics out of
/// the drift and flatten the boundary logistic.
pub fn constant_coefficient_setup(
    g: f64,
    b: f64,
    z: f64,
    sigma: f64,
) -> (ScenarioTimeline, DdmParams) {
    assert!(b > 0.0 && z.abs() < b);
    let v0 = 25.0;
    let gap0 = 20.0;
    let config = ScenarioConfig {
        kind: ScenarioKind::CutIn,
        ego_v0: v0,
        initial_gaps: InitialGaps { ab: Some(gap0), ac: None, ad: None },
        surrounding_speeds: SurroundingSpeeds { b: Some(v0), c: None },
        ..ScenarioConfig::default_for(ScenarioKind::CutIn)
    };
    let timeline = make_scenario(ScenarioKind::CutIn, v0, &config).expect("valid static scenario");

    let b0 = 2.0 * b; // flat logistic (k = 0) halves the asymptote
    let h_ab = gap0 / v0;
    // bias: solve 2 b0 sigmoid(b_z (v0 - nu)) - b0 = z with nu = v0 - 1
    let s = (z + b0) / (2.0 * b0);
    let b_z = (s / (1.0 - s)).ln();
    let params = DdmParams {
        scenario: ScenarioKind::CutIn,
        alpha: 1.0,
        beta: None,
        delta: None,
        kappa: 0.0,
        gamma: 0.0,
        theta: h_ab - g,
        b0,
        k: 0.0,
        tau: 0.0,
        mu_nd: 0.1,
        sigma_nd: 1e-9,
        b_z,
        nu: v0 - 1.0,
        lambda: 0.0,
        eta: 0.0,
        rho: 0.0,
        noise_scale: sigma,
        boundary_subtracts_theta: true,
    };
    params.validate().expect("constructed parameters are valid");
    (timeline, params)
}
