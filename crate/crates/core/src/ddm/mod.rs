//! Evidence-accumulation decision model.
//!
//! A driver facing a disturbance accumulates noisy evidence `x(t)` toward one
//! of two choices: positive evidence supports **steer**, negative supports
//! **brake**. The accumulator
//!
//! ```text
//! dx = g(t) dt + σ_ε dW
//! ```
//!
//! starts from a speed-dependent initial bias `Z`, held constant through a
//! Gaussian non-decision latency, and is absorbed at collapsing symmetric
//! boundaries `±b(t)`. Drift and boundary are affine/logistic functions of
//! the scenario kinematics (time headways, bumper gaps, initial speed), so
//! the decision dynamics tighten as the traffic situation evolves.
//!
//! A scalar risk sensitivity `R_s ∈ [-1, 1]` shifts the drift, contracts the
//! boundary, and offsets the bias, yielding personalized variants of the same
//! scenario model.

mod fpt;
pub(crate) mod simulate;
pub mod test_support;

pub use fpt::{first_passage_distribution, FirstPassageTable, GridConfig};
pub use simulate::{
    choice_probabilities, simulate_trial, simulate_trial_with, summarize_outcomes,
    trial_stream_rng, ChoiceStats, SimOptions, RT_QUANTILE_PROBS,
};

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kinematics::{KinematicSnapshot, ScenarioKind};

fn default_noise_scale() -> f64 {
    1.0
}

fn default_true() -> bool {
    true
}

fn is_zero(v: &f64) -> bool {
    *v == 0.0
}

fn is_one(v: &f64) -> bool {
    *v == 1.0
}

fn is_true(v: &bool) -> bool {
    *v
}

/// Full per-scenario parameter set of the decision model.
///
/// `beta` and `delta` weight the second vehicle's gap and headway; the cut-in
/// scenario has a single interacting vehicle and must leave them unset.
/// Evidence units are arbitrary: only ratios to `noise_scale` are
/// identifiable, so calibrated values are interpreted relative to it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DdmParams {
    pub scenario: ScenarioKind,
    /// Drift scale.
    pub alpha: f64,
    /// Weight of the B-vehicle gap (rear-end, lane-change only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    /// Weight of the conflict-vehicle headway (rear-end, lane-change only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    /// Weight of the primary gap term.
    pub kappa: f64,
    /// Weight of the initial ego speed.
    pub gamma: f64,
    /// Drift offset.
    pub theta: f64,
    /// Boundary asymptote (evidence units).
    pub b0: f64,
    /// Boundary steepness.
    pub k: f64,
    /// Boundary offset.
    pub tau: f64,
    /// Non-decision time mean (s).
    pub mu_nd: f64,
    /// Non-decision time standard deviation (s).
    pub sigma_nd: f64,
    /// Initial-bias steepness.
    pub b_z: f64,
    /// Initial-bias speed offset (m/s).
    pub nu: f64,
    /// Risk-sensitivity drift coupling.
    #[serde(default, skip_serializing_if = "is_zero")]
    pub lambda: f64,
    /// Risk-sensitivity boundary contraction.
    #[serde(default, skip_serializing_if = "is_zero")]
    pub eta: f64,
    /// Risk-sensitivity bias shift.
    #[serde(default, skip_serializing_if = "is_zero")]
    pub rho: f64,
    /// Evidence noise standard deviation per √s.
    #[serde(default = "default_noise_scale", skip_serializing_if = "is_one")]
    pub noise_scale: f64,
    /// The lane-change boundary affine subtracts the drift offset θ in
    /// addition to τ when true (the default, matching the model as stated);
    /// clearing it drops the extra θ.
    #[serde(default = "default_true", skip_serializing_if = "is_true")]
    pub boundary_subtracts_theta: bool,
}

impl DdmParams {
    pub fn validate(&self) -> Result<()> {
        let finite = [
            ("alpha", self.alpha),
            ("kappa", self.kappa),
            ("gamma", self.gamma),
            ("theta", self.theta),
            ("b0", self.b0),
            ("k", self.k),
            ("tau", self.tau),
            ("mu_nd", self.mu_nd),
            ("sigma_nd", self.sigma_nd),
            ("b_z", self.b_z),
            ("nu", self.nu),
            ("lambda", self.lambda),
            ("eta", self.eta),
            ("rho", self.rho),
            ("noise_scale", self.noise_scale),
        ];
        for (name, v) in finite {
            if !v.is_finite() {
                return Err(Error::Ddm(format!("{name} must be finite, got {v}")));
            }
        }
        if !(self.b0 > 0.0) {
            return Err(Error::Ddm(format!("b0 must be positive, got {}", self.b0)));
        }
        if !(self.sigma_nd > 0.0) {
            return Err(Error::Ddm(format!("sigma_nd must be positive, got {}", self.sigma_nd)));
        }
        if self.k < 0.0 {
            return Err(Error::Ddm(format!("k must be non-negative, got {}", self.k)));
        }
        if !(self.noise_scale > 0.0) {
            return Err(Error::Ddm(format!(
                "noise_scale must be positive, got {}",
                self.noise_scale
            )));
        }
        match self.scenario {
            ScenarioKind::CutIn => {
                if self.beta.is_some() || self.delta.is_some() {
                    return Err(Error::Ddm(
                        "beta and delta are not part of the cut-in model".into(),
                    ));
                }
            }
            ScenarioKind::RearEnd | ScenarioKind::LaneChange => {
                if self.beta.is_none() || self.delta.is_none() {
                    return Err(Error::Ddm(format!(
                        "scenario {} requires beta and delta",
                        self.scenario
                    )));
                }
            }
        }
        Ok(())
    }

    fn beta_delta(&self) -> Result<(f64, f64)> {
        match (self.beta, self.delta) {
            (Some(b), Some(d)) if b.is_finite() && d.is_finite() => Ok((b, d)),
            _ => Err(Error::Ddm(format!("scenario {} requires beta and delta", self.scenario))),
        }
    }
}

/// Evidence accumulator state at one instant.
///
/// Boundaries are symmetric: `lower_b` always mirrors `upper_b`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvidenceState {
    /// Time since disturbance onset (s).
    pub t: f64,
    /// Accumulated evidence; positive favors steer, negative brake.
    pub x: f64,
    pub upper_b: f64,
    pub lower_b: f64,
}

/// Terminal choice of a trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Choice {
    Steer,
    Brake,
}

impl Choice {
    pub fn as_str(&self) -> &'static str {
        match self {
            Choice::Steer => "steer",
            Choice::Brake => "brake",
        }
    }
}

/// One simulated decision.
///
/// `choice` is `None` when no boundary was reached within the horizon
/// (a censored trial); `rt` is absent exactly in that case and otherwise
/// equals non-decision time plus first-passage time.
#[derive(Debug, Clone, PartialEq)]
pub struct DecisionOutcome {
    pub choice: Option<Choice>,
    pub rt: Option<f64>,
    /// Sampled non-decision latency (s).
    pub t_nd: f64,
    pub trace: Option<Vec<EvidenceState>>,
}

/// Scenario-specific affine combination of kinematic inputs.
///
/// Shared by drift and boundary up to their offsets: the returned value omits
/// any offset so callers subtract θ and/or τ themselves.
fn kinematic_affine(kind: ScenarioKind, snap: &KinematicSnapshot, p: &DdmParams) -> Result<f64> {
    let need = |v: Option<f64>, name: &str| {
        v.ok_or_else(|| {
            Error::Ddm(format!("snapshot is missing {name} required by scenario {kind}"))
        })
    };
    match kind {
        ScenarioKind::CutIn => {
            let h_ab = need(snap.h_ab, "h_ab")?;
            let s_ab = need(snap.s_ab, "s_ab")?;
            Ok(h_ab + p.kappa * s_ab + p.gamma * snap.v0a)
        }
        ScenarioKind::RearEnd => {
            let (beta, delta) = p.beta_delta()?;
            let h_ab = need(snap.h_ab, "h_ab")?;
            let s_ab = need(snap.s_ab, "s_ab")?;
            let h_ac = need(snap.h_ac, "h_ac")?;
            let s_ac = need(snap.s_ac, "s_ac")?;
            Ok(h_ab + beta * s_ab + delta * h_ac + p.kappa * s_ac + p.gamma * snap.v0a)
        }
        ScenarioKind::LaneChange => {
            let (beta, delta) = p.beta_delta()?;
            let h_ab = need(snap.h_ab, "h_ab")?;
            let s_ab = need(snap.s_ab, "s_ab")?;
            let h_ad = need(snap.h_ad, "h_ad")?;
            let s_ad = need(snap.s_ad, "s_ad")?;
            Ok(h_ab + beta * s_ab + delta * h_ad + p.kappa * s_ad + p.gamma * snap.v0a)
        }
    }
}

fn check_kind(kind: ScenarioKind, p: &DdmParams) -> Result<()> {
    if kind != p.scenario {
        return Err(Error::Ddm(format!(
            "parameters are for scenario {}, got snapshot for {}",
            p.scenario, kind
        )));
    }
    Ok(())
}

/// Mean evidence-accumulation rate (evidence units per second).
pub fn drift_rate(kind: ScenarioKind, snap: &KinematicSnapshot, p: &DdmParams) -> Result<f64> {
    check_kind(kind, p)?;
    Ok(p.alpha * (kinematic_affine(kind, snap, p)? - p.theta))
}

/// Upper boundary magnitude; the lower boundary is its negation.
///
/// A logistic squash of the kinematic affine keeps the boundary within
/// `(0, b0)`: ample gaps push it toward `b0`, collapsing situations toward 0.
pub fn boundary(kind: ScenarioKind, snap: &KinematicSnapshot, p: &DdmParams) -> Result<f64> {
    check_kind(kind, p)?;
    let mut arg = kinematic_affine(kind, snap, p)? - p.tau;
    if kind == ScenarioKind::LaneChange && p.boundary_subtracts_theta {
        arg -= p.theta;
    }
    Ok(p.b0 / (1.0 + (-p.k * arg).exp()))
}

/// Starting point of the evidence accumulator, in `(-b0, b0)`.
///
/// Positive values bias the trial toward steer, negative toward brake.
pub fn initial_bias(p: &DdmParams, v0a: f64) -> f64 {
    2.0 * p.b0 / (1.0 + (-p.b_z * (v0a - p.nu)).exp()) - p.b0
}

/// Draw a non-decision latency: Gaussian, rejection-resampled to stay
/// strictly positive.
pub fn sample_nondecision_time<R: Rng + ?Sized>(p: &DdmParams, rng: &mut R) -> f64 {
    loop {
        let draw: f64 = p.mu_nd + p.sigma_nd * rng.sample::<f64, _>(StandardNormal);
        if draw > 0.0 {
            return draw;
        }
    }
}

/// Keep a bias strictly inside the open boundary interval.
fn clamp_inside(z: f64, b: f64) -> f64 {
    let lim = b * (1.0 - 1e-9);
    z.clamp(-lim, lim)
}

/// Modulate drift, boundary, and bias by a risk-sensitivity scalar.
///
/// Higher sensitivity raises the drift, contracts the boundary, and shifts
/// the bias toward steer; the bias is clamped just inside the contracted
/// boundary.
pub fn apply_risk_sensitivity(
    g: f64,
    b: f64,
    z: f64,
    r_s: f64,
    p: &DdmParams,
) -> (f64, f64, f64) {
    let g2 = g + p.lambda * r_s;
    let b2 = b * (-p.eta * r_s).exp();
    let z2 = clamp_inside(z + p.rho * r_s, b2);
    (g2, b2, z2)
}

#[cfg(test)]
pub(crate) fn test_params(kind: ScenarioKind) -> DdmParams {
    crate::fixtures::ddm_params(kind)
}
