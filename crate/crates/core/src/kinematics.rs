//! Deterministic scenario kinematics.
//!
//! Three scripted high-risk scenarios, all on a straight two-lane road with
//! the ego vehicle A in lane 0:
//!
//! - **Cut-in**: a faster vehicle B in the adjacent lane, 20 m ahead, merges
//!   into the ego lane starting at t = 0.
//! - **Rear-end**: a lead vehicle C brakes hard to a standstill at t = 0
//!   while a surrounding vehicle B occupies the adjacent lane.
//! - **Lane-change**: the lead vehicle C swerves out of the ego lane at
//!   t = 0, revealing a stationary vehicle D; B rides in the adjacent lane.
//!
//! Frame 0 is the disturbance onset. Surrounding vehicles follow open-loop
//! scripts and never react to the ego vehicle; the experiment harness
//! overwrites the ego trajectory once a decision has been made.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default vehicle length (m).
pub const DEFAULT_VEHICLE_LENGTH: f64 = 5.0;
/// Default lane width (m).
pub const DEFAULT_LANE_WIDTH: f64 = 3.5;
/// Default timeline resolution (s).
pub const DEFAULT_DT: f64 = 0.01;
/// Default scenario horizon (s).
pub const DEFAULT_HORIZON: f64 = 10.0;
/// Default duration of a scripted lane-change maneuver (s).
pub const DEFAULT_LANE_CHANGE_DURATION: f64 = 2.0;
/// Speed of the cutting-in vehicle (m/s): 120 km/h.
pub const DEFAULT_CUTIN_SPEED: f64 = 33.33;
/// Speed of scripted surrounding traffic (m/s): 80 km/h.
pub const DEFAULT_SURROUNDING_SPEED: f64 = 22.22;
/// Deceleration of the hard-braking lead vehicle (m/s²).
pub const DEFAULT_LEAD_DECEL: f64 = -8.0;

/// The three scripted scenario families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScenarioKind {
    CutIn,
    RearEnd,
    LaneChange,
}

impl ScenarioKind {
    pub const ALL: [ScenarioKind; 3] =
        [ScenarioKind::CutIn, ScenarioKind::RearEnd, ScenarioKind::LaneChange];

    pub fn as_str(&self) -> &'static str {
        match self {
            ScenarioKind::CutIn => "cutin",
            ScenarioKind::RearEnd => "rearend",
            ScenarioKind::LaneChange => "lanechange",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "cutin" => Ok(ScenarioKind::CutIn),
            "rearend" => Ok(ScenarioKind::RearEnd),
            "lanechange" => Ok(ScenarioKind::LaneChange),
            other => Err(Error::Kinematics(format!("unknown scenario kind `{other}`"))),
        }
    }
}

impl std::fmt::Display for ScenarioKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Vehicle roles within a scenario.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VehicleId {
    /// Ego vehicle.
    A,
    /// Surrounding vehicle (cutting-in vehicle in the cut-in scenario).
    B,
    /// Lead / conflict vehicle.
    C,
    /// Stationary obstacle (lane-change scenario only).
    D,
}

/// State of one vehicle at one instant.
///
/// `s` is the position of the *front* bumper along the road; `y` is the
/// lateral offset referenced to the center of lane 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VehicleState {
    /// Longitudinal front-bumper position (m).
    pub s: f64,
    /// Lateral position (m), lane-0-center referenced.
    pub y: f64,
    /// Speed (m/s); never negative.
    pub v: f64,
    /// Longitudinal acceleration applied over the upcoming step (m/s²).
    pub a: f64,
    /// Nearest lane index.
    pub lane: i32,
}

impl VehicleState {
    pub fn new(s: f64, y: f64, v: f64, a: f64, lane: i32) -> Self {
        Self { s, y, v, a, lane }
    }
}

/// Per-frame states of every vehicle present in the scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub a: VehicleState,
    pub b: VehicleState,
    pub c: Option<VehicleState>,
    pub d: Option<VehicleState>,
}

impl Frame {
    pub fn get(&self, id: VehicleId) -> Option<&VehicleState> {
        match id {
            VehicleId::A => Some(&self.a),
            VehicleId::B => Some(&self.b),
            VehicleId::C => self.c.as_ref(),
            VehicleId::D => self.d.as_ref(),
        }
    }

    fn vehicles(&self) -> impl Iterator<Item = (VehicleId, &VehicleState)> {
        [
            Some((VehicleId::A, &self.a)),
            Some((VehicleId::B, &self.b)),
            self.c.as_ref().map(|c| (VehicleId::C, c)),
            self.d.as_ref().map(|d| (VehicleId::D, d)),
        ]
        .into_iter()
        .flatten()
    }
}

/// Signed initial bumper-to-bumper gaps from the ego vehicle (m).
///
/// A positive value places the other vehicle ahead of the ego vehicle by that
/// bumper-to-bumper distance; a negative value places it behind.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InitialGaps {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ab: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ac: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ad: Option<f64>,
}

/// Speeds of the scripted surrounding vehicles (m/s).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SurroundingSpeeds {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
}

fn default_ego_v0_bounds() -> (f64, f64) {
    (19.0, 34.0)
}

fn default_true() -> bool {
    true
}

/// Scenario construction parameters. All units SI.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub kind: ScenarioKind,
    /// Default initial ego speed (m/s); `make_scenario` may override it.
    pub ego_v0: f64,
    pub initial_gaps: InitialGaps,
    pub surrounding_speeds: SurroundingSpeeds,
    /// Deceleration of the braking lead vehicle (m/s², negative).
    pub lead_decel: f64,
    /// Duration of scripted lane-change maneuvers (s).
    pub lane_change_duration: f64,
    pub dt: f64,
    pub horizon: f64,
    pub vehicle_length: f64,
    pub lane_width: f64,
    /// Accepted range for the initial ego speed (m/s).
    #[serde(default = "default_ego_v0_bounds")]
    pub ego_v0_bounds: (f64, f64),
    /// Headways divide distances by the initial ego speed when true (the
    /// default), by the instantaneous ego speed when false.
    #[serde(default = "default_true")]
    pub headway_uses_initial_speed: bool,
}

impl ScenarioConfig {
    /// Default configuration for a scenario family.
    pub fn default_for(kind: ScenarioKind) -> Self {
        let (gaps, speeds, ego_v0) = match kind {
            ScenarioKind::CutIn => (
                InitialGaps { ab: Some(20.0), ac: None, ad: None },
                SurroundingSpeeds { b: Some(DEFAULT_CUTIN_SPEED), c: None },
                25.82,
            ),
            ScenarioKind::RearEnd => (
                InitialGaps { ab: Some(10.0), ac: Some(42.0), ad: None },
                SurroundingSpeeds {
                    b: Some(DEFAULT_SURROUNDING_SPEED),
                    c: Some(DEFAULT_SURROUNDING_SPEED),
                },
                22.10,
            ),
            ScenarioKind::LaneChange => (
                InitialGaps { ab: Some(-25.0), ac: Some(20.0), ad: Some(50.0) },
                SurroundingSpeeds {
                    b: Some(DEFAULT_SURROUNDING_SPEED),
                    c: Some(DEFAULT_SURROUNDING_SPEED),
                },
                23.27,
            ),
        };
        Self {
            kind,
            ego_v0,
            initial_gaps: gaps,
            surrounding_speeds: speeds,
            lead_decel: DEFAULT_LEAD_DECEL,
            lane_change_duration: DEFAULT_LANE_CHANGE_DURATION,
            dt: DEFAULT_DT,
            horizon: DEFAULT_HORIZON,
            vehicle_length: DEFAULT_VEHICLE_LENGTH,
            lane_width: DEFAULT_LANE_WIDTH,
            ego_v0_bounds: default_ego_v0_bounds(),
            headway_uses_initial_speed: true,
        }
    }

    fn validate(&self, ego_v0: f64) -> Result<()> {
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(Error::Kinematics(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.horizon > self.dt) {
            return Err(Error::Kinematics(format!(
                "horizon must exceed dt, got {} <= {}",
                self.horizon, self.dt
            )));
        }
        if !(ego_v0 > 0.0) || !ego_v0.is_finite() {
            return Err(Error::Kinematics(format!("ego speed must be positive, got {ego_v0}")));
        }
        let (lo, hi) = self.ego_v0_bounds;
        if ego_v0 < lo || ego_v0 > hi {
            return Err(Error::Kinematics(format!(
                "ego speed {ego_v0} outside configured bounds [{lo}, {hi}]"
            )));
        }
        for (name, v) in [("b", self.surrounding_speeds.b), ("c", self.surrounding_speeds.c)] {
            if let Some(v) = v {
                if !(v >= 0.0) || !v.is_finite() {
                    return Err(Error::Kinematics(format!(
                        "surrounding speed {name} must be non-negative, got {v}"
                    )));
                }
            }
        }
        if !(self.lane_change_duration > 0.0) {
            return Err(Error::Kinematics("lane-change duration must be positive".into()));
        }
        if !(self.vehicle_length > 0.0) || !(self.lane_width > 0.0) {
            return Err(Error::Kinematics("vehicle length and lane width must be positive".into()));
        }
        Ok(())
    }

    fn gap_or(&self, which: &str, gap: Option<f64>) -> Result<f64> {
        gap.ok_or_else(|| {
            Error::Kinematics(format!(
                "scenario {} requires initial_gaps.{which}",
                self.kind.as_str()
            ))
        })
    }
}

/// Time-indexed states of every vehicle for one scenario realization.
///
/// Frames are uniformly spaced by `dt`; frame 0 is the disturbance onset.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioTimeline {
    pub kind: ScenarioKind,
    pub dt: f64,
    pub ego_v0: f64,
    pub frames: Vec<Frame>,
    pub vehicle_length: f64,
    pub lane_width: f64,
    pub headway_uses_initial_speed: bool,
}

impl ScenarioTimeline {
    /// Last representable time.
    pub fn horizon(&self) -> f64 {
        (self.frames.len() - 1) as f64 * self.dt
    }

    pub fn time_of(&self, frame: usize) -> f64 {
        frame as f64 * self.dt
    }

    /// Replace the ego trajectory, keeping every scripted vehicle unchanged.
    ///
    /// `ego` must contain exactly one state per frame.
    pub fn with_ego_motion(&self, ego: Vec<VehicleState>) -> Result<Self> {
        if ego.len() != self.frames.len() {
            return Err(Error::Kinematics(format!(
                "ego trajectory has {} frames, timeline has {}",
                ego.len(),
                self.frames.len()
            )));
        }
        let mut out = self.clone();
        for (frame, state) in out.frames.iter_mut().zip(ego) {
            frame.a = state;
        }
        Ok(out)
    }
}

/// Gaps and headways feeding the decision model at one instant.
///
/// Distances are bumper-to-bumper and signed (negative when the other vehicle
/// is behind the ego vehicle); vehicles absent from the scenario yield
/// `None`. Headways divide each distance by the initial ego speed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KinematicSnapshot {
    /// Initial ego speed (m/s).
    pub v0a: f64,
    pub s_ab: Option<f64>,
    pub s_ac: Option<f64>,
    pub s_ad: Option<f64>,
    pub h_ab: Option<f64>,
    pub h_ac: Option<f64>,
    pub h_ad: Option<f64>,
}

/// Advance one vehicle by `dt` under a commanded acceleration.
///
/// Braking clamps at standstill: if the speed would cross zero inside the
/// step, the position advances by the exact stopping distance and the speed
/// is pinned to zero.
pub fn step_vehicle(state: &VehicleState, commanded_accel: f64, dt: f64) -> Result<VehicleState> {
    if !(dt > 0.0) {
        return Err(Error::Kinematics(format!("dt must be positive, got {dt}")));
    }
    for (name, v) in [
        ("s", state.s),
        ("y", state.y),
        ("v", state.v),
        ("accel", commanded_accel),
        ("dt", dt),
    ] {
        if !v.is_finite() {
            return Err(Error::Kinematics(format!("non-finite {name}: {v}")));
        }
    }
    let v_end = state.v + commanded_accel * dt;
    let (s, v, a) = if v_end < 0.0 {
        // stops inside the step after v / |a| seconds
        let stop_dist = state.v * state.v / (2.0 * commanded_accel.abs());
        (state.s + stop_dist, 0.0, 0.0)
    } else {
        (state.s + state.v * dt + 0.5 * commanded_accel * dt * dt, v_end, commanded_accel)
    };
    Ok(VehicleState { s, y: state.y, v, a, lane: state.lane })
}

/// Bumper-to-bumper gap from a rear vehicle to its lead.
///
/// Positions are front-bumper referenced, so only the lead's length enters;
/// `rear_len` is accepted so callers can pass both lengths uniformly. The
/// result is negative when the vehicles overlap.
pub fn gap(rear: &VehicleState, lead: &VehicleState, rear_len: f64, lead_len: f64) -> f64 {
    let _ = rear_len;
    lead.s - rear.s - lead_len
}

/// Time headway: distance divided by the initial ego speed.
pub fn time_headway(distance: f64, v0a: f64) -> Result<f64> {
    if !(v0a > 0.0) {
        return Err(Error::Kinematics(format!("headway needs a positive ego speed, got {v0a}")));
    }
    Ok(distance / v0a)
}

/// Time to collision: gap over closing speed, `None` when not closing.
pub fn ttc(rear: &VehicleState, lead: &VehicleState, gap: f64) -> Option<f64> {
    let closing = rear.v - lead.v;
    if closing > 0.0 {
        Some(gap / closing)
    } else {
        None
    }
}

/// Signed bumper-to-bumper distance from vehicle `from` to vehicle `to`.
///
/// Positive when `to` is ahead (its rear bumper minus `from`'s front bumper),
/// negative when behind.
fn signed_bumper_distance(from_s: f64, to_s: f64, len: f64) -> f64 {
    let d = to_s - from_s;
    if d >= 0.0 {
        d - len
    } else {
        d + len
    }
}

/// Lateral profile of a scripted lane change: linear in `t` over `duration`.
fn lane_change_y(t: f64, y_from: f64, y_to: f64, duration: f64) -> f64 {
    if t <= 0.0 {
        y_from
    } else if t >= duration {
        y_to
    } else {
        y_from + (y_to - y_from) * t / duration
    }
}

fn nearest_lane(y: f64, lane_width: f64) -> i32 {
    (y / lane_width).round() as i32
}

/// Build the deterministic open-loop timeline for a scenario.
///
/// The ego vehicle holds `ego_v0` throughout; the harness substitutes its
/// post-decision motion. The explicit `ego_v0` argument overrides
/// `config.ego_v0`.
pub fn make_scenario(
    kind: ScenarioKind,
    ego_v0: f64,
    config: &ScenarioConfig,
) -> Result<ScenarioTimeline> {
    if kind != config.kind {
        return Err(Error::Kinematics(format!(
            "config is for scenario {}, requested {}",
            config.kind.as_str(),
            kind.as_str()
        )));
    }
    config.validate(ego_v0)?;

    let len = config.vehicle_length;
    let lw = config.lane_width;
    let n_frames = (config.horizon / config.dt).round() as usize + 1;

    // Front-bumper start position for a vehicle at signed bumper gap `g`
    // relative to the ego front bumper at 0: ahead -> rear bumper at g, so
    // front at g + len; behind -> front bumper |g| behind the ego rear.
    let start_s = |g: f64| if g >= 0.0 { g + len } else { g - len };

    let mut frames = Vec::with_capacity(n_frames);

    match kind {
        ScenarioKind::CutIn => {
            let gap_ab = config.gap_or("ab", config.initial_gaps.ab)?;
            let vb = config.surrounding_speeds.b.unwrap_or(DEFAULT_CUTIN_SPEED);
            if vb <= 0.0 {
                return Err(Error::Kinematics("cut-in vehicle speed must be positive".into()));
            }
            for i in 0..n_frames {
                let t = i as f64 * config.dt;
                let by = lane_change_y(t, lw, 0.0, config.lane_change_duration);
                frames.push(Frame {
                    a: VehicleState::new(ego_v0 * t, 0.0, ego_v0, 0.0, 0),
                    b: VehicleState::new(
                        start_s(gap_ab) + vb * t,
                        by,
                        vb,
                        0.0,
                        nearest_lane(by, lw),
                    ),
                    c: None,
                    d: None,
                });
            }
        }
        ScenarioKind::RearEnd => {
            let gap_ab = config.gap_or("ab", config.initial_gaps.ab)?;
            let gap_ac = config.gap_or("ac", config.initial_gaps.ac)?;
            let vb = config.surrounding_speeds.b.unwrap_or(DEFAULT_SURROUNDING_SPEED);
            let vc = config.surrounding_speeds.c.unwrap_or(DEFAULT_SURROUNDING_SPEED);
            if !(config.lead_decel < 0.0) {
                return Err(Error::Kinematics(format!(
                    "lead_decel must be negative, got {}",
                    config.lead_decel
                )));
            }
            let mut c_state = VehicleState::new(start_s(gap_ac), 0.0, vc, config.lead_decel, 0);
            for i in 0..n_frames {
                let t = i as f64 * config.dt;
                frames.push(Frame {
                    a: VehicleState::new(ego_v0 * t, 0.0, ego_v0, 0.0, 0),
                    b: VehicleState::new(start_s(gap_ab) + vb * t, lw, vb, 0.0, 1),
                    c: Some(c_state),
                    d: None,
                });
                let accel = if c_state.v > 0.0 { config.lead_decel } else { 0.0 };
                c_state = step_vehicle(&c_state, accel, config.dt)?;
            }
        }
        ScenarioKind::LaneChange => {
            let gap_ab = config.gap_or("ab", config.initial_gaps.ab)?;
            let gap_ac = config.gap_or("ac", config.initial_gaps.ac)?;
            let gap_ad = config.gap_or("ad", config.initial_gaps.ad)?;
            let vb = config.surrounding_speeds.b.unwrap_or(DEFAULT_SURROUNDING_SPEED);
            let vc = config.surrounding_speeds.c.unwrap_or(DEFAULT_SURROUNDING_SPEED);
            for i in 0..n_frames {
                let t = i as f64 * config.dt;
                let cy = lane_change_y(t, 0.0, lw, config.lane_change_duration);
                frames.push(Frame {
                    a: VehicleState::new(ego_v0 * t, 0.0, ego_v0, 0.0, 0),
                    b: VehicleState::new(start_s(gap_ab) + vb * t, lw, vb, 0.0, 1),
                    c: Some(VehicleState::new(
                        start_s(gap_ac) + vc * t,
                        cy,
                        vc,
                        0.0,
                        nearest_lane(cy, lw),
                    )),
                    d: Some(VehicleState::new(start_s(gap_ad), 0.0, 0.0, 0.0, 0)),
                });
            }
        }
    }

    Ok(ScenarioTimeline {
        kind,
        dt: config.dt,
        ego_v0,
        frames,
        vehicle_length: len,
        lane_width: lw,
        headway_uses_initial_speed: config.headway_uses_initial_speed,
    })
}

/// Gaps and headways at time `t`, linearly interpolated between frames.
pub fn snapshot(timeline: &ScenarioTimeline, t: f64) -> Result<KinematicSnapshot> {
    let horizon = timeline.horizon();
    if !(0.0..=horizon + 1e-12).contains(&t) {
        return Err(Error::Kinematics(format!("t = {t} outside [0, {horizon}]")));
    }
    let pos = (t / timeline.dt).min((timeline.frames.len() - 2).max(0) as f64);
    let i = pos.floor() as usize;
    let frac = pos - i as f64;
    let f0 = &timeline.frames[i];
    let f1 = &timeline.frames[(i + 1).min(timeline.frames.len() - 1)];
    let lerp = |a: f64, b: f64| a + (b - a) * frac;

    let ego_s = lerp(f0.a.s, f1.a.s);
    let speed = if timeline.headway_uses_initial_speed {
        timeline.ego_v0
    } else {
        lerp(f0.a.v, f1.a.v).max(1e-9)
    };
    let len = timeline.vehicle_length;

    let dist = |s0: Option<f64>, s1: Option<f64>| -> Option<f64> {
        match (s0, s1) {
            (Some(a), Some(b)) => Some(signed_bumper_distance(ego_s, lerp(a, b), len)),
            _ => None,
        }
    };
    let s_ab = dist(Some(f0.b.s), Some(f1.b.s));
    let s_ac = dist(f0.c.as_ref().map(|v| v.s), f1.c.as_ref().map(|v| v.s));
    let s_ad = dist(f0.d.as_ref().map(|v| v.s), f1.d.as_ref().map(|v| v.s));

    Ok(KinematicSnapshot {
        v0a: timeline.ego_v0,
        s_ab,
        s_ac,
        s_ad,
        h_ab: s_ab.map(|d| d / speed),
        h_ac: s_ac.map(|d| d / speed),
        h_ad: s_ad.map(|d| d / speed),
    })
}

/// Scan a timeline for the first same-lane bumper overlap.
///
/// A collision requires longitudinal bumper overlap together with lateral
/// overlap (|Δy| below half a lane width). Returns the first collision time.
pub fn detect_collision(timeline: &ScenarioTimeline) -> Option<f64> {
    let len = timeline.vehicle_length;
    let half_lane = 0.5 * timeline.lane_width;
    for (i, frame) in timeline.frames.iter().enumerate() {
        let vs: Vec<(VehicleId, &VehicleState)> = frame.vehicles().collect();
        for (j, (_, x)) in vs.iter().enumerate() {
            for (_, y) in vs.iter().skip(j + 1).map(|(id, v)| (id, v)) {
                let overlap_long = (x.s - y.s).abs() <= len;
                let overlap_lat = (x.y - y.y).abs() < half_lane;
                if overlap_long && overlap_lat {
                    return Some(timeline.time_of(i));
                }
            }
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn step_holds_speed_without_acceleration() {
        let s = VehicleState::new(0.0, 0.0, 10.0, 0.0, 0);
        let next = step_vehicle(&s, 0.0, 1.0).unwrap();
        assert_relative_eq!(next.s, 10.0);
        assert_relative_eq!(next.v, 10.0);
    }

    #[test]
    fn step_clamps_at_standstill_with_exact_stopping_distance() {
        // stops after v/|a| = 0.25 s having covered v^2 / (2|a|) = 0.25 m
        let s = VehicleState::new(0.0, 0.0, 2.0, 0.0, 0);
        let next = step_vehicle(&s, -8.0, 1.0).unwrap();
        assert_relative_eq!(next.v, 0.0);
        assert_relative_eq!(next.s, 0.25);
    }

    #[test]
    fn step_matches_hand_evaluated_update() {
        let s = VehicleState::new(0.0, 0.0, 22.22, 0.0, 0);
        let next = step_vehicle(&s, -8.0, 0.01).unwrap();
        assert_relative_eq!(next.v, 22.14, epsilon = 1e-12);
        assert_relative_eq!(next.s, 0.2218, epsilon = 1e-12);
    }

    #[test]
    fn step_rejects_non_finite_inputs() {
        let s = VehicleState::new(0.0, 0.0, f64::NAN, 0.0, 0);
        assert!(step_vehicle(&s, 0.0, 0.1).is_err());
        let s = VehicleState::new(0.0, 0.0, 1.0, 0.0, 0);
        assert!(step_vehicle(&s, f64::INFINITY, 0.1).is_err());
        assert!(step_vehicle(&s, 0.0, 0.0).is_err());
    }

    #[test]
    fn gap_is_front_to_rear_bumper() {
        let rear = VehicleState::new(0.0, 0.0, 10.0, 0.0, 0);
        let lead = VehicleState::new(25.0, 0.0, 10.0, 0.0, 0);
        assert_relative_eq!(gap(&rear, &lead, 5.0, 5.0), 20.0);
        let overlapped = VehicleState::new(0.0, 0.0, 10.0, 0.0, 0);
        assert_relative_eq!(gap(&rear, &overlapped, 5.0, 5.0), -5.0);
    }

    #[test]
    fn headway_divides_by_initial_speed() {
        assert_relative_eq!(time_headway(20.0, 10.0).unwrap(), 2.0);
        assert_relative_eq!(time_headway(0.0, 25.82).unwrap(), 0.0);
        assert_relative_eq!(time_headway(20.0, 33.33).unwrap(), 0.60006, epsilon = 1e-5);
        assert!(time_headway(20.0, 0.0).is_err());
        assert!(time_headway(20.0, -1.0).is_err());
    }

    #[test]
    fn ttc_requires_positive_closing_speed() {
        let rear = VehicleState::new(0.0, 0.0, 20.0, 0.0, 0);
        let lead = VehicleState::new(25.0, 0.0, 10.0, 0.0, 0);
        assert_relative_eq!(ttc(&rear, &lead, 20.0).unwrap(), 2.0);
        assert_eq!(ttc(&lead, &rear, 20.0), None);
        // inverted fixture check: 4.16 m at 8 m/s closing
        let lead_slow = VehicleState::new(10.0, 0.0, 12.0, 0.0, 0);
        assert_relative_eq!(ttc(&rear, &lead_slow, 4.16).unwrap(), 0.52, epsilon = 1e-12);
    }

    #[test]
    fn rear_end_frame_zero_matches_script() {
        let config = ScenarioConfig::default_for(ScenarioKind::RearEnd);
        let tl = make_scenario(ScenarioKind::RearEnd, 22.22, &config).unwrap();
        let f0 = &tl.frames[0];
        assert_relative_eq!(f0.c.as_ref().unwrap().a, -8.0);
        assert_relative_eq!(f0.b.v, 22.22);
        assert_relative_eq!(f0.c.as_ref().unwrap().v, 22.22);
    }

    #[test]
    fn cutin_gap_at_onset_is_configured_for_any_ego_speed() {
        let config = ScenarioConfig::default_for(ScenarioKind::CutIn);
        for ego_v0 in [25.82, 29.39, 31.69, 33.85] {
            let tl = make_scenario(ScenarioKind::CutIn, ego_v0, &config).unwrap();
            let snap = snapshot(&tl, 0.0).unwrap();
            assert_relative_eq!(snap.s_ab.unwrap(), 20.0, epsilon = 1e-12);
            assert_relative_eq!(snap.h_ab.unwrap(), 20.0 / ego_v0, epsilon = 1e-12);
        }
    }

    #[test]
    fn lane_change_obstacle_is_stationary_in_every_frame() {
        let config = ScenarioConfig::default_for(ScenarioKind::LaneChange);
        let tl = make_scenario(ScenarioKind::LaneChange, 20.71, &config).unwrap();
        assert!(tl.frames.iter().all(|f| f.d.as_ref().unwrap().v == 0.0));
        let d0 = tl.frames[0].d.as_ref().unwrap().s;
        assert!(tl.frames.iter().all(|f| f.d.as_ref().unwrap().s == d0));
    }

    #[test]
    fn make_scenario_is_deterministic() {
        let config = ScenarioConfig::default_for(ScenarioKind::RearEnd);
        let a = make_scenario(ScenarioKind::RearEnd, 23.32, &config).unwrap();
        let b = make_scenario(ScenarioKind::RearEnd, 23.32, &config).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn make_scenario_rejects_bad_speeds() {
        let config = ScenarioConfig::default_for(ScenarioKind::CutIn);
        assert!(make_scenario(ScenarioKind::CutIn, -1.0, &config).is_err());
        assert!(make_scenario(ScenarioKind::CutIn, 0.0, &config).is_err());
        // outside configured bounds
        assert!(make_scenario(ScenarioKind::CutIn, 80.0, &config).is_err());
        // config/kind mismatch
        assert!(make_scenario(ScenarioKind::RearEnd, 22.0, &config).is_err());
    }

    #[test]
    fn rear_end_lead_speed_non_increasing_to_exact_standstill() {
        let config = ScenarioConfig::default_for(ScenarioKind::RearEnd);
        let tl = make_scenario(ScenarioKind::RearEnd, 22.22, &config).unwrap();
        let speeds: Vec<f64> = tl.frames.iter().map(|f| f.c.as_ref().unwrap().v).collect();
        for w in speeds.windows(2) {
            assert!(w[1] <= w[0] + 1e-12);
            assert!(w[1] >= 0.0);
        }
        assert_eq!(*speeds.last().unwrap(), 0.0);
    }

    #[test]
    fn rear_end_gap_shrinks_linearly_after_lead_stops() {
        let config = ScenarioConfig::default_for(ScenarioKind::RearEnd);
        let tl = make_scenario(ScenarioKind::RearEnd, 22.22, &config).unwrap();
        // lead stops after v/|a| = 2.7775 s
        let s1 = snapshot(&tl, 4.0).unwrap().s_ac.unwrap();
        let s2 = snapshot(&tl, 4.5).unwrap().s_ac.unwrap();
        let s3 = snapshot(&tl, 5.0).unwrap().s_ac.unwrap();
        assert_relative_eq!(s1 - s2, 22.22 * 0.5, epsilon = 1e-9);
        assert_relative_eq!(s2 - s3, 22.22 * 0.5, epsilon = 1e-9);
    }

    #[test]
    fn snapshot_constant_when_speeds_match_and_gap_fixed() {
        let mut config = ScenarioConfig::default_for(ScenarioKind::CutIn);
        config.surrounding_speeds.b = Some(25.0);
        let tl = make_scenario(ScenarioKind::CutIn, 25.0, &config).unwrap();
        let a = snapshot(&tl, 0.0).unwrap();
        let b = snapshot(&tl, 3.3).unwrap();
        assert_relative_eq!(a.s_ab.unwrap(), b.s_ab.unwrap(), epsilon = 1e-9);
        assert_relative_eq!(a.h_ab.unwrap(), b.h_ab.unwrap(), epsilon = 1e-9);
    }

    #[test]
    fn snapshot_rejects_out_of_range_times() {
        let config = ScenarioConfig::default_for(ScenarioKind::CutIn);
        let tl = make_scenario(ScenarioKind::CutIn, 25.82, &config).unwrap();
        assert!(snapshot(&tl, -0.1).is_err());
        assert!(snapshot(&tl, tl.horizon() + 0.1).is_err());
    }

    #[test]
    fn headway_times_speed_recovers_distance() {
        let config = ScenarioConfig::default_for(ScenarioKind::LaneChange);
        let tl = make_scenario(ScenarioKind::LaneChange, 24.62, &config).unwrap();
        for t in [0.0, 0.37, 1.0, 2.5, 7.9] {
            let snap = snapshot(&tl, t).unwrap();
            for (s, h) in [
                (snap.s_ab, snap.h_ab),
                (snap.s_ac, snap.h_ac),
                (snap.s_ad, snap.h_ad),
            ] {
                let (s, h) = (s.unwrap(), h.unwrap());
                assert_relative_eq!(h * snap.v0a, s, epsilon = 1e-9, max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn instantaneous_headway_flag_tracks_the_ego_speed() {
        let mut config = ScenarioConfig::default_for(ScenarioKind::RearEnd);
        config.headway_uses_initial_speed = false;
        let tl = make_scenario(ScenarioKind::RearEnd, 22.22, &config).unwrap();
        // brake the ego from t = 0 so its instantaneous speed departs from v0
        let mut ego = Vec::with_capacity(tl.frames.len());
        let mut state = tl.frames[0].a;
        for _ in 0..tl.frames.len() {
            ego.push(state);
            let a = if state.v > 0.0 { -2.0 } else { 0.0 };
            state = step_vehicle(&state, a, tl.dt).unwrap();
        }
        let braked = tl.with_ego_motion(ego).unwrap();
        let snap = snapshot(&braked, 2.0).unwrap();
        let ego_v = braked.frames[200].a.v;
        assert_relative_eq!(
            snap.h_ac.unwrap(),
            snap.s_ac.unwrap() / ego_v,
            epsilon = 1e-9
        );
        // the default divides by the initial speed instead
        let mut default_cfg = ScenarioConfig::default_for(ScenarioKind::RearEnd);
        default_cfg.headway_uses_initial_speed = true;
        let tl2 = make_scenario(ScenarioKind::RearEnd, 22.22, &default_cfg).unwrap();
        let snap2 = snapshot(&tl2, 2.0).unwrap();
        assert_relative_eq!(
            snap2.h_ac.unwrap(),
            snap2.s_ac.unwrap() / 22.22,
            epsilon = 1e-12
        );
    }

    #[test]
    fn no_collision_when_ego_stops_short() {
        // ego brakes immediately and stops 5+ m behind the stopped lead
        let config = ScenarioConfig::default_for(ScenarioKind::RearEnd);
        let tl = make_scenario(ScenarioKind::RearEnd, 22.22, &config).unwrap();
        let mut ego = Vec::with_capacity(tl.frames.len());
        let mut state = tl.frames[0].a;
        for _ in 0..tl.frames.len() {
            ego.push(state);
            let accel = if state.v > 0.0 { -8.0 } else { 0.0 };
            state = step_vehicle(&state, accel, tl.dt).unwrap();
        }
        let stopped = tl.with_ego_motion(ego).unwrap();
        assert_eq!(detect_collision(&stopped), None);
    }

    #[test]
    fn unresponsive_ego_rear_ends_the_stopped_lead() {
        // closed form: the lead stops in 30.9 m; an ego holding 22.22 m/s
        // covers the 42 m gap plus that distance in finite time
        let config = ScenarioConfig::default_for(ScenarioKind::RearEnd);
        let tl = make_scenario(ScenarioKind::RearEnd, 22.22, &config).unwrap();
        let t = detect_collision(&tl).expect("must collide");
        // relative closure: 4t^2 while braking (t <= 2.7775), then 22.22 m/s
        let stop_t: f64 = 22.22 / 8.0;
        let closed_while_braking = 4.0 * stop_t * stop_t;
        let expected = stop_t + (42.0 - closed_while_braking) / 22.22;
        assert!((t - expected).abs() < 0.02, "collision at {t}, expected ≈ {expected}");
    }

    #[test]
    fn collision_time_is_first_overlap_frame() {
        let config = ScenarioConfig::default_for(ScenarioKind::RearEnd);
        let tl = make_scenario(ScenarioKind::RearEnd, 22.22, &config).unwrap();
        let t = detect_collision(&tl).unwrap();
        let k = (t / tl.dt).round() as usize;
        let frame = &tl.frames[k];
        let c = frame.c.as_ref().unwrap();
        assert!((frame.a.s - c.s).abs() <= tl.vehicle_length);
        if k > 0 {
            let prev = &tl.frames[k - 1];
            let c_prev = prev.c.as_ref().unwrap();
            assert!((prev.a.s - c_prev.s).abs() > tl.vehicle_length);
        }
    }

    #[test]
    fn stronger_braking_never_creates_a_collision() {
        // ego braking monotonicity within the scripted scenario family
        let config = ScenarioConfig::default_for(ScenarioKind::RearEnd);
        for v0 in [19.56, 22.10, 23.32, 25.80] {
            let tl = make_scenario(ScenarioKind::RearEnd, v0, &config).unwrap();
            for react_at in [0.5_f64, 1.0, 1.5, 2.5] {
                let collides = |decel: f64| {
                    let mut ego = Vec::with_capacity(tl.frames.len());
                    let mut state = tl.frames[0].a;
                    for i in 0..tl.frames.len() {
                        ego.push(state);
                        let t = tl.time_of(i);
                        let a = if t >= react_at && state.v > 0.0 { -decel } else { 0.0 };
                        state = step_vehicle(&state, a, tl.dt).unwrap();
                    }
                    let rolled = tl.with_ego_motion(ego).unwrap();
                    detect_collision(&rolled).is_some()
                };
                let outcomes: Vec<bool> =
                    [2.0_f64, 4.0, 6.0, 8.0].iter().map(|&d| collides(d)).collect();
                // once some deceleration avoids the crash, every stronger one must
                for w in outcomes.windows(2) {
                    assert!(
                        w[0] || !w[1],
                        "v0={v0} react={react_at}: stronger braking created a collision"
                    );
                }
            }
        }
    }
}
