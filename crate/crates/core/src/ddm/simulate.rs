//! Monte Carlo trial simulation.
//!
//! Euler–Maruyama integration of the evidence accumulator at a step finer
//! than the kinematic resolution. Drift and boundary are evaluated once per
//! kinematic frame and interpolated linearly in between; the drift is affine
//! in the interpolated kinematics, so this is exact for the drift and
//! second-order accurate for the logistic boundary.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::kinematics::{snapshot, ScenarioTimeline};

use super::{
    apply_risk_sensitivity, boundary, drift_rate, initial_bias, sample_nondecision_time,
    Choice, DdmParams, DecisionOutcome, EvidenceState,
};

/// Default Euler–Maruyama step (s); ten times finer than the kinematics.
pub const DEFAULT_SIM_DT: f64 = 0.001;

/// Quantile probabilities reported for response-time distributions.
pub const RT_QUANTILE_PROBS: [f64; 5] = [0.1, 0.25, 0.5, 0.75, 0.9];

/// Tunables for a single simulated trial.
#[derive(Debug, Clone, Copy)]
pub struct SimOptions {
    /// Integrator step (s).
    pub dt: f64,
    /// Record the evidence path.
    pub record_trace: bool,
}

impl Default for SimOptions {
    fn default() -> Self {
        Self { dt: DEFAULT_SIM_DT, record_trace: false }
    }
}

/// Risk-adjusted drift and boundary sampled at every kinematic frame.
///
/// Shared by the Monte Carlo integrator and the grid solver so both see the
/// same coefficient path.
pub(crate) struct CoefficientTrack {
    frame_dt: f64,
    inv_frame_dt: f64,
    g: Vec<f64>,
    b: Vec<f64>,
    /// Risk-adjusted starting evidence, clamped inside the onset boundary.
    pub z: f64,
    pub noise: f64,
}

impl CoefficientTrack {
    pub fn build(timeline: &ScenarioTimeline, p: &DdmParams, r_s: f64) -> Result<Self> {
        p.validate()?;
        if timeline.kind != p.scenario {
            return Err(Error::Ddm(format!(
                "timeline is scenario {}, parameters are for {}",
                timeline.kind, p.scenario
            )));
        }
        if !r_s.is_finite() {
            return Err(Error::Ddm(format!("risk sensitivity must be finite, got {r_s}")));
        }
        let n = timeline.frames.len();
        let mut g = Vec::with_capacity(n);
        let mut b = Vec::with_capacity(n);
        let z0 = initial_bias(p, timeline.ego_v0);
        let mut z = z0;
        for i in 0..n {
            let snap = snapshot(timeline, timeline.time_of(i))?;
            let g_raw = drift_rate(timeline.kind, &snap, p)?;
            let b_raw = boundary(timeline.kind, &snap, p)?;
            let (g_adj, b_adj, z_adj) = apply_risk_sensitivity(g_raw, b_raw, z0, r_s, p);
            if i == 0 {
                z = z_adj;
            }
            g.push(g_adj);
            b.push(b_adj);
        }
        Ok(Self { frame_dt: timeline.dt, inv_frame_dt: 1.0 / timeline.dt, g, b, z, noise: p.noise_scale })
    }

    pub fn horizon(&self) -> f64 {
        (self.g.len() - 1) as f64 * self.frame_dt
    }

    pub fn max_boundary(&self) -> f64 {
        self.b.iter().copied().fold(0.0, f64::max)
    }

    #[inline]
    pub fn at(&self, t: f64) -> (f64, f64) {
        let pos = (t * self.inv_frame_dt).max(0.0);
        let i = (pos as usize).min(self.g.len() - 2);
        let frac = (pos - i as f64).min(1.0);
        (
            self.g[i] + (self.g[i + 1] - self.g[i]) * frac,
            self.b[i] + (self.b[i + 1] - self.b[i]) * frac,
        )
    }
}

/// Simulate one decision with explicit integrator options.
pub fn simulate_trial_with<R: Rng + ?Sized>(
    timeline: &ScenarioTimeline,
    p: &DdmParams,
    r_s: f64,
    rng: &mut R,
    opts: SimOptions,
) -> Result<DecisionOutcome> {
    let track = CoefficientTrack::build(timeline, p, r_s)?;
    simulate_on_track(&track, p, rng, opts)
}

/// Integrate one trial over a prebuilt coefficient track.
///
/// Batch drivers build the track once per condition and share it.
pub(crate) fn simulate_on_track<R: Rng + ?Sized>(
    track: &CoefficientTrack,
    p: &DdmParams,
    rng: &mut R,
    opts: SimOptions,
) -> Result<DecisionOutcome> {
    if !(opts.dt > 0.0) {
        return Err(Error::Ddm(format!("integrator dt must be positive, got {}", opts.dt)));
    }
    let horizon = track.horizon();
    let t_nd = sample_nondecision_time(p, rng);
    let mut trace = if opts.record_trace { Some(Vec::new()) } else { None };

    if t_nd >= horizon {
        // latency alone exhausts the horizon: censored
        return Ok(DecisionOutcome { choice: None, rt: None, t_nd, trace });
    }

    let mut t = t_nd;
    let mut x = track.z;
    if let Some(tr) = trace.as_mut() {
        // evidence holds at the bias through the non-decision period
        let hold_step = track.frame_dt;
        let mut th = 0.0;
        while th < t_nd {
            let (_, b) = track.at(th);
            tr.push(EvidenceState { t: th, x, upper_b: b, lower_b: -b });
            th += hold_step;
        }
    }

    // a collapsed boundary can already trap the bias at accumulation onset
    let (_, b_start) = track.at(t);
    if x >= b_start || x <= -b_start {
        let choice = if x >= b_start { Choice::Steer } else { Choice::Brake };
        if let Some(tr) = trace.as_mut() {
            tr.push(EvidenceState { t, x, upper_b: b_start, lower_b: -b_start });
        }
        return Ok(DecisionOutcome { choice: Some(choice), rt: Some(t), t_nd, trace });
    }

    let sqrt_dt = opts.dt.sqrt();
    let sigma = track.noise * sqrt_dt;
    // within-step barrier crossings: the bridge probability
    // exp(-2 d_prev d_now / (σ² dt)) only matters near a boundary, so gate
    // the extra draw on the distance product
    let sigma2_dt = track.noise * track.noise * opts.dt;
    let bridge_gate = 13.9 * sigma2_dt / 2.0;
    let mut b_prev = b_start;
    let choice;
    let rt;
    loop {
        if t + opts.dt > horizon {
            return Ok(DecisionOutcome { choice: None, rt: None, t_nd, trace });
        }
        let (g, _) = track.at(t);
        let x_prev = x;
        x += g * opts.dt + sigma * rng.sample::<f64, _>(StandardNormal);
        t += opts.dt;
        let (_, b) = track.at(t);
        if x >= b {
            choice = Choice::Steer;
            rt = t;
            break;
        }
        if x <= -b {
            choice = Choice::Brake;
            rt = t;
            break;
        }
        let d_up = (b_prev - x_prev) * (b - x);
        if d_up < bridge_gate
            && rng.gen_range(0.0..1.0) < (-2.0 * d_up / sigma2_dt).exp()
        {
            x = b;
            choice = Choice::Steer;
            rt = t;
            break;
        }
        let d_down = (x_prev + b_prev) * (x + b);
        if d_down < bridge_gate
            && rng.gen_range(0.0..1.0) < (-2.0 * d_down / sigma2_dt).exp()
        {
            x = -b;
            choice = Choice::Brake;
            rt = t;
            break;
        }
        b_prev = b;
        if let Some(tr) = trace.as_mut() {
            tr.push(EvidenceState { t, x, upper_b: b, lower_b: -b });
        }
    }
    if let Some(tr) = trace.as_mut() {
        let (_, b) = track.at(rt);
        tr.push(EvidenceState { t: rt, x, upper_b: b, lower_b: -b });
    }
    Ok(DecisionOutcome { choice: Some(choice), rt: Some(rt), t_nd, trace })
}

/// Simulate one decision at the default integrator step.
pub fn simulate_trial<R: Rng + ?Sized>(
    timeline: &ScenarioTimeline,
    p: &DdmParams,
    r_s: f64,
    rng: &mut R,
    record_trace: bool,
) -> Result<DecisionOutcome> {
    simulate_trial_with(timeline, p, r_s, rng, SimOptions { record_trace, ..Default::default() })
}

/// Aggregated choice shares and response-time quantiles for one condition.
#[derive(Debug, Clone, PartialEq)]
pub struct ChoiceStats {
    pub n_trials: usize,
    pub p_brake: f64,
    pub p_steer: f64,
    pub p_none: f64,
    /// `(probability, value)` pairs; empty when no trial made that choice.
    pub rt_quantiles_brake: Vec<(f64, f64)>,
    pub rt_quantiles_steer: Vec<(f64, f64)>,
    /// Mean response time over decided trials.
    pub mean_rt: Option<f64>,
}

/// Deterministic per-trial RNG: one ChaCha stream per trial index.
///
/// Streams are independent, so batches are reproducible for any worker
/// scheduling.
pub fn trial_stream_rng(master_seed: u64, trial_index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(trial_index);
    rng
}

/// Empirical quantile with linear interpolation between order statistics.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    if sorted.len() == 1 {
        return sorted[0];
    }
    let pos = q * (sorted.len() - 1) as f64;
    let i = pos.floor() as usize;
    let frac = pos - i as f64;
    if i + 1 < sorted.len() {
        sorted[i] + (sorted[i + 1] - sorted[i]) * frac
    } else {
        sorted[i]
    }
}

pub(crate) fn rt_quantiles(rts: &mut Vec<f64>) -> Vec<(f64, f64)> {
    if rts.is_empty() {
        return Vec::new();
    }
    rts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    RT_QUANTILE_PROBS.iter().map(|&q| (q, quantile(rts, q))).collect()
}

/// Run `n_trials` simulations and aggregate.
///
/// Trials fan out across worker threads; each one draws from an independent
/// RNG stream derived from `(master_seed, trial_index)`, so the result is
/// byte-identical for any worker count.
pub fn choice_probabilities(
    timeline: &ScenarioTimeline,
    p: &DdmParams,
    r_s: f64,
    n_trials: usize,
    master_seed: u64,
) -> Result<ChoiceStats> {
    if n_trials == 0 {
        return Err(Error::Ddm("n_trials must be at least 1".into()));
    }
    let track = CoefficientTrack::build(timeline, p, r_s)?;
    let opts = SimOptions::default();
    let outcomes: Vec<DecisionOutcome> = (0..n_trials as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = trial_stream_rng(master_seed, i);
            simulate_on_track(&track, p, &mut rng, opts).expect("validated above")
        })
        .collect();
    Ok(summarize_outcomes(&outcomes))
}

/// Aggregate raw outcomes into shares and RT quantiles.
pub fn summarize_outcomes(outcomes: &[DecisionOutcome]) -> ChoiceStats {
    let n = outcomes.len();
    let mut brake_rts = Vec::new();
    let mut steer_rts = Vec::new();
    let mut none = 0usize;
    for o in outcomes {
        match (o.choice, o.rt) {
            (Some(Choice::Brake), Some(rt)) => brake_rts.push(rt),
            (Some(Choice::Steer), Some(rt)) => steer_rts.push(rt),
            _ => none += 1,
        }
    }
    let decided = brake_rts.len() + steer_rts.len();
    let mean_rt = if decided > 0 {
        Some((brake_rts.iter().sum::<f64>() + steer_rts.iter().sum::<f64>()) / decided as f64)
    } else {
        None
    };
    ChoiceStats {
        n_trials: n,
        p_brake: brake_rts.len() as f64 / n as f64,
        p_steer: steer_rts.len() as f64 / n as f64,
        p_none: none as f64 / n as f64,
        rt_quantiles_brake: rt_quantiles(&mut brake_rts),
        rt_quantiles_steer: rt_quantiles(&mut steer_rts),
        mean_rt,
    }
}
