//! Grid-based first-passage solver.
//!
//! Explicit forward integration of the evidence density between absorbing
//! boundaries. Discretizing
//!
//! ```text
//! ∂p/∂t = -g(t) ∂p/∂x + (σ²/2) ∂²p/∂x²
//! ```
//!
//! with centered differences and forward Euler turns each step into a
//! substochastic redistribution
//!
//! ```text
//! p'[j] = (u - c) p[j+1] + (u + c) p[j-1] + (1 - 2u) p[j]
//! u = σ² Δt / (2 Δx²),   c = g Δt / (2 Δx)
//! ```
//!
//! whose weights stay non-negative iff `Δt ≤ Δx²/σ²` (diffusion limit) and
//! `Δx ≤ σ²/|g|` (advection limit). Both are enforced up front; mass beyond
//! the instantaneous boundaries is absorbed after every step, which handles
//! collapsing boundaries by re-masking rather than re-gridding.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kinematics::ScenarioTimeline;

use super::simulate::CoefficientTrack;
use super::DdmParams;

fn default_n_cells() -> usize {
    128
}

fn default_early_exit() -> f64 {
    1e-12
}

/// Discretization of the first-passage solve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridConfig {
    /// Number of evidence-grid intervals.
    #[serde(default = "default_n_cells")]
    pub n_cells: usize,
    /// Solver step (s); chosen automatically from the diffusion limit when
    /// absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    /// Stop early once the surviving mass falls below this threshold.
    #[serde(default = "default_early_exit")]
    pub early_exit_survival: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self { n_cells: default_n_cells(), dt: None, early_exit_survival: default_early_exit() }
    }
}

/// Per-step absorbed probability mass at each boundary.
#[derive(Debug, Clone, PartialEq)]
pub struct FirstPassageTable {
    /// Solver step (s).
    pub dt: f64,
    /// Mass absorbed at the upper (steer) boundary during step `k`,
    /// i.e. within `(k·dt, (k+1)·dt]`.
    pub upper: Vec<f64>,
    /// Mass absorbed at the lower (brake) boundary during step `k`.
    pub lower: Vec<f64>,
    /// Mass still unabsorbed when the march ended.
    pub survive: f64,
    /// Horizon the solve covers (s); the march may end earlier when the
    /// surviving mass vanishes.
    pub horizon: f64,
}

impl FirstPassageTable {
    pub fn total_upper(&self) -> f64 {
        self.upper.iter().sum()
    }

    pub fn total_lower(&self) -> f64 {
        self.lower.iter().sum()
    }

    /// Aggregate per-step masses into coarser response-time bins.
    ///
    /// Bin `m` covers `(m·bin_s, (m+1)·bin_s]`; the returned vectors span the
    /// horizon.
    pub fn binned(&self, bin_s: f64) -> (Vec<f64>, Vec<f64>) {
        let n_bins = (self.horizon / bin_s).ceil() as usize + 1;
        let mut upper = vec![0.0; n_bins];
        let mut lower = vec![0.0; n_bins];
        for (k, (&up, &lo)) in self.upper.iter().zip(&self.lower).enumerate() {
            let t = (k + 1) as f64 * self.dt;
            let m = (((t - 1e-12) / bin_s).floor().max(0.0) as usize).min(n_bins - 1);
            upper[m] += up;
            lower[m] += lo;
        }
        (upper, lower)
    }

    /// Write `(t, p_upper, p_lower, p_survive)` rows.
    pub fn write_csv<W: std::io::Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["t", "p_upper", "p_lower", "p_survive"])?;
        let mut survive = 1.0;
        for (k, (&up, &lo)) in self.upper.iter().zip(&self.lower).enumerate() {
            survive -= up + lo;
            let t = (k + 1) as f64 * self.dt;
            w.write_record([
                format!("{t:.6}"),
                format!("{up:e}"),
                format!("{lo:e}"),
                format!("{survive:e}"),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Solve for the boundary-hit time distribution of the accumulation process.
///
/// The evidence density starts concentrated at the (risk-adjusted) initial
/// bias at t = 0 and evolves under the same coefficient path the Monte Carlo
/// integrator sees. Returns per-step absorbed masses; absorbed plus surviving
/// mass is conserved.
pub fn first_passage_distribution(
    timeline: &ScenarioTimeline,
    p: &DdmParams,
    r_s: f64,
    grid: &GridConfig,
) -> Result<FirstPassageTable> {
    let track = CoefficientTrack::build(timeline, p, r_s)?;
    if grid.n_cells < 8 {
        return Err(Error::GridConfig(format!(
            "n_cells must be at least 8, got {}",
            grid.n_cells
        )));
    }
    let sigma2 = track.noise * track.noise;
    let b_max = track.max_boundary();
    if !(b_max > 1e-9) {
        return Err(Error::GridConfig(format!(
            "boundary magnitude {b_max:.3e} is degenerate; the evidence domain has collapsed"
        )));
    }
    let n = grid.n_cells;
    let dx = 2.0 * b_max / n as f64;

    // diffusion limit: explicit step must keep the stay-weight non-negative
    let dt_limit = dx * dx / sigma2;
    let dt = match grid.dt {
        Some(dt) => {
            if !(dt > 0.0) {
                return Err(Error::GridConfig(format!("solver dt must be positive, got {dt}")));
            }
            if dt > dt_limit * (1.0 + 1e-12) {
                return Err(Error::GridConfig(format!(
                    "grid too coarse for the step (diffusion stability violated): require \
                     dt <= dx²/noise² = {dt_limit:.3e}, got dt = {dt:.3e}"
                )));
            }
            dt
        }
        None => 0.8 * dt_limit,
    };

    let horizon = track.horizon();
    let n_steps = (horizon / dt).floor() as usize;
    const MAX_STEPS: usize = 20_000_000;
    if n_steps > MAX_STEPS {
        return Err(Error::GridConfig(format!(
            "solver step {dt:.3e} needs {n_steps} steps over the {horizon} s horizon \
             (cap {MAX_STEPS}); use a coarser dt or fewer cells"
        )));
    }
    let u = 0.5 * sigma2 * dt / (dx * dx);

    let mut x = (0..=n).map(|j| -b_max + j as f64 * dx).collect::<Vec<f64>>();
    x[n] = b_max;

    // initial mass: linear split across the two cells bracketing the bias
    let mut p_now = vec![0.0; n + 1];
    let z = track.z.clamp(-b_max, b_max);
    let j = (((z + b_max) / dx).floor() as usize).min(n - 1);
    let w = ((z - x[j]) / dx).clamp(0.0, 1.0);
    p_now[j] = 1.0 - w;
    p_now[j + 1] = w;

    let mut upper = Vec::with_capacity(n_steps);
    let mut lower = Vec::with_capacity(n_steps);
    let mut survive = 1.0;
    let mask_eps = 1e-12 * (1.0 + b_max);

    // absorb any mass already beyond the onset boundary
    let (_, b_now) = track.at(0.0);
    let (up0, lo0) = absorb(&mut p_now, &x, b_now, mask_eps);
    let mut pending_upper = up0;
    let mut pending_lower = lo0;
    survive -= up0 + lo0;

    let mut p_next = vec![0.0; n + 1];
    for step in 0..n_steps {
        if survive < grid.early_exit_survival {
            break;
        }
        let t0 = step as f64 * dt;
        let t1 = t0 + dt;
        let (g, _) = track.at(t0);
        // advection limit: cells must resolve the drift wherever probability
        // mass still lives (drifts after full absorption are irrelevant)
        if g.abs() * dx > sigma2 * (1.0 + 1e-12) {
            return Err(Error::GridConfig(format!(
                "grid too coarse for the drift (advection limit violated at t = {t0:.3}): \
                 require dx <= noise²/|drift| = {:.3e}, got dx = {dx:.3e}; raise n_cells \
                 to >= {}",
                sigma2 / g.abs(),
                (2.0 * b_max * g.abs() / sigma2).ceil() as usize + 1
            )));
        }
        let c = 0.5 * g * dt / dx;
        let (a_down, a_stay, a_up) = (u - c, 1.0 - 2.0 * u, u + c);

        p_next[0] = a_down * p_now[1] + a_stay * p_now[0];
        for j in 1..n {
            p_next[j] = a_down * p_now[j + 1] + a_stay * p_now[j] + a_up * p_now[j - 1];
        }
        p_next[n] = a_stay * p_now[n] + a_up * p_now[n - 1];
        std::mem::swap(&mut p_now, &mut p_next);

        let (_, b) = track.at(t1);
        let (up, lo) = absorb(&mut p_now, &x, b, mask_eps);
        survive -= up + lo;
        upper.push(up + pending_upper);
        lower.push(lo + pending_lower);
        pending_upper = 0.0;
        pending_lower = 0.0;

        if !survive.is_finite() {
            return Err(Error::Grid(format!(
                "surviving mass became non-finite at t = {t1:.4}"
            )));
        }
    }
    if upper.is_empty() {
        upper.push(pending_upper);
        lower.push(pending_lower);
    }

    Ok(FirstPassageTable { dt, upper, lower, survive: survive.max(0.0), horizon })
}

/// Move mass beyond `±b` into the absorbed totals.
fn absorb(p: &mut [f64], x: &[f64], b: f64, eps: f64) -> (f64, f64) {
    let n = p.len() - 1;
    let mut up = 0.0;
    let mut lo = 0.0;
    for j in (0..=n).rev() {
        if x[j] >= b - eps {
            up += p[j];
            p[j] = 0.0;
        } else {
            break;
        }
    }
    for j in 0..=n {
        if x[j] <= -b + eps {
            lo += p[j];
            p[j] = 0.0;
        } else {
            break;
        }
    }
    (up, lo)
}
