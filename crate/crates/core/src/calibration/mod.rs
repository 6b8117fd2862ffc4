//! Parameter calibration against trial data.
//!
//! The decision model's likelihood comes from the grid first-passage solver:
//! boundary-hit masses are binned in response time, convolved with the
//! (positive-truncated) non-decision Gaussian, and looked up per trial.
//! Censored trials contribute the surviving mass. Differential evolution
//! minimizes BIC over a bounded box around the shipped parameter fixtures.

mod de;

pub use de::{differential_evolution, DeConfig, DeResult};

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::ddm::{first_passage_distribution, Choice, DdmParams, GridConfig};
use crate::error::{Error, Result};
use crate::fixtures;
use crate::harness::TrialRecord;
use crate::kinematics::{make_scenario, ScenarioConfig, ScenarioKind, ScenarioTimeline};

/// Mass floor preventing `-inf` log-likelihood contributions.
pub const LIKELIHOOD_FLOOR: f64 = 1e-12;

/// Names of the free parameters per scenario, in search order.
pub fn free_parameter_names(kind: ScenarioKind) -> &'static [&'static str] {
    match kind {
        ScenarioKind::CutIn => &[
            "alpha", "kappa", "gamma", "theta", "b0", "k", "tau", "mu_nd", "sigma_nd", "b_z",
            "nu",
        ],
        ScenarioKind::RearEnd | ScenarioKind::LaneChange => &[
            "alpha", "beta", "delta", "kappa", "gamma", "theta", "b0", "k", "tau", "mu_nd",
            "sigma_nd", "b_z", "nu",
        ],
    }
}

fn param_get(p: &DdmParams, name: &str) -> Result<f64> {
    Ok(match name {
        "alpha" => p.alpha,
        "beta" => p.beta.unwrap_or(0.0),
        "delta" => p.delta.unwrap_or(0.0),
        "kappa" => p.kappa,
        "gamma" => p.gamma,
        "theta" => p.theta,
        "b0" => p.b0,
        "k" => p.k,
        "tau" => p.tau,
        "mu_nd" => p.mu_nd,
        "sigma_nd" => p.sigma_nd,
        "b_z" => p.b_z,
        "nu" => p.nu,
        other => return Err(Error::Calibration(format!("unknown parameter `{other}`"))),
    })
}

fn param_set(p: &mut DdmParams, name: &str, value: f64) -> Result<()> {
    match name {
        "alpha" => p.alpha = value,
        "beta" => p.beta = Some(value),
        "delta" => p.delta = Some(value),
        "kappa" => p.kappa = value,
        "gamma" => p.gamma = value,
        "theta" => p.theta = value,
        "b0" => p.b0 = value,
        "k" => p.k = value,
        "tau" => p.tau = value,
        "mu_nd" => p.mu_nd = value,
        "sigma_nd" => p.sigma_nd = value,
        "b_z" => p.b_z = value,
        "nu" => p.nu = value,
        other => return Err(Error::Calibration(format!("unknown parameter `{other}`"))),
    }
    Ok(())
}

/// Per-parameter search box plus fixed overrides excluded from the search.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ParamBounds {
    #[serde(default)]
    pub bounds: BTreeMap<String, (f64, f64)>,
    #[serde(default)]
    pub fixed: BTreeMap<String, f64>,
}

impl ParamBounds {
    /// Default box: each fixture value spread one order of magnitude in both
    /// directions, sign-preserving; zero-valued entries search `[0, 1]`.
    pub fn default_for(kind: ScenarioKind) -> Self {
        let base = fixtures::ddm_params(kind);
        let mut bounds = BTreeMap::new();
        for &name in free_parameter_names(kind) {
            let v = param_get(&base, name).expect("known name");
            let (lo, hi) = if v > 0.0 {
                (v / 10.0, v * 10.0)
            } else if v < 0.0 {
                (v * 10.0, v / 10.0)
            } else {
                (0.0, 1.0)
            };
            bounds.insert(name.to_string(), (lo, hi));
        }
        Self { bounds, fixed: BTreeMap::new() }
    }

    /// Searched `(name, lower, upper)` triples in canonical order.
    pub fn searched(&self, kind: ScenarioKind) -> Result<Vec<(String, f64, f64)>> {
        for name in self.bounds.keys().chain(self.fixed.keys()) {
            if !free_parameter_names(kind).contains(&name.as_str()) {
                return Err(Error::Calibration(format!(
                    "parameter `{name}` is not free in scenario {kind}"
                )));
            }
        }
        let mut out = Vec::new();
        for &name in free_parameter_names(kind) {
            if self.fixed.contains_key(name) {
                continue;
            }
            let (lo, hi) = self.bounds.get(name).copied().ok_or_else(|| {
                Error::Calibration(format!(
                    "missing bound for free parameter `{name}` of scenario {kind}"
                ))
            })?;
            out.push((name.to_string(), lo, hi));
        }
        Ok(out)
    }

    fn apply(
        &self,
        kind: ScenarioKind,
        base: &DdmParams,
        searched: &[(String, f64, f64)],
        point: &[f64],
    ) -> Result<DdmParams> {
        let mut p = base.clone();
        p.scenario = kind;
        for (name, &value) in self.fixed.iter() {
            param_set(&mut p, name, value)?;
        }
        for ((name, _, _), &value) in searched.iter().zip(point) {
            param_set(&mut p, name, value)?;
        }
        Ok(p)
    }
}

/// Bayesian information criterion: `k ln(n) - 2 loglik`.
pub fn bic(loglik: f64, k: usize, n: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::Calibration("BIC needs at least one observation".into()));
    }
    Ok(k as f64 * (n as f64).ln() - 2.0 * loglik)
}

/// Response-time-binned choice likelihoods for one experimental condition.
#[derive(Debug, Clone)]
pub struct LikelihoodTable {
    pub bin_s: f64,
    /// Mass of (brake, rt in bin m).
    pub brake: Vec<f64>,
    /// Mass of (steer, rt in bin m).
    pub steer: Vec<f64>,
    /// Mass of trials undecided within the horizon.
    pub p_none: f64,
}

impl LikelihoodTable {
    fn mass(&self, choice: Choice, rt: f64) -> f64 {
        let bins = match choice {
            Choice::Brake => &self.brake,
            Choice::Steer => &self.steer,
        };
        let m = ((rt / self.bin_s).floor().max(0.0)) as usize;
        bins.get(m).copied().unwrap_or(0.0)
    }
}

/// Build the likelihood table for one condition.
///
/// The boundary-hit distribution of the accumulation process is convolved
/// with the non-decision latency on a shared response-time grid; mass pushed
/// past the horizon is censored.
pub fn condition_likelihood(
    timeline: &ScenarioTimeline,
    p: &DdmParams,
    r_s: f64,
    grid: &GridConfig,
    bin_s: f64,
) -> Result<LikelihoodTable> {
    if !(bin_s > 0.0) {
        return Err(Error::Calibration(format!("rt_bin_s must be positive, got {bin_s}")));
    }
    let table = first_passage_distribution(timeline, p, r_s, grid)?;
    let horizon = table.horizon;
    let (fpt_upper, fpt_lower) = table.binned(bin_s);

    // positive-truncated Gaussian latency, discretized to the same bins
    let normal = Normal::new(p.mu_nd, p.sigma_nd)
        .map_err(|e| Error::Calibration(format!("non-decision distribution: {e}")))?;
    let positive_mass = 1.0 - normal.cdf(0.0);
    if positive_mass <= 0.0 {
        return Err(Error::Calibration(
            "non-decision distribution has no positive support".into(),
        ));
    }
    let kernel_end = p.mu_nd + 6.0 * p.sigma_nd;
    let n_kernel = (kernel_end / bin_s).ceil().max(1.0) as usize;
    let kernel: Vec<f64> = (0..n_kernel)
        .map(|j| {
            let lo = j as f64 * bin_s;
            let hi = lo + bin_s;
            ((normal.cdf(hi) - normal.cdf(lo.max(0.0))).max(0.0)) / positive_mass
        })
        .collect();

    let n_bins = (horizon / bin_s).ceil() as usize;
    let mut brake = vec![0.0; n_bins];
    let mut steer = vec![0.0; n_bins];
    let mut overflow = 0.0;
    for (k, &w) in kernel.iter().enumerate() {
        if w == 0.0 {
            continue;
        }
        for (m, (&up, &lo)) in fpt_upper.iter().zip(&fpt_lower).enumerate() {
            let target = k + m;
            if target < n_bins {
                steer[target] += w * up;
                brake[target] += w * lo;
            } else {
                overflow += w * (up + lo);
            }
        }
    }
    let p_none = table.survive + overflow;
    Ok(LikelihoodTable { bin_s, brake, steer, p_none })
}

/// Log-likelihood of one trial against its condition's table, floored at
/// `ln(1e-12)`.
pub fn trial_loglik(trial: &TrialRecord, table: &LikelihoodTable) -> f64 {
    let mass = match (trial.choice, trial.rt) {
        (Some(choice), Some(rt)) => table.mass(choice, rt),
        _ => table.p_none,
    };
    mass.max(LIKELIHOOD_FLOOR).ln()
}

fn default_rt_bin() -> f64 {
    0.05
}

/// Calibration configuration (JSON-facing).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationConfig {
    /// Search box; defaults to [`ParamBounds::default_for`] when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bounds: Option<ParamBounds>,
    #[serde(default, skip_serializing_if = "Option::is_none", alias = "NP")]
    pub np: Option<usize>,
    #[serde(default = "de::default_f", alias = "F")]
    pub f: f64,
    #[serde(default = "de::default_cr", alias = "CR")]
    pub cr: f64,
    #[serde(default = "de::default_generations")]
    pub generations: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_rt_bin")]
    pub rt_bin_s: f64,
    #[serde(default)]
    pub grid: GridConfig,
    /// Risk sensitivity assumed for the pooled data.
    #[serde(default)]
    pub r_s: f64,
    /// Scenario geometry override.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scenario: Option<ScenarioConfig>,
}

impl Default for CalibrationConfig {
    fn default() -> Self {
        Self {
            bounds: None,
            np: None,
            f: 0.8,
            cr: 0.9,
            generations: 300,
            seed: 0,
            rt_bin_s: default_rt_bin(),
            grid: GridConfig::default(),
            r_s: 0.0,
            scenario: None,
        }
    }
}

/// Calibration output: the fitted parameters and the optimizer trajectory.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CalibrationResult {
    pub best_params: DdmParams,
    pub loglik: f64,
    pub bic: f64,
    /// Searched dimension count.
    pub k: usize,
    /// Trial count.
    pub n: usize,
    /// Per-generation best BIC; non-increasing.
    pub trace: Vec<f64>,
}

/// Sum of per-trial log-likelihoods for a fixed parameter set, grouping
/// trials by condition so each condition is solved once.
pub fn dataset_loglik(
    trials: &[TrialRecord],
    p: &DdmParams,
    r_s: f64,
    scenario: &ScenarioConfig,
    grid: &GridConfig,
    bin_s: f64,
) -> Result<f64> {
    let mut by_condition: BTreeMap<u64, (f64, Vec<&TrialRecord>)> = BTreeMap::new();
    for t in trials {
        by_condition.entry(t.v0.to_bits()).or_insert((t.v0, Vec::new())).1.push(t);
    }
    let mut total = 0.0;
    for (v0, group) in by_condition.values() {
        let timeline = make_scenario(p.scenario, *v0, scenario)?;
        let table = condition_likelihood(&timeline, p, r_s, grid, bin_s)?;
        for t in group {
            total += trial_loglik(t, &table);
        }
    }
    Ok(total)
}

/// Fit a scenario's parameters to trials by BIC-minimizing differential
/// evolution.
///
/// Infeasible candidates (invalid parameters or a drift too steep for the
/// configured grid) receive a large finite penalty rather than failing, so
/// the objective is total and the search simply avoids them.
pub fn calibrate(
    trials: &[TrialRecord],
    kind: ScenarioKind,
    bounds: &ParamBounds,
    config: &CalibrationConfig,
) -> Result<CalibrationResult> {
    let trials: Vec<TrialRecord> =
        trials.iter().filter(|t| t.scenario == kind).cloned().collect();
    if trials.is_empty() {
        return Err(Error::Calibration(format!("no trials for scenario {kind}")));
    }
    let searched = bounds.searched(kind)?;
    let k = searched.len();
    let n = trials.len();
    let base = fixtures::ddm_params(kind);
    let scenario = config.scenario.clone().unwrap_or_else(|| ScenarioConfig::default_for(kind));

    // one timeline per distinct speed condition, shared by all candidates
    let mut by_condition: BTreeMap<u64, (ScenarioTimeline, Vec<TrialRecord>)> = BTreeMap::new();
    for t in &trials {
        let key = t.v0.to_bits();
        if let Some((_, group)) = by_condition.get_mut(&key) {
            group.push(t.clone());
        } else {
            let timeline = make_scenario(kind, t.v0, &scenario)?;
            by_condition.insert(key, (timeline, vec![t.clone()]));
        }
    }
    let conditions: Vec<(ScenarioTimeline, Vec<TrialRecord>)> =
        by_condition.into_values().collect();

    const PENALTY: f64 = 1e12;
    let objective = |point: &[f64]| -> f64 {
        let p = match bounds.apply(kind, &base, &searched, point) {
            Ok(p) => p,
            Err(_) => return PENALTY,
        };
        if p.validate().is_err() {
            return PENALTY;
        }
        let mut loglik = 0.0;
        for (timeline, group) in &conditions {
            match condition_likelihood(timeline, &p, config.r_s, &config.grid, config.rt_bin_s) {
                Ok(table) => {
                    for t in group {
                        loglik += trial_loglik(t, &table);
                    }
                }
                Err(_) => return PENALTY,
            }
        }
        bic(loglik, k, n).unwrap_or(PENALTY)
    };

    let de_config =
        DeConfig { np: config.np, f: config.f, cr: config.cr, generations: config.generations };
    let result = differential_evolution(objective, &bound_box(&searched), &de_config, config.seed)?;

    let best_params = bounds.apply(kind, &base, &searched, &result.best)?;
    best_params.validate()?;
    let mut loglik = 0.0;
    for (timeline, group) in &conditions {
        let table =
            condition_likelihood(timeline, &best_params, config.r_s, &config.grid, config.rt_bin_s)?;
        for t in group {
            loglik += trial_loglik(t, &table);
        }
    }
    let bic_value = bic(loglik, k, n)?;
    Ok(CalibrationResult { best_params, loglik, bic: bic_value, k, n, trace: result.trace })
}

fn bound_box(searched: &[(String, f64, f64)]) -> Vec<(f64, f64)> {
    searched.iter().map(|(_, lo, hi)| (*lo, *hi)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ddm::test_support::constant_coefficient_setup;
    use crate::harness::TrialRecord;
    use approx::assert_relative_eq;

    fn trial(kind: ScenarioKind, v0: f64, choice: Option<Choice>, rt: Option<f64>) -> TrialRecord {
        TrialRecord {
            participant_id: "t".into(),
            scenario: kind,
            v0,
            choice,
            rt,
            v_b: None,
            a_x: None,
            a_y: None,
            collided: false,
        }
    }

    #[test]
    fn bic_identities() {
        assert_relative_eq!(bic(-50.0, 0, 10).unwrap(), 100.0);
        // 13 parameters over 58 observations
        assert_relative_eq!(bic(-100.0, 13, 58).unwrap(), 13.0 * 58.0_f64.ln() + 200.0);
        assert!((bic(-100.0, 13, 58).unwrap() - 252.79).abs() < 0.01);
        // one more parameter at unchanged likelihood costs ln(n)
        let d = bic(-100.0, 14, 58).unwrap() - bic(-100.0, 13, 58).unwrap();
        assert_relative_eq!(d, 58.0_f64.ln(), epsilon = 1e-12);
        // doubling n with replicated data doubles the likelihood and adds k ln 2
        let complexity = |k: usize, n: usize, ll: f64| bic(ll, k, n).unwrap() + 2.0 * ll;
        let added = complexity(13, 116, -200.0) - complexity(13, 58, -100.0);
        assert_relative_eq!(added, 13.0 * 2.0_f64.ln(), epsilon = 1e-12);
        assert!(bic(-1.0, 1, 0).is_err());
    }

    #[test]
    fn default_bounds_cover_the_free_parameters() {
        for kind in ScenarioKind::ALL {
            let b = ParamBounds::default_for(kind);
            let searched = b.searched(kind).unwrap();
            let expected = if kind == ScenarioKind::CutIn { 11 } else { 13 };
            assert_eq!(searched.len(), expected);
            for (name, lo, hi) in &searched {
                assert!(lo < hi, "{kind} {name}: [{lo}, {hi}]");
                // sign-preserving boxes never cross zero for nonzero values
                let v = param_get(&fixtures::ddm_params(kind), name).unwrap();
                if v > 0.0 {
                    assert!(*lo > 0.0);
                }
            }
        }
    }

    #[test]
    fn bounds_reject_unknown_or_missing_parameters() {
        let mut b = ParamBounds::default_for(ScenarioKind::CutIn);
        b.bounds.insert("beta".into(), (0.0, 1.0));
        assert!(b.searched(ScenarioKind::CutIn).is_err());

        let mut b = ParamBounds::default_for(ScenarioKind::CutIn);
        b.bounds.remove("theta");
        assert!(b.searched(ScenarioKind::CutIn).is_err());

        // fixing a parameter removes it from the search
        let mut b = ParamBounds::default_for(ScenarioKind::CutIn);
        b.fixed.insert("kappa".into(), 0.0);
        b.bounds.remove("kappa");
        assert_eq!(b.searched(ScenarioKind::CutIn).unwrap().len(), 10);
    }

    #[test]
    fn impossible_observations_hit_the_floor() {
        let (tl, p) = constant_coefficient_setup(-2.0, 0.5, 0.0, 0.3);
        let table =
            condition_likelihood(&tl, &p, 0.0, &GridConfig::default(), 0.05).unwrap();
        // strong brake-ward drift leaves steer mass near zero late in the run
        let t = trial(ScenarioKind::CutIn, 25.0, Some(Choice::Steer), Some(9.5));
        assert_relative_eq!(trial_loglik(&t, &table), LIKELIHOOD_FLOOR.ln());
        // a censored trial keeps a finite contribution even with no survivors
        let t = trial(ScenarioKind::CutIn, 25.0, None, None);
        assert!(trial_loglik(&t, &table).is_finite());
    }

    #[test]
    fn condition_masses_form_a_probability() {
        let (tl, p) = constant_coefficient_setup(0.5, 0.8, 0.1, 1.0);
        let table = condition_likelihood(&tl, &p, 0.0, &GridConfig::default(), 0.05).unwrap();
        let total: f64 =
            table.brake.iter().sum::<f64>() + table.steer.iter().sum::<f64>() + table.p_none;
        assert!((total - 1.0).abs() < 1e-6, "total = {total}");
        assert!(table.brake.iter().chain(&table.steer).all(|&m| m >= 0.0));
    }

    #[test]
    fn own_model_beats_sign_flipped_drift_on_synthetic_trials() {
        use crate::ddm::simulate_trial;
        use rand::SeedableRng;
        let (tl, p) = constant_coefficient_setup(1.2, 0.6, 0.1, 1.0);
        let mut flipped = p.clone();
        flipped.alpha = -flipped.alpha;

        let table_own = condition_likelihood(&tl, &p, 0.0, &GridConfig::default(), 0.05).unwrap();
        let table_flip =
            condition_likelihood(&tl, &flipped, 0.0, &GridConfig::default(), 0.05).unwrap();

        let mut own = 0.0;
        let mut flip = 0.0;
        for i in 0..100u64 {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5150 + i);
            let out = simulate_trial(&tl, &p, 0.0, &mut rng, false).unwrap();
            let t = trial(ScenarioKind::CutIn, 25.0, out.choice, out.rt);
            own += trial_loglik(&t, &table_own);
            flip += trial_loglik(&t, &table_flip);
        }
        assert!(own > flip, "own = {own}, flipped = {flip}");
    }

    #[test]
    fn single_censored_trial_yields_finite_bic() {
        let trials = vec![trial(ScenarioKind::CutIn, 25.82, None, None)];
        let bounds = ParamBounds::default_for(ScenarioKind::CutIn);
        let config = CalibrationConfig {
            np: Some(40),
            generations: 8,
            ..CalibrationConfig::default()
        };
        let result = calibrate(&trials, ScenarioKind::CutIn, &bounds, &config).unwrap();
        assert!(result.bic.is_finite());
        assert_eq!(result.n, 1);
        assert_eq!(result.k, 11);
    }

    #[test]
    fn calibrate_requires_matching_trials() {
        let trials = vec![trial(ScenarioKind::RearEnd, 22.1, Some(Choice::Brake), Some(1.0))];
        let bounds = ParamBounds::default_for(ScenarioKind::CutIn);
        let config = CalibrationConfig::default();
        assert!(calibrate(&trials, ScenarioKind::CutIn, &bounds, &config).is_err());
    }

    #[test]
    fn calibration_trace_is_non_increasing_and_deterministic() {
        let mut trials = Vec::new();
        for i in 0..30 {
            trials.push(trial(
                ScenarioKind::CutIn,
                25.82,
                Some(Choice::Brake),
                Some(1.4 + 0.01 * i as f64),
            ));
        }
        let bounds = ParamBounds::default_for(ScenarioKind::CutIn);
        let config = CalibrationConfig {
            np: Some(30),
            generations: 6,
            seed: 9,
            ..CalibrationConfig::default()
        };
        let a = calibrate(&trials, ScenarioKind::CutIn, &bounds, &config).unwrap();
        for w in a.trace.windows(2) {
            assert!(w[1] <= w[0]);
        }
        let b = calibrate(&trials, ScenarioKind::CutIn, &bounds, &config).unwrap();
        assert_eq!(a.best_params, b.best_params);
        assert_eq!(a.bic, b.bic);
        assert_relative_eq!(a.bic, a.k as f64 * (a.n as f64).ln() - 2.0 * a.loglik);
    }
}
