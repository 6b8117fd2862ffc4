//! Risk-sensitivity modeling over evasive-behavior features.
//!
//! A multivariate Gaussian fitted to per-trial behavior features (peak
//! longitudinal/lateral acceleration, optionally braking-initiation speed)
//! summarizes how a driver population responds to one scenario. Individual
//! drivers are ranked along an "aggression direction" in feature space —
//! higher acceleration magnitudes mean a more sensitive, more aggressive
//! evasive style — and the rank maps onto a scalar `R_s ∈ [-1, 1]` consumed
//! by the decision model's risk coupling.

use nalgebra::{Cholesky, DMatrix, DVector};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::harness::TrialRecord;
use crate::kinematics::ScenarioKind;

/// Behavior features extracted from one evasive maneuver.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BehaviorSample {
    /// Braking-initiation speed (m/s).
    pub v_b: f64,
    /// Peak longitudinal acceleration magnitude (m/s²).
    pub a_x: f64,
    /// Peak lateral acceleration magnitude (m/s²).
    pub a_y: f64,
}

impl BehaviorSample {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("v_b", self.v_b), ("a_x", self.a_x), ("a_y", self.a_y)] {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::Risk(format!(
                    "behavior feature {name} must be a non-negative finite magnitude, got {v}"
                )));
            }
        }
        Ok(())
    }

    /// Feature vector in the default layout: `(a_x, a_y)`, optionally
    /// extended with `v_b`.
    pub fn vector(&self, include_vb: bool) -> DVector<f64> {
        if include_vb {
            DVector::from_vec(vec![self.a_x, self.a_y, self.v_b])
        } else {
            DVector::from_vec(vec![self.a_x, self.a_y])
        }
    }
}

/// Default feature names matching [`BehaviorSample::vector`].
pub fn feature_names(include_vb: bool) -> Vec<String> {
    let mut names = vec!["ax_mps2".to_string(), "ay_mps2".to_string()];
    if include_vb {
        names.push("vb_mps".to_string());
    }
    names
}

#[derive(Serialize, Deserialize)]
struct MgdModelRepr {
    features: Vec<String>,
    mean: Vec<f64>,
    /// Row-major covariance.
    cov: Vec<f64>,
    n: usize,
}

/// Fitted multivariate Gaussian over behavior features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "MgdModelRepr", try_from = "MgdModelRepr")]
pub struct MgdModel {
    pub features: Vec<String>,
    pub mean: DVector<f64>,
    pub cov: DMatrix<f64>,
    /// Sample count behind the fit.
    pub n: usize,
}

impl From<MgdModel> for MgdModelRepr {
    fn from(m: MgdModel) -> Self {
        MgdModelRepr {
            features: m.features,
            mean: m.mean.iter().copied().collect(),
            cov: m.cov.transpose().as_slice().to_vec(),
            n: m.n,
        }
    }
}

impl TryFrom<MgdModelRepr> for MgdModel {
    type Error = Error;

    fn try_from(r: MgdModelRepr) -> Result<Self> {
        let m = r.mean.len();
        if r.cov.len() != m * m {
            return Err(Error::Risk(format!(
                "covariance has {} entries, expected {m}×{m}",
                r.cov.len()
            )));
        }
        if r.features.len() != m {
            return Err(Error::Risk("feature names do not match the dimension".into()));
        }
        MgdModel::new(
            r.features,
            DVector::from_vec(r.mean),
            DMatrix::from_row_slice(m, m, &r.cov),
            r.n,
        )
    }
}

impl MgdModel {
    /// Construct with symmetry and finiteness checks.
    pub fn new(
        features: Vec<String>,
        mean: DVector<f64>,
        cov: DMatrix<f64>,
        n: usize,
    ) -> Result<Self> {
        let m = mean.len();
        if cov.nrows() != m || cov.ncols() != m {
            return Err(Error::Risk(format!(
                "covariance is {}×{}, mean has dimension {m}",
                cov.nrows(),
                cov.ncols()
            )));
        }
        if mean.iter().chain(cov.iter()).any(|v| !v.is_finite()) {
            return Err(Error::Risk("model contains non-finite values".into()));
        }
        let scale = cov.iter().fold(1.0_f64, |acc, v| acc.max(v.abs()));
        for i in 0..m {
            for j in 0..i {
                if (cov[(i, j)] - cov[(j, i)]).abs() > 1e-9 * scale {
                    return Err(Error::Risk(format!(
                        "covariance is asymmetric at ({i}, {j})"
                    )));
                }
            }
        }
        Ok(Self { features, mean, cov, n })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    fn cholesky(&self) -> Result<Cholesky<f64, nalgebra::Dyn>> {
        Cholesky::new(self.cov.clone()).ok_or_else(|| {
            Error::RiskNumerical(
                "covariance is singular or not positive-definite; consider ridge \
                 regularization (add a small ε to the diagonal)"
                    .into(),
            )
        })
    }

    /// True when the covariance fails a Cholesky factorization.
    pub fn is_singular(&self) -> bool {
        Cholesky::new(self.cov.clone()).is_none()
    }
}

/// Sensitivity class cut at population terciles.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SensitivityLevel {
    Low,
    Medium,
    High,
}

/// A driver's position within the fitted behavior population.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensitivityAssignment {
    /// `2·percentile - 1`, in `[-1, 1]`.
    pub r_s: f64,
    pub level: SensitivityLevel,
    /// Population percentile of the aggression score, in `[0, 1]`.
    pub percentile: f64,
}

/// Multivariate Gaussian density.
pub fn mgd_pdf(x: &DVector<f64>, model: &MgdModel) -> Result<f64> {
    let m = model.dim();
    if x.len() != m {
        return Err(Error::Risk(format!("sample has dimension {}, model {m}", x.len())));
    }
    let chol = model.cholesky()?;
    let ln_det = 2.0 * chol.l().diagonal().iter().map(|d| d.ln()).sum::<f64>();
    let d = x - &model.mean;
    let quad = d.dot(&chol.solve(&d));
    Ok((-0.5 * (m as f64 * (2.0 * std::f64::consts::PI).ln() + ln_det + quad)).exp())
}

/// Log-likelihood of samples under `N(mean, cov)`.
pub fn log_likelihood(
    samples: &[DVector<f64>],
    mean: &DVector<f64>,
    cov: &DMatrix<f64>,
) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::Risk("log-likelihood needs at least one sample".into()));
    }
    let model = MgdModel::new(vec![String::new(); mean.len()], mean.clone(), cov.clone(), 0)?;
    let chol = model.cholesky()?;
    let m = mean.len() as f64;
    let n = samples.len() as f64;
    let ln_det = 2.0 * chol.l().diagonal().iter().map(|d| d.ln()).sum::<f64>();
    let mut quad = 0.0;
    for x in samples {
        if x.len() != mean.len() {
            return Err(Error::Risk("sample dimension mismatch".into()));
        }
        let d = x - mean;
        quad += d.dot(&chol.solve(&d));
    }
    Ok(-0.5 * n * m * (2.0 * std::f64::consts::PI).ln() - 0.5 * n * ln_det - 0.5 * quad)
}

/// Maximum-likelihood Gaussian fit: sample mean and 1/N-normalized
/// covariance.
///
/// Degenerate data (all samples identical) yields a singular covariance; the
/// model is returned and flags itself via [`MgdModel::is_singular`], and any
/// density evaluation reports the ridge-regularization suggestion.
pub fn fit_mgd(samples: &[DVector<f64>], features: Vec<String>) -> Result<MgdModel> {
    let n = samples.len();
    if n < 2 {
        return Err(Error::Risk(format!("fit needs at least 2 samples, got {n}")));
    }
    let m = samples[0].len();
    if samples.iter().any(|s| s.len() != m) {
        return Err(Error::Risk("samples have inconsistent dimensions".into()));
    }
    if samples.iter().flat_map(|s| s.iter()).any(|v| !v.is_finite()) {
        return Err(Error::Risk("samples contain non-finite values".into()));
    }
    let mut mean = DVector::zeros(m);
    for s in samples {
        mean += s;
    }
    mean /= n as f64;
    let mut cov = DMatrix::zeros(m, m);
    for s in samples {
        let d = s - &mean;
        cov += &d * d.transpose();
    }
    cov /= n as f64;
    MgdModel::new(features, mean, cov, n)
}

/// Equal positive weights over the acceleration features.
///
/// Features named like accelerations (`ax…`, `ay…`) carry weight 1; if none
/// match, every feature does. The vector is normalized.
pub fn aggression_direction(model: &MgdModel) -> DVector<f64> {
    let mut w: Vec<f64> = model
        .features
        .iter()
        .map(|f| if f.starts_with("ax") || f.starts_with("ay") { 1.0 } else { 0.0 })
        .collect();
    if w.iter().all(|&x| x == 0.0) {
        w = vec![1.0; model.dim()];
    }
    let v = DVector::from_vec(w);
    let norm = v.norm();
    v / norm
}

/// Rank a sample within the population along an aggression direction.
///
/// The signed score `uᵀ Σ⁻¹ (x - μ) / √(uᵀ Σ⁻¹ u)` is standard normal under
/// the model, so its CDF is the percentile; `R_s = 2·percentile - 1` and the
/// level cuts at terciles.
pub fn classify_sensitivity(
    sample: &DVector<f64>,
    model: &MgdModel,
    direction: &DVector<f64>,
) -> Result<SensitivityAssignment> {
    let m = model.dim();
    if sample.len() != m || direction.len() != m {
        return Err(Error::Risk(format!(
            "sample/direction dimension mismatch: {} and {} vs model {m}",
            sample.len(),
            direction.len()
        )));
    }
    let chol = model.cholesky()?;
    let d = sample - &model.mean;
    let num = direction.dot(&chol.solve(&d));
    let denom = direction.dot(&chol.solve(direction)).sqrt();
    if !(denom > 0.0) {
        return Err(Error::Risk("aggression direction has zero Mahalanobis length".into()));
    }
    let z = num / denom;
    let percentile = Normal::new(0.0, 1.0).unwrap().cdf(z);
    let level = if percentile < 1.0 / 3.0 {
        SensitivityLevel::Low
    } else if percentile > 2.0 / 3.0 {
        SensitivityLevel::High
    } else {
        SensitivityLevel::Medium
    };
    Ok(SensitivityAssignment { r_s: 2.0 * percentile - 1.0, level, percentile })
}

/// Fit the `(a_x, a_y)` population model of one scenario from trial records.
pub fn scenario_population_fit(trials: &[TrialRecord], kind: ScenarioKind) -> Result<MgdModel> {
    let samples: Vec<DVector<f64>> = trials
        .iter()
        .filter(|t| t.scenario == kind)
        .filter_map(|t| match (t.a_x, t.a_y) {
            (Some(ax), Some(ay)) => Some(DVector::from_vec(vec![ax, ay])),
            _ => None,
        })
        .collect();
    if samples.len() < 2 {
        return Err(Error::Risk(format!(
            "scenario {kind} has {} trials with acceleration features; need at least 2",
            samples.len()
        )));
    }
    fit_mgd(&samples, feature_names(false))
}
