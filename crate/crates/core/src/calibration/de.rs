//! Differential evolution (DE/rand/1/bin).
//!
//! Classic global optimizer over a bounded box: every generation mutates each
//! member with the scaled difference of two random peers, crosses it
//! binomially with the parent, and keeps whichever scores better. Selection
//! is elitist, so the best value never regresses. All random draws happen on
//! a single master stream, and candidate evaluations within a generation are
//! independent, so results are reproducible for any worker count.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};

pub(crate) fn default_f() -> f64 {
    0.8
}

pub(crate) fn default_cr() -> f64 {
    0.9
}

pub(crate) fn default_generations() -> usize {
    300
}

/// DE hyperparameters. `np` defaults to 15× the searched dimension.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct DeConfig {
    #[serde(default, skip_serializing_if = "Option::is_none", alias = "NP")]
    pub np: Option<usize>,
    #[serde(default = "default_f", alias = "F")]
    pub f: f64,
    #[serde(default = "default_cr", alias = "CR")]
    pub cr: f64,
    #[serde(default = "default_generations")]
    pub generations: usize,
}

impl Default for DeConfig {
    fn default() -> Self {
        Self { np: None, f: default_f(), cr: default_cr(), generations: default_generations() }
    }
}

/// Optimization result with the per-generation best-value trace.
#[derive(Debug, Clone)]
pub struct DeResult {
    pub best: Vec<f64>,
    pub best_value: f64,
    /// Best objective value after each generation (index 0 is the initial
    /// population); non-increasing.
    pub trace: Vec<f64>,
    pub n_evals: usize,
}

/// Minimize `objective` over the box `bounds`.
///
/// Mutants falling outside the box are reflected back in (then clamped for
/// pathological overshoots). Deterministic given `master_seed`.
pub fn differential_evolution<F>(
    objective: F,
    bounds: &[(f64, f64)],
    config: &DeConfig,
    master_seed: u64,
) -> Result<DeResult>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let dim = bounds.len();
    if dim == 0 {
        return Err(Error::Calibration("no searched dimensions".into()));
    }
    for (i, &(lo, hi)) in bounds.iter().enumerate() {
        if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::Calibration(format!(
                "bound {i} must satisfy lower < upper with finite values, got [{lo}, {hi}]"
            )));
        }
    }
    let np = config.np.unwrap_or(15 * dim).max(4);
    if config.np.is_some_and(|np| np < 4) {
        return Err(Error::Calibration(format!("population must be at least 4, got {np}")));
    }
    if !(config.f > 0.0 && config.f <= 2.0) {
        return Err(Error::Calibration(format!("mutation factor out of (0, 2]: {}", config.f)));
    }
    if !(0.0..=1.0).contains(&config.cr) {
        return Err(Error::Calibration(format!("crossover rate out of [0, 1]: {}", config.cr)));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    let reflect = |x: f64, lo: f64, hi: f64| {
        let mut x = x;
        if x < lo {
            x = lo + (lo - x);
        }
        if x > hi {
            x = hi - (x - hi);
        }
        x.clamp(lo, hi)
    };

    let mut pop: Vec<Vec<f64>> = (0..np)
        .map(|_| bounds.iter().map(|&(lo, hi)| rng.gen_range(lo..hi)).collect())
        .collect();
    let mut values: Vec<f64> = pop.par_iter().map(|x| objective(x)).collect();
    let mut n_evals = np;

    let best_of = |values: &[f64]| {
        values
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.partial_cmp(b.1).unwrap_or(std::cmp::Ordering::Equal))
            .map(|(i, _)| i)
            .unwrap()
    };
    let mut trace = Vec::with_capacity(config.generations + 1);
    trace.push(values[best_of(&values)]);

    for _ in 0..config.generations {
        // all RNG consumption happens serially here, before evaluation
        let trials: Vec<Vec<f64>> = (0..np)
            .map(|i| {
                let mut pick = || loop {
                    let r = rng.gen_range(0..np);
                    if r != i {
                        return r;
                    }
                };
                let (r1, r2, r3) = loop {
                    let (a, b, c) = (pick(), pick(), pick());
                    if a != b && b != c && a != c {
                        break (a, b, c);
                    }
                };
                let j_rand = rng.gen_range(0..dim);
                (0..dim)
                    .map(|j| {
                        let crossed = rng.gen_range(0.0..1.0) < config.cr || j == j_rand;
                        if crossed {
                            let (lo, hi) = bounds[j];
                            reflect(
                                pop[r1][j] + config.f * (pop[r2][j] - pop[r3][j]),
                                lo,
                                hi,
                            )
                        } else {
                            pop[i][j]
                        }
                    })
                    .collect()
            })
            .collect();

        let trial_values: Vec<f64> = trials.par_iter().map(|x| objective(x)).collect();
        n_evals += np;
        for i in 0..np {
            if trial_values[i] <= values[i] {
                pop[i] = trials[i].clone();
                values[i] = trial_values[i];
            }
        }
        trace.push(values[best_of(&values)]);
    }

    let i = best_of(&values);
    Ok(DeResult { best: pop[i].clone(), best_value: values[i], trace, n_evals })
}
