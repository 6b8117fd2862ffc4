//! Modeling toolkit for driver collision-avoidance decisions in high-risk
//! traffic scenarios.
//!
//! The crate is organized around a pipeline:
//!
//! 1. [`kinematics`] scripts deterministic vehicle trajectories for three
//!    scenario families (cut-in, rear-end, lane-change) and extracts gaps,
//!    time headways, and collision flags.
//! 2. [`ddm`] implements the evidence-accumulation decision model: kinematics
//!    drive a time-varying drift rate and collapsing decision boundaries; a
//!    noisy accumulator decides between braking and steering.
//! 3. [`risk`] fits a multivariate Gaussian over evasive-behavior features and
//!    maps individual drivers onto a risk-sensitivity scalar that modulates
//!    the decision model.
//! 4. [`calibration`] fits decision-model parameters to trial data with
//!    differential evolution, scored by BIC over a grid-based first-passage
//!    likelihood.
//! 5. [`baselines`] provides IDM, Gipps, and MOBIL reference models.
//! 6. [`harness`] orchestrates experiments, ingests/exports trial data, and
//!    computes comparison metrics.

pub mod baselines;
pub mod calibration;
pub mod ddm;
pub mod error;
pub mod fixtures;
pub mod harness;
pub mod kinematics;
pub mod risk;

pub use error::{Error, ErrorKind, Result};
