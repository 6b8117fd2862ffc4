//! `swerve` — scenario simulation, calibration, risk fitting, and model
//! comparison from the command line.
//!
//! Exit codes: 0 on success, 2 on validation/configuration errors, 3 on
//! numerical failures (each with a diagnostic on stderr).

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use swerve_core::calibration::{calibrate, CalibrationConfig, ParamBounds};
use swerve_core::ddm::DdmParams;
use swerve_core::error::{Error, ErrorKind, Result};
use swerve_core::fixtures;
use swerve_core::harness::{
    io, run_experiment, synthesize_trials, BehaviorGenConfig, ControlConfig, ExperimentConfig,
    SynthesisOptions, TrialRecord,
};
use swerve_core::kinematics::{ScenarioConfig, ScenarioKind};
use swerve_core::risk::{
    aggression_direction, classify_sensitivity, scenario_population_fit, BehaviorSample,
    MgdModel, SensitivityAssignment,
};

#[derive(Parser)]
#[command(name = "swerve", version, about = "Driver collision-avoidance decision modeling")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonOpts {
    /// Master seed; overrides any seed in the config file.
    #[arg(long)]
    seed: Option<u64>,
    /// Directory with fixture overrides (`params/<scenario>.json`,
    /// `baselines.json`); embedded fixtures are used otherwise.
    #[arg(long)]
    fixtures: Option<PathBuf>,
    /// Worker threads (defaults to the rayon heuristic).
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate decision trials over speed groups and write a trial CSV.
    Simulate {
        /// Simulation config JSON.
        #[arg(long)]
        config: PathBuf,
        /// Output trial CSV path.
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Fit decision-model parameters to a trial CSV.
    Calibrate {
        /// Input trial CSV.
        trials: PathBuf,
        /// Calibration config JSON (must name the scenario).
        #[arg(long)]
        config: PathBuf,
        /// Output result JSON; a convergence trace lands next to it.
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Fit per-scenario behavior populations and classify each trial's
    /// risk sensitivity.
    FitRisk {
        /// Input trial CSV.
        trials: PathBuf,
        /// Output JSON with models and assignments.
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Run the comparison experiment described by a config JSON.
    Compare {
        /// Experiment config JSON.
        #[arg(long)]
        config: PathBuf,
        /// Output report JSON.
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Explode a report JSON into plot-ready CSV tables.
    Report {
        /// Input report JSON.
        report: PathBuf,
        /// Output directory for the CSV tables.
        #[arg(long)]
        out: PathBuf,
    },
}

/// Parameter fixtures, optionally overridden from a directory.
struct FixtureSource {
    dir: Option<PathBuf>,
}

impl FixtureSource {
    fn new(dir: Option<PathBuf>) -> Self {
        Self { dir }
    }

    fn ddm_params(&self, kind: ScenarioKind) -> Result<DdmParams> {
        if let Some(dir) = &self.dir {
            let path = dir.join("params").join(format!("{}.json", kind.as_str()));
            if path.exists() {
                let p: DdmParams = serde_json::from_slice(&std::fs::read(&path)?)?;
                p.validate()?;
                return Ok(p);
            }
        }
        Ok(fixtures::ddm_params(kind))
    }

    fn baselines(&self) -> Result<swerve_core::baselines::BaselineDefaults> {
        if let Some(dir) = &self.dir {
            let path = dir.join("baselines.json");
            if path.exists() {
                return Ok(serde_json::from_slice(&std::fs::read(&path)?)?);
            }
        }
        Ok(fixtures::baseline_defaults())
    }
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let bytes = std::fs::read(path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_slice(&bytes)
        .map_err(|e| Error::Config(format!("cannot parse {}: {e}", path.display())))
}

/// `simulate` config schema.
#[derive(Debug, Deserialize)]
struct SimulateSpec {
    scenario: ScenarioKind,
    #[serde(default)]
    speed_groups: Option<Vec<f64>>,
    n_per_group: usize,
    #[serde(default)]
    seed: u64,
    #[serde(default)]
    r_s: f64,
    /// Inline parameter override; fixtures apply otherwise.
    #[serde(default)]
    params: Option<DdmParams>,
    #[serde(default)]
    scenario_config: Option<ScenarioConfig>,
    #[serde(default)]
    control: Option<ControlConfig>,
    /// Absent: per-scenario default generator. `null`: disable sampling.
    #[serde(default, deserialize_with = "double_option")]
    behavior: Option<Option<BehaviorGenConfig>>,
    /// Evidence traces per speed group to export next to the trial CSV.
    #[serde(default)]
    export_traces: usize,
}

/// Distinguishes an absent key (outer `None`) from an explicit `null`
/// (`Some(None)`).
fn double_option<'de, T, D>(de: D) -> std::result::Result<Option<Option<T>>, D::Error>
where
    T: Deserialize<'de>,
    D: serde::Deserializer<'de>,
{
    Deserialize::deserialize(de).map(Some)
}

fn cmd_simulate(config: &Path, out: &Path, common: &CommonOpts) -> Result<()> {
    let spec: SimulateSpec = read_json(config)?;
    let fixture = FixtureSource::new(common.fixtures.clone());
    let kind = spec.scenario;
    let params = match spec.params {
        Some(p) => {
            p.validate()?;
            p
        }
        None => fixture.ddm_params(kind)?,
    };
    let groups = spec.speed_groups.unwrap_or_else(|| fixtures::speed_groups(kind).to_vec());
    let behavior = match spec.behavior {
        None => Some(BehaviorGenConfig::default_for(kind)),
        Some(explicit) => explicit,
    };
    let opts = SynthesisOptions {
        scenario: spec.scenario_config.unwrap_or_else(|| ScenarioConfig::default_for(kind)),
        control: spec.control.unwrap_or_default(),
        r_s: spec.r_s,
        behavior,
    };
    let seed = common.seed.unwrap_or(spec.seed);
    let trials = synthesize_trials(&params, kind, &groups, spec.n_per_group, seed, &opts)?;
    io::save_trials(out, &trials)?;
    eprintln!("wrote {} trials to {}", trials.len(), out.display());
    if spec.export_traces > 0 {
        let traces = swerve_core::harness::trace_trials(
            &params,
            kind,
            &groups,
            spec.n_per_group,
            seed,
            &opts,
            spec.export_traces,
        )?;
        let trace_path = out.with_extension("traces.csv");
        io::save_traces(&trace_path, &traces)?;
        eprintln!("wrote {} evidence traces to {}", traces.len(), trace_path.display());
    }
    Ok(())
}

/// `calibrate` config schema: the scenario plus calibration settings.
#[derive(Debug, Deserialize)]
struct CalibrateSpec {
    scenario: ScenarioKind,
    #[serde(flatten)]
    calibration: CalibrationConfig,
}

fn cmd_calibrate(trials: &Path, config: &Path, out: &Path, common: &CommonOpts) -> Result<()> {
    let spec: CalibrateSpec = read_json(config)?;
    let mut cal = spec.calibration;
    if let Some(seed) = common.seed {
        cal.seed = seed;
    }
    let records = io::load_trials(trials)?;
    let bounds = match &cal.bounds {
        Some(b) => b.clone(),
        None => ParamBounds::default_for(spec.scenario),
    };
    let result = calibrate(&records, spec.scenario, &bounds, &cal)?;
    io::save_calibration(out, &result)?;
    eprintln!(
        "calibrated {} over {} trials: BIC {:.3} (trace next to {})",
        spec.scenario,
        result.n,
        result.bic,
        out.display()
    );
    Ok(())
}

#[derive(Debug, serde::Serialize)]
struct RiskAssignmentRow {
    participant_id: String,
    scenario: ScenarioKind,
    #[serde(flatten)]
    assignment: SensitivityAssignment,
}

#[derive(Debug, serde::Serialize)]
struct RiskFitOutput {
    models: BTreeMap<ScenarioKind, MgdModel>,
    assignments: Vec<RiskAssignmentRow>,
}

fn cmd_fit_risk(trials: &Path, out: &Path) -> Result<()> {
    let records = io::load_trials(trials)?;
    let mut models = BTreeMap::new();
    let mut assignments = Vec::new();
    for kind in ScenarioKind::ALL {
        let featured: Vec<&TrialRecord> = records
            .iter()
            .filter(|t| t.scenario == kind && t.a_x.is_some() && t.a_y.is_some())
            .collect();
        if featured.len() < 2 {
            continue;
        }
        let model = scenario_population_fit(&records, kind)?;
        let direction = aggression_direction(&model);
        for t in featured {
            let sample = BehaviorSample {
                v_b: t.v_b.unwrap_or(t.v0),
                a_x: t.a_x.unwrap(),
                a_y: t.a_y.unwrap(),
            };
            sample.validate()?;
            let assignment =
                classify_sensitivity(&sample.vector(false), &model, &direction)?;
            assignments.push(RiskAssignmentRow {
                participant_id: t.participant_id.clone(),
                scenario: kind,
                assignment,
            });
        }
        models.insert(kind, model);
    }
    if models.is_empty() {
        return Err(Error::Risk(
            "no scenario has at least 2 trials with acceleration features".into(),
        ));
    }
    let output = RiskFitOutput { models, assignments };
    std::fs::write(out, serde_json::to_vec_pretty(&output)?)?;
    eprintln!(
        "fitted {} scenario population(s), {} assignments -> {}",
        output.models.len(),
        output.assignments.len(),
        out.display()
    );
    Ok(())
}

fn cmd_compare(config: &Path, out: &Path, common: &CommonOpts) -> Result<()> {
    let mut spec: ExperimentConfig = read_json(config)?;
    if let Some(seed) = common.seed {
        spec.seed = seed;
    }
    if spec.baselines.is_none() {
        if let Some(dir) = &common.fixtures {
            spec.baselines = Some(FixtureSource::new(Some(dir.clone())).baselines()?);
        }
    }
    if let Some(dir) = &common.fixtures {
        let fixture = FixtureSource::new(Some(dir.clone()));
        for &kind in &spec.scenarios {
            if !spec.params_overrides.contains_key(&kind) {
                spec.params_overrides.insert(kind, fixture.ddm_params(kind)?);
            }
        }
    }
    let report = run_experiment(&spec)?;
    io::save_report(out, &report)?;
    eprintln!(
        "report with {} conditions -> {}",
        report.conditions.len(),
        out.display()
    );
    Ok(())
}

fn cmd_report(report: &Path, out: &Path) -> Result<()> {
    let r = io::load_report(report)?;
    io::export_report_csv(&r, out)?;
    eprintln!("exported report tables to {}", out.display());
    Ok(())
}

fn install_pool(threads: Option<usize>) -> Result<()> {
    if let Some(n) = threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    }
    Ok(())
}

fn run() -> Result<()> {
    let cli = Cli::parse();
    match &cli.command {
        Command::Simulate { config, out, common } => {
            install_pool(common.threads)?;
            cmd_simulate(config, out, common)
        }
        Command::Calibrate { trials, config, out, common } => {
            install_pool(common.threads)?;
            cmd_calibrate(trials, config, out, common)
        }
        Command::FitRisk { trials, out, common } => {
            install_pool(common.threads)?;
            cmd_fit_risk(trials, out)
        }
        Command::Compare { config, out, common } => {
            install_pool(common.threads)?;
            cmd_compare(config, out, common)
        }
        Command::Report { report, out } => cmd_report(report, out),
    }
}

fn main() {
    match run() {
        Ok(()) => {}
        Err(e) => {
            eprintln!("error: {e}");
            let code = match e.kind() {
                ErrorKind::Validation => 2,
                ErrorKind::Numerical => 3,
            };
            std::process::exit(code);
        }
    }
}
