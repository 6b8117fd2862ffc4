//! Trial CSV ingestion/export and report serialization.
//!
//! The trial schema is fixed:
//!
//! ```text
//! participant_id,scenario,v0A_mps,choice,rt_s,vb_mps,ax_mps2,ay_mps2,collided
//! ```
//!
//! with `scenario ∈ {cutin, rearend, lanechange}`, `choice ∈ {brake, steer,
//! none}`, and empty cells for absent optionals. Malformed rows are collected
//! and reported with their line numbers rather than silently dropped.

use std::fmt::Write as _;
use std::path::Path;

use crate::calibration::CalibrationResult;
use crate::ddm::Choice;
use crate::error::{Error, Result};
use crate::kinematics::ScenarioKind;

use super::{ExperimentReport, TrialRecord};

/// Exact header of the trial CSV schema.
pub const TRIAL_CSV_HEADER: [&str; 9] = [
    "participant_id",
    "scenario",
    "v0A_mps",
    "choice",
    "rt_s",
    "vb_mps",
    "ax_mps2",
    "ay_mps2",
    "collided",
];

fn parse_choice(s: &str) -> std::result::Result<Option<Choice>, String> {
    match s {
        "brake" => Ok(Some(Choice::Brake)),
        "steer" => Ok(Some(Choice::Steer)),
        "none" => Ok(None),
        other => Err(format!("choice must be brake/steer/none, got `{other}`")),
    }
}

fn parse_opt_f64(s: &str, name: &str) -> std::result::Result<Option<f64>, String> {
    if s.is_empty() {
        return Ok(None);
    }
    s.parse::<f64>()
        .map(Some)
        .map_err(|_| format!("{name} must be a number or empty, got `{s}`"))
}

fn parse_row(record: &csv::StringRecord) -> std::result::Result<TrialRecord, String> {
    if record.len() != TRIAL_CSV_HEADER.len() {
        return Err(format!(
            "expected {} columns, got {}",
            TRIAL_CSV_HEADER.len(),
            record.len()
        ));
    }
    let participant_id = record[0].to_string();
    if participant_id.is_empty() {
        return Err("participant_id must not be empty".into());
    }
    let scenario = ScenarioKind::parse(&record[1]).map_err(|e| e.to_string())?;
    let v0: f64 = record[2]
        .parse()
        .map_err(|_| format!("v0A_mps must be a number, got `{}`", &record[2]))?;
    if !(v0 > 0.0) || !v0.is_finite() {
        return Err(format!("v0A_mps must be positive, got {v0}"));
    }
    let choice = parse_choice(&record[3])?;
    let rt = parse_opt_f64(&record[4], "rt_s")?;
    match (choice, rt) {
        (Some(_), None) => return Err("rt_s required when a choice was made".into()),
        (None, Some(_)) => return Err("rt_s must be empty for choice `none`".into()),
        (_, Some(rt)) if !(rt > 0.0) => return Err(format!("rt_s must be > 0, got {rt}")),
        _ => {}
    }
    let v_b = parse_opt_f64(&record[5], "vb_mps")?;
    let a_x = parse_opt_f64(&record[6], "ax_mps2")?;
    let a_y = parse_opt_f64(&record[7], "ay_mps2")?;
    for (name, v) in [("vb_mps", v_b), ("ax_mps2", a_x), ("ay_mps2", a_y)] {
        if let Some(v) = v {
            if !v.is_finite() || v < 0.0 {
                return Err(format!("{name} must be a non-negative magnitude, got {v}"));
            }
        }
    }
    let collided = match &record[8] {
        "true" => true,
        "false" => false,
        other => return Err(format!("collided must be true/false, got `{other}`")),
    };
    Ok(TrialRecord { participant_id, scenario, v0, choice, rt, v_b, a_x, a_y, collided })
}

/// Load and validate a trial CSV.
pub fn load_trials<P: AsRef<Path>>(path: P) -> Result<Vec<TrialRecord>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_path(path.as_ref())?;
    {
        let header = reader.headers()?;
        let got: Vec<&str> = header.iter().collect();
        if got != TRIAL_CSV_HEADER {
            return Err(Error::TrialData(format!(
                "unexpected header: expected `{}`, got `{}`",
                TRIAL_CSV_HEADER.join(","),
                got.join(",")
            )));
        }
    }
    let mut trials = Vec::new();
    let mut problems = String::new();
    for (i, row) in reader.records().enumerate() {
        let line = i + 2; // header is line 1
        match row {
            Ok(record) => match parse_row(&record) {
                Ok(t) => trials.push(t),
                Err(msg) => {
                    let _ = writeln!(problems, "line {line}: {msg}");
                }
            },
            Err(e) => {
                let _ = writeln!(problems, "line {line}: {e}");
            }
        }
    }
    if !problems.is_empty() {
        return Err(Error::TrialData(format!("malformed rows:\n{}", problems.trim_end())));
    }
    Ok(trials)
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|v| format!("{v}")).unwrap_or_default()
}

/// Write trials in the schema `load_trials` accepts (lossless round trip).
pub fn save_trials<P: AsRef<Path>>(path: P, trials: &[TrialRecord]) -> Result<()> {
    let mut w = csv::Writer::from_path(path.as_ref())?;
    w.write_record(TRIAL_CSV_HEADER)?;
    for t in trials {
        w.write_record([
            t.participant_id.clone(),
            t.scenario.as_str().to_string(),
            format!("{}", t.v0),
            t.choice.map(|c| c.as_str().to_string()).unwrap_or_else(|| "none".into()),
            fmt_opt(t.rt),
            fmt_opt(t.v_b),
            fmt_opt(t.a_x),
            fmt_opt(t.a_y),
            if t.collided { "true".into() } else { "false".into() },
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Serialize a report as deterministic pretty JSON.
pub fn report_to_json(report: &ExperimentReport) -> Result<Vec<u8>> {
    Ok(serde_json::to_vec_pretty(report)?)
}

pub fn save_report<P: AsRef<Path>>(path: P, report: &ExperimentReport) -> Result<()> {
    std::fs::write(path, report_to_json(report)?)?;
    Ok(())
}

pub fn load_report<P: AsRef<Path>>(path: P) -> Result<ExperimentReport> {
    Ok(serde_json::from_slice(&std::fs::read(path)?)?)
}

/// Explode a report into plot-ready CSV tables under `out_dir`.
///
/// Writes `conditions.csv`, `accuracy.csv`, and one
/// `cumulative_rt_<scenario>_<model>_<v0>[_rs<r>].csv` per condition.
pub fn export_report_csv<P: AsRef<Path>>(report: &ExperimentReport, out_dir: P) -> Result<()> {
    let dir = out_dir.as_ref();
    std::fs::create_dir_all(dir)?;

    let mut w = csv::Writer::from_path(dir.join("conditions.csv"))?;
    w.write_record([
        "scenario",
        "model",
        "v0_mps",
        "r_s",
        "n",
        "share_brake",
        "share_steer",
        "share_none",
        "median_rt_brake_s",
        "median_rt_steer_s",
        "mean_rt_s",
        "collision_rate_pct",
        "accuracy_pct",
    ])?;
    for c in &report.conditions {
        let median = |qs: &[(f64, f64)]| {
            qs.iter().find(|(q, _)| *q == 0.5).map(|(_, v)| format!("{v}")).unwrap_or_default()
        };
        w.write_record([
            c.scenario.as_str().to_string(),
            c.model.clone(),
            format!("{}", c.v0),
            c.r_s.map(|r| format!("{r}")).unwrap_or_default(),
            format!("{}", c.n),
            format!("{}", c.share_brake),
            format!("{}", c.share_steer),
            format!("{}", c.share_none),
            median(&c.rt_quantiles_brake),
            median(&c.rt_quantiles_steer),
            fmt_opt(c.mean_rt),
            format!("{}", c.collision_rate_pct),
            fmt_opt(c.accuracy_pct),
        ])?;
    }
    w.flush()?;

    let mut w = csv::Writer::from_path(dir.join("accuracy.csv"))?;
    w.write_record(["scenario", "model", "n", "accuracy_pct"])?;
    for a in &report.accuracy {
        w.write_record([
            a.scenario.as_str().to_string(),
            a.model.clone(),
            format!("{}", a.n),
            format!("{}", a.accuracy_pct),
        ])?;
    }
    w.flush()?;

    for c in &report.conditions {
        let rs_tag = c.r_s.map(|r| format!("_rs{r}")).unwrap_or_default();
        let name = format!(
            "cumulative_rt_{}_{}_{}{}.csv",
            c.scenario.as_str(),
            c.model,
            c.v0,
            rs_tag
        );
        let mut w = csv::Writer::from_path(dir.join(name))?;
        w.write_record(["t_s", "cum_p_brake", "cum_p_steer"])?;
        for ((t, b), s) in
            c.cumulative_rt.t.iter().zip(&c.cumulative_rt.brake).zip(&c.cumulative_rt.steer)
        {
            w.write_record([format!("{t}"), format!("{b}"), format!("{s}")])?;
        }
        w.flush()?;
    }
    Ok(())
}

/// Write recorded evidence paths as one long-format CSV.
pub fn save_traces<P: AsRef<Path>>(
    path: P,
    traces: &[(String, Vec<crate::ddm::EvidenceState>)],
) -> Result<()> {
    let mut w = csv::Writer::from_path(path.as_ref())?;
    w.write_record(["participant_id", "t_s", "evidence", "upper_boundary", "lower_boundary"])?;
    for (id, states) in traces {
        for s in states {
            w.write_record([
                id.clone(),
                format!("{}", s.t),
                format!("{}", s.x),
                format!("{}", s.upper_b),
                format!("{}", s.lower_b),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Write a calibration result as JSON plus a convergence-trace CSV next to
/// it (`<stem>.trace.csv`).
pub fn save_calibration<P: AsRef<Path>>(path: P, result: &CalibrationResult) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, serde_json::to_vec_pretty(result)?)?;
    let trace_path = path.with_extension("trace.csv");
    let mut w = csv::Writer::from_path(trace_path)?;
    w.write_record(["generation", "best_bic"])?;
    for (g, v) in result.trace.iter().enumerate() {
        w.write_record([format!("{g}"), format!("{v}")])?;
    }
    w.flush()?;
    Ok(())
}
