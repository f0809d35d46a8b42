//! `key = value` scenario files.
//!
//! One assignment per line; `#` starts a comment. Unknown or repeated keys
//! are errors. Lengths accept a trailing `pi` factor (`2pi`, `0.5*pi`).

use std::collections::BTreeMap;
use std::path::Path;

use kdvsat::{
    FeedbackLaw, InitialCondition, NonlinearForm, Profile, Scheme, SimConfig, SpatialGrid, TimeStep, TWO_PI,
};

use crate::CliError;

const KEYS: &[&str] = &[
    "name",
    "length",
    "nodes",
    "profile",
    "profile_norm",
    "law",
    "gain",
    "level",
    "final_time",
    "dt",
    "cfl",
    "scheme",
    "nonlinear",
    "nonlinear_form",
    "stride",
    "energy_slack",
    "envelope_slack",
    "radius",
    "trace_file",
    "snapshot_file",
    "diagnostics_file",
    "report_file",
];

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub config: SimConfig,
    /// Relative slack of the envelope check.
    pub envelope_slack: f64,
    /// Radius `r` of the envelope; defaults to `||y0||`.
    pub radius: Option<f64>,
    pub trace_file: String,
    pub snapshot_file: String,
    pub diagnostics_file: String,
    pub report_file: String,
    /// Assignments as read, for the report echo.
    pub entries: Vec<(String, String)>,
}

fn bad(key: &str, value: &str, what: &str) -> CliError {
    CliError::Config(format!("{key} = {value}: {what}"))
}

/// A real number, optionally multiplied by `pi`.
pub fn parse_real(s: &str) -> Option<f64> {
    let t = s.trim();
    let (head, scale) = match t.strip_suffix("pi") {
        Some(rest) => (rest.trim().trim_end_matches('*').trim(), std::f64::consts::PI),
        None => (t, 1.0),
    };
    let base = if head.is_empty() { 1.0 } else { head.parse::<f64>().ok()? };
    let v = base * scale;
    v.is_finite().then_some(v)
}

fn real(key: &str, value: &str) -> Result<f64, CliError> {
    parse_real(value).ok_or_else(|| bad(key, value, "expected a real number"))
}

fn boolean(key: &str, value: &str) -> Result<bool, CliError> {
    match value {
        "true" | "yes" | "on" => Ok(true),
        "false" | "no" | "off" => Ok(false),
        _ => Err(bad(key, value, "expected true or false")),
    }
}

impl Scenario {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read scenario {}: {e}", path.display())))?;
        let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("scenario");
        Self::parse(&text, stem)
    }

    pub fn parse(text: &str, default_name: &str) -> Result<Self, CliError> {
        let mut map = BTreeMap::new();
        let mut entries = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| CliError::Config(format!("line {}: expected `key = value`", lineno + 1)))?;
            let (key, value) = (key.trim(), value.trim());
            if !KEYS.contains(&key) {
                return Err(CliError::Config(format!("line {}: unknown key '{key}'", lineno + 1)));
            }
            if map.insert(key.to_string(), value.to_string()).is_some() {
                return Err(CliError::Config(format!("line {}: duplicate key '{key}'", lineno + 1)));
            }
            entries.push((key.to_string(), value.to_string()));
        }
        let get = |k: &str| map.get(k).map(String::as_str);

        let length = get("length").map(|v| real("length", v)).transpose()?.unwrap_or(TWO_PI);
        let nodes = match get("nodes") {
            Some(v) => v.parse::<usize>().map_err(|_| bad("nodes", v, "expected a positive integer"))?,
            None => 256,
        };
        let grid = SpatialGrid::new(length, nodes)?;

        let profile: Profile = get("profile").unwrap_or("one-minus-cos").parse()?;
        let mut initial = InitialCondition::named(profile);
        if let Some(v) = get("profile_norm") {
            initial = initial.with_norm(real("profile_norm", v)?);
        }

        let gain = get("gain").map(|v| real("gain", v)).transpose()?;
        let level = get("level").map(|v| real("level", v)).transpose()?;
        let law = match get("law").unwrap_or("linear") {
            "zero" => FeedbackLaw::Zero,
            "linear" => FeedbackLaw::linear(gain.unwrap_or(1.0))?,
            "saturated" => {
                let level = level.ok_or_else(|| CliError::Config("law = saturated requires level".into()))?;
                FeedbackLaw::saturated(gain.unwrap_or(1.0), level)?
            }
            other => return Err(bad("law", other, "expected zero, linear or saturated")),
        };
        if level.is_some() && !matches!(law, FeedbackLaw::Saturated { .. }) {
            return Err(CliError::Config("level is only meaningful for law = saturated".into()));
        }

        let final_time = get("final_time").map(|v| real("final_time", v)).transpose()?.unwrap_or(6.0);
        let mut config = SimConfig::new(grid, initial, law, final_time);
        if let Some(v) = get("dt") {
            config.stepper.dt = if v == "auto" { TimeStep::Auto } else { TimeStep::Fixed(real("dt", v)?) };
        }
        if let Some(v) = get("cfl") {
            config.stepper.cfl_safety = real("cfl", v)?;
        }
        if let Some(v) = get("scheme") {
            config.stepper.scheme = match v {
                "cn" | "semi-implicit-cn" => Scheme::SemiImplicitCn,
                "rk4" | "explicit-rk4-reference" => Scheme::ExplicitRk4Reference,
                other => return Err(bad("scheme", other, "expected cn or rk4")),
            };
        }
        if let Some(v) = get("nonlinear") {
            config.stepper.nonlinear = boolean("nonlinear", v)?;
        }
        if let Some(v) = get("nonlinear_form") {
            config.stepper.nonlinear_form = v.parse::<NonlinearForm>()?;
        }
        if let Some(v) = get("stride") {
            config.stride = v.parse().map_err(|_| bad("stride", v, "expected a positive integer"))?;
        }
        if let Some(v) = get("energy_slack") {
            config.energy_slack = real("energy_slack", v)?;
        }
        config.validate()?;

        let envelope_slack = get("envelope_slack").map(|v| real("envelope_slack", v)).transpose()?.unwrap_or(0.02);
        if !(envelope_slack > -1.0) {
            return Err(CliError::Config("envelope_slack must exceed -1".into()));
        }
        let radius = get("radius").map(|v| real("radius", v)).transpose()?;
        if radius.is_some_and(|r| r <= 0.0) {
            return Err(CliError::Config("radius must be positive".into()));
        }
        let file = |k: &str, default: &str| get(k).unwrap_or(default).to_string();
        Ok(Scenario {
            name: get("name").unwrap_or(default_name).to_string(),
            config,
            envelope_slack,
            radius,
            trace_file: file("trace_file", "trace.csv"),
            snapshot_file: file("snapshot_file", "snapshots.csv"),
            diagnostics_file: file("diagnostics_file", "diagnostics.csv"),
            report_file: file("report_file", "report.txt"),
            entries,
        })
    }
}
