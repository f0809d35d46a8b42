use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use kdvsat::feedback::rate_check;
use kdvsat::properties::{reference_gain, run_all, GainFn, SuiteSizes};
use kdvsat::{convergence_study, critical_lengths, simulate, CriticalLengthQuery, FeedbackLaw};

use crate::output::{num, write_convergence, write_diagnostics, write_snapshots, write_trace};
use crate::report::{EnvelopeOutcome, RunReport};
use crate::scenario::Scenario;
use crate::CliError;

/// Order window required of linear-mode scenarios.
pub const ORDER_WINDOW: (f64, f64) = (1.8, 2.2);

fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("cannot create {}: {e}", dir.display())))
}

pub struct RunOptions {
    pub out: PathBuf,
    pub envelope_slack: Option<f64>,
    pub full_snapshots: bool,
}

pub fn run(mut scenario: Scenario, opts: &RunOptions) -> Result<RunReport, CliError> {
    if opts.full_snapshots {
        scenario.config.stride = 1;
    }
    let slack = opts.envelope_slack.unwrap_or(scenario.envelope_slack);
    if !(slack > -1.0 && slack.is_finite()) {
        return Err(CliError::Config(format!("envelope slack must exceed -1, got {slack}")));
    }
    let cfg = &scenario.config;
    let start = Instant::now();
    let out = simulate(cfg)?;
    let wall_clock = start.elapsed();
    let trace = &out.trace;
    let y0_norm = trace.initial_energy().sqrt();

    let (envelope, mu, amplification) = match cfg.law {
        FeedbackLaw::Zero => (EnvelopeOutcome::NotApplicable, None, None),
        law => {
            let radius = scenario.radius.unwrap_or(if y0_norm > 0.0 { y0_norm } else { 1.0 });
            let env = law.decay_envelope(radius)?;
            let report = rate_check(trace, env.mu, radius, slack)?;
            let amplification = match law {
                FeedbackLaw::Saturated { gain, .. } => {
                    let measured = trace
                        .samples()
                        .iter()
                        .map(|s| s.energy.sqrt() * (gain * s.t).exp())
                        .fold(0.0, f64::max);
                    Some((env.class_k(), measured))
                }
                _ => None,
            };
            (EnvelopeOutcome::Checked { mu: env.mu, radius, slack, report }, Some(env.mu), amplification)
        }
    };

    ensure_dir(&opts.out)?;
    let files = [&scenario.trace_file, &scenario.snapshot_file, &scenario.diagnostics_file, &scenario.report_file];
    let paths: Vec<PathBuf> = files.iter().map(|f| opts.out.join(f)).collect();
    write_trace(&paths[0], trace, mu, cfg.law.gain())?;
    write_snapshots(&paths[1], &out.trajectory)?;
    write_diagnostics(&paths[2], trace)?;

    let report = RunReport {
        scenario: scenario.name.clone(),
        entries: scenario.entries.clone(),
        law: format!("{:?}", cfg.law),
        envelope,
        amplification,
        max_energy_increase: trace.max_energy_increase(),
        max_residual: trace.max_dissipation_residual(),
        max_control_l2: trace.max_control_l2(),
        h1_balance: trace.h1_balance_ratio(cfg.grid.length()),
        boundary_trace: trace.boundary_trace_ratio(),
        steps: out.steps,
        substeps: out.substeps,
        retries: out.retries,
        dt: out.dt,
        wall_clock,
        files: paths.iter().map(|p| p.display().to_string()).collect(),
    };
    fs::write(&paths[3], format!("{report}\n"))
        .map_err(|e| CliError::Io(format!("cannot write {}: {e}", paths[3].display())))?;
    Ok(report)
}

pub fn faulty_gain(a: f64, u_s: f64, r: f64) -> f64 {
    (u_s / (a * r)).max(1.0)
}

/// Runs the property suites; returns the printed lines and the verdict.
pub fn check(seed: u64, slack: f64, gain: GainFn, sizes: SuiteSizes) -> (Vec<String>, bool) {
    let mut lines = Vec::new();
    let mut ok = true;
    for rep in run_all(seed, sizes, slack, gain) {
        match &rep.failure {
            None => lines.push(format!(
                "PASS {}: {} cases, seed {}, extreme value {:.6e}",
                rep.name, rep.cases, rep.seed, rep.worst
            )),
            Some(cx) => {
                ok = false;
                lines.push(format!(
                    "FAIL {}: case {} of {}, seed {}: {}",
                    rep.name, cx.case, rep.cases, rep.seed, cx.description
                ));
                lines.push(format!("  reproduce with: kdvsat check --seed {}", rep.seed));
            }
        }
    }
    (lines, ok)
}

pub fn default_check(seed: u64, slack: f64, inject_fault: bool) -> (Vec<String>, bool) {
    let gain: GainFn = if inject_fault { faulty_gain } else { reference_gain };
    check(seed, slack, gain, SuiteSizes::default())
}

pub fn convergence(scenario: &Scenario, levels: usize, out: &Path) -> Result<(Vec<String>, bool), CliError> {
    let table = convergence_study(&scenario.config, levels)?;
    ensure_dir(out)?;
    let csv = out.join("convergence.csv");
    write_convergence(&csv, &table)?;

    let exact = table.is_exact();
    let monotone = table.is_monotone();
    let mut lines = vec![format!("convergence: {} ({levels} levels)", scenario.name)];
    lines.push(format!("{:>5} {:>7} {:>24} {:>24} {:>8}", "level", "nodes", "dt", "diff to next", "order"));
    for (k, l) in table.levels.iter().enumerate() {
        let diff = l.diff_to_next.map_or_else(|| "-".to_string(), num);
        let order = match (exact, l.order) {
            (true, Some(_)) => "exact".to_string(),
            (false, Some(p)) => format!("{p:.4}"),
            (_, None) => "-".to_string(),
        };
        lines.push(format!("{k:>5} {:>7} {:>24} {diff:>24} {order:>8}", l.n_interior, num(l.dt)));
    }
    let mut ok = true;
    if !exact && !monotone {
        ok = false;
        lines.push("FLAGGED: successive differences are not monotone".into());
    }
    let linear_mode = !scenario.config.stepper.nonlinear;
    if linear_mode && !exact {
        let (lo, hi) = ORDER_WINDOW;
        let inside = table.orders().iter().all(|p| (lo..=hi).contains(p));
        if !inside {
            ok = false;
            lines.push(format!("FLAGGED: linear-mode orders outside [{lo}, {hi}]"));
        }
    }
    lines.push(format!("table written to {}", csv.display()));
    Ok((lines, ok))
}

pub fn critical(length: f64, bound: u32, tol: f64) -> Result<Vec<String>, CliError> {
    let q = CriticalLengthQuery::new(length, bound, tol)?;
    let matches = critical_lengths(&q);
    if matches.is_empty() {
        return Ok(vec![format!(
            "L = {length}: not critical for 1 <= k, l <= {bound} within tolerance {tol:e}"
        )]);
    }
    let mut lines = vec![format!("L = {length}: critical within tolerance {tol:e}")];
    for m in matches {
        lines.push(format!("  k = {}, l = {}, L_kl = {}", m.k, m.l, num(m.length)));
    }
    Ok(lines)
}
