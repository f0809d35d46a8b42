//! Plain-text run report.

use std::fmt;
use std::time::Duration;

use kdvsat::EnvelopeReport;

/// Weighted-energy balance factor allowed on shipped scenarios.
pub const H1_BALANCE_LIMIT: f64 = 1.1;

#[derive(Debug, Clone)]
pub enum EnvelopeOutcome {
    /// The zero law carries no decay estimate.
    NotApplicable,
    Checked { mu: f64, radius: f64, slack: f64, report: EnvelopeReport },
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub scenario: String,
    pub entries: Vec<(String, String)>,
    pub law: String,
    pub envelope: EnvelopeOutcome,
    /// Theoretical `r e^{a T_r}` and measured `max_t ||y(t)|| e^{a t}`.
    pub amplification: Option<(f64, f64)>,
    pub max_energy_increase: f64,
    pub max_residual: f64,
    pub max_control_l2: f64,
    pub h1_balance: f64,
    pub boundary_trace: f64,
    pub steps: usize,
    pub substeps: usize,
    pub retries: usize,
    pub dt: f64,
    pub wall_clock: Duration,
    pub files: Vec<String>,
}

impl RunReport {
    pub fn envelope_passed(&self) -> bool {
        match &self.envelope {
            EnvelopeOutcome::NotApplicable => true,
            EnvelopeOutcome::Checked { report, .. } => !matches!(report, EnvelopeReport::Fail(_)),
        }
    }

    pub fn balance_passed(&self) -> bool {
        self.h1_balance <= H1_BALANCE_LIMIT
    }

    pub fn passed(&self) -> bool {
        self.envelope_passed() && self.balance_passed()
    }
}

impl fmt::Display for RunReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "scenario: {}", self.scenario)?;
        for (k, v) in &self.entries {
            writeln!(f, "  {k} = {v}")?;
        }
        writeln!(f, "law: {}", self.law)?;
        match &self.envelope {
            EnvelopeOutcome::NotApplicable => writeln!(f, "envelope: not applicable (zero law)")?,
            EnvelopeOutcome::Checked { mu, radius, slack, report } => {
                write!(f, "envelope: mu = {mu:.6}, r = {radius:.6}, slack = {slack}: ")?;
                match report {
                    EnvelopeReport::Pass { worst_margin } => writeln!(f, "PASS (worst margin {worst_margin:.6e})")?,
                    EnvelopeReport::Fail(v) => writeln!(
                        f,
                        "FAIL at sample {} (t = {:.6}, sqrtE = {:.6e} > bound {:.6e})",
                        v.index, v.time, v.sqrt_energy, v.bound
                    )?,
                    EnvelopeReport::Inapplicable { initial_norm, radius } => {
                        writeln!(f, "INAPPLICABLE (||y0|| = {initial_norm:.6} > r = {radius:.6})")?
                    }
                }
            }
        }
        if let Some((theory, measured)) = self.amplification {
            writeln!(f, "amplification: theoretical {theory:.6e}, measured {measured:.6e}")?;
        }
        writeln!(f, "max energy increase per step: {:.6e}", self.max_energy_increase)?;
        writeln!(f, "max |dissipation residual|: {:.6e}", self.max_residual)?;
        writeln!(f, "max control norm: {:.6e}", self.max_control_l2)?;
        writeln!(
            f,
            "weighted-energy balance: {:.6} ({})",
            self.h1_balance,
            if self.balance_passed() { "PASS" } else { "FAIL" }
        )?;
        writeln!(f, "boundary trace ratio: {:.6} (reported only)", self.boundary_trace)?;
        writeln!(
            f,
            "steps: {} (dt = {:.6e}, sub-steps {}, retries {})",
            self.steps, self.dt, self.substeps, self.retries
        )?;
        writeln!(f, "wall clock: {:.3} s", self.wall_clock.as_secs_f64())?;
        writeln!(f, "files:")?;
        for file in &self.files {
            writeln!(f, "  {file}")?;
        }
        write!(f, "verdict: {}", if self.passed() { "PASS" } else { "FAIL" })
    }
}
