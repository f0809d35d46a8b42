//! CSV writers. Every number is written with 17 significant digits.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use kdvsat::{ConvergenceTable, EnergyTrace, Trajectory};

use crate::CliError;

pub fn num(v: f64) -> String {
    format!("{v:.16e}")
}

fn save(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))
}

/// Energy trace with the two theoretical energies `E0 e^{-2 mu t}` and
/// `E0 e^{-2 a t}`; `NaN` where the law has no such envelope.
pub fn write_trace(path: &Path, trace: &EnergyTrace, mu: Option<f64>, a: Option<f64>) -> Result<(), CliError> {
    let mut out = String::from("t,E,sqrtE,envelope_mu,envelope_a,control_l2,boundary_slope\n");
    let e0 = trace.initial_energy();
    let theory = |rate: Option<f64>, t: f64| rate.map_or(f64::NAN, |r| e0 * (-2.0 * r * t).exp());
    for s in trace.samples() {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            num(s.t),
            num(s.energy),
            num(s.energy.sqrt()),
            num(theory(mu, s.t)),
            num(theory(a, s.t)),
            num(s.control_l2),
            num(s.boundary_slope)
        );
    }
    save(path, &out)
}

/// One `t,x,y` block per snapshot, blocks separated by a blank line. The
/// Dirichlet end points are included.
pub fn write_snapshots(path: &Path, traj: &Trajectory) -> Result<(), CliError> {
    let g = traj.grid();
    let mut out = String::from("t,x,y\n");
    for (k, (t, y)) in traj.times().iter().zip(traj.states()).enumerate() {
        if k > 0 {
            out.push('\n');
        }
        let ts = num(*t);
        let _ = writeln!(out, "{ts},{},{}", num(0.0), num(0.0));
        for (x, v) in g.nodes().zip(y.values()) {
            let _ = writeln!(out, "{ts},{},{}", num(x), num(*v));
        }
        let _ = writeln!(out, "{ts},{},{}", num(g.length()), num(0.0));
    }
    save(path, &out)
}

pub fn write_diagnostics(path: &Path, trace: &EnergyTrace) -> Result<(), CliError> {
    let mut out = String::from("t,weighted_energy,h1_seminorm,dissipation_residual\n");
    for s in trace.samples() {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            num(s.t),
            num(s.weighted_energy),
            num(s.h1_seminorm),
            num(s.dissipation_residual)
        );
    }
    save(path, &out)
}

pub fn write_convergence(path: &Path, table: &ConvergenceTable) -> Result<(), CliError> {
    let mut out = String::from("level,nodes,dt,steps,final_norm,diff_to_next,order\n");
    let opt = |v: Option<f64>| v.map_or_else(String::new, num);
    for (k, l) in table.levels.iter().enumerate() {
        let _ = writeln!(
            out,
            "{k},{},{},{},{},{},{}",
            l.n_interior,
            num(l.dt),
            l.steps,
            num(l.final_norm),
            opt(l.diff_to_next),
            opt(l.order)
        );
    }
    save(path, &out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_round_trip() {
        for v in [0.1, std::f64::consts::PI, 1e-300, -2.5e17, 0.0] {
            assert_eq!(num(v).parse::<f64>().unwrap(), v);
        }
        assert_eq!(num(1.0), "1.0000000000000000e0");
    }
}
