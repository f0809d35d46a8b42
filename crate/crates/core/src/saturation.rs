//! Saturation in `L^2`-norm and the sector condition it satisfies.
//!
//! `sat(s) = s` when `||s|| <= u_s`, otherwise `s * u_s / ||s||`. The norm is
//! the discrete one from [`crate::grid`], so the saturation sees exactly the
//! quantity that the diagnostics report. Geometrically `sat` is the metric
//! projection onto the closed ball of radius `u_s`.

use crate::error::{KdvError, Result};
use crate::grid::{energy, StateField};

/// Saturation level `u_s`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SaturationParams {
    level: f64,
}

impl SaturationParams {
    pub fn new(level: f64) -> Result<Self> {
        if !(level > 0.0) {
            return Err(KdvError::domain(format!(
                "saturation level must be positive, got {level}"
            )));
        }
        Ok(SaturationParams { level })
    }

    pub fn level(&self) -> f64 {
        self.level
    }
}

/// Saturates `values` in place, returning the norm of the input.
///
/// A single branch on `norm > level` is enough: at `norm == level` both
/// formulas agree, and the pass-through branch also covers `norm == 0`.
#[inline]
pub(crate) fn saturate_in_place(h: f64, values: &mut [f64], level: f64) -> f64 {
    let norm = energy(h, values).sqrt();
    if norm > level {
        let c = level / norm;
        values.iter_mut().for_each(|v| *v *= c);
    }
    norm
}

pub fn sat(s: &StateField, p: SaturationParams) -> StateField {
    let mut v = s.values().to_vec();
    saturate_in_place(s.grid().spacing(), &mut v, p.level);
    StateField::from_raw(*s.grid(), v)
}

/// `||sat(s) - sat(t)|| / ||s - t||`.
pub fn lipschitz_ratio(s: &StateField, t: &StateField, p: SaturationParams) -> Result<f64> {
    let diff = s.sub(t).l2_norm();
    if diff == 0.0 {
        return Err(KdvError::Precondition(
            "Lipschitz ratio is undefined for identical fields".into(),
        ));
    }
    Ok(sat(s, p).sub(&sat(t, p)).l2_norm() / diff)
}

/// Sector gain `k(r) = min{u_s / (a r), 1}` valid on the ball `||s|| <= r`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SectorGain {
    pub gain_a: f64,
    pub radius_r: f64,
    pub k_of_r: f64,
}

pub fn sector_gain(a: f64, u_s: f64, r: f64) -> Result<SectorGain> {
    for (name, v) in [("a", a), ("u_s", u_s), ("r", r)] {
        if !(v > 0.0) {
            return Err(KdvError::domain(format!("{name} must be positive, got {v}")));
        }
    }
    Ok(SectorGain {
        gain_a: a,
        radius_r: r,
        k_of_r: (u_s / (a * r)).min(1.0),
    })
}

/// Relative slack on `||s|| <= r` so that fields scaled onto the sphere
/// pass despite round-off.
const RADIUS_SLACK: f64 = 1e-12;

/// Minimum over nodes of `(sat(a s)(x) - k(r) a s(x)) s(x)`.
pub fn sector_defect(s: &StateField, g: &SectorGain, p: SaturationParams) -> Result<f64> {
    let norm = s.l2_norm();
    if norm > g.radius_r * (1.0 + RADIUS_SLACK) {
        return Err(KdvError::Precondition(format!(
            "||s|| = {norm} exceeds the sector radius r = {}",
            g.radius_r
        )));
    }
    let a = g.gain_a;
    let mut sat_as: Vec<f64> = s.values().iter().map(|v| a * v).collect();
    saturate_in_place(s.grid().spacing(), &mut sat_as, p.level());
    Ok(s
        .values()
        .iter()
        .zip(&sat_as)
        .map(|(&si, &sa)| (sa - g.k_of_r * a * si) * si)
        .fold(f64::INFINITY, f64::min))
}
