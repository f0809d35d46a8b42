//! Energy diagnostics recorded along trajectories.

use crate::error::{KdvError, Result};
use crate::feedback::FeedbackLaw;
use crate::grid::{energy, h1_seminorm_raw, inner, StateField};
use crate::operators::boundary_flux;
use crate::stepper::Trajectory;

/// One row of an [`EnergyTrace`].
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TraceSample {
    pub t: f64,
    /// `||y||^2`.
    pub energy: f64,
    /// Second-order one-sided `y_x(t, 0)`.
    pub boundary_slope: f64,
    /// `||f(t, .)||`.
    pub control_l2: f64,
    /// `int x y^2 dx`.
    pub weighted_energy: f64,
    pub h1_seminorm: f64,
    /// Residual of the discrete energy balance over the step ending at `t`
    /// (zero for the first sample).
    pub dissipation_residual: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct EnergyTrace {
    samples: Vec<TraceSample>,
}

impl EnergyTrace {
    pub fn push(&mut self, s: TraceSample) -> Result<()> {
        if let Some(last) = self.samples.last() {
            if !(s.t > last.t) {
                return Err(KdvError::Precondition(format!(
                    "trace times must increase strictly ({} after {})",
                    s.t, last.t
                )));
            }
        }
        if !(s.energy >= 0.0) {
            return Err(KdvError::Precondition(format!("negative energy {}", s.energy)));
        }
        self.samples.push(s);
        Ok(())
    }

    pub fn samples(&self) -> &[TraceSample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn initial_energy(&self) -> f64 {
        self.samples.first().map_or(0.0, |s| s.energy)
    }

    /// Largest per-sample energy increase `E(t_{k+1}) - E(t_k)`.
    pub fn max_energy_increase(&self) -> f64 {
        self.samples
            .windows(2)
            .map(|w| w[1].energy - w[0].energy)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn is_energy_monotone(&self, slack: f64) -> bool {
        self.samples.windows(2).all(|w| w[1].energy <= w[0].energy + slack)
    }

    pub fn max_dissipation_residual(&self) -> f64 {
        self.samples
            .iter()
            .skip(1)
            .map(|s| s.dissipation_residual)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn max_control_l2(&self) -> f64 {
        self.samples.iter().map(|s| s.control_l2).fold(0.0, f64::max)
    }

    fn trapezoid(&self, f: impl Fn(&TraceSample) -> f64) -> f64 {
        self.samples
            .windows(2)
            .map(|w| 0.5 * (w[1].t - w[0].t) * (f(&w[0]) + f(&w[1])))
            .sum()
    }

    /// `||y_x(., 0)||_{L^2(0, T)} / ||y0||`, trace regularity of the boundary
    /// slope. Reported, not asserted: the discrete constant depends on the
    /// boundary stencil.
    pub fn boundary_trace_ratio(&self) -> f64 {
        let e0 = self.initial_energy();
        if e0 == 0.0 {
            return 0.0;
        }
        (self.trapezoid(|s| s.boundary_slope * s.boundary_slope) / e0).sqrt()
    }

    /// Ratio of the two sides of the time-integrated weighted estimate
    ///
    /// `(W(T) - W(0)) / 2 + int_0^T ||y_x||^2 dt <= T (S^2 / 2 + L S^4 / 18)`,
    ///
    /// with `W = int x y^2` and `S = sup_t ||y(t)||`. Values `<= 1` mean the
    /// estimate holds; zero trajectories give 0.
    pub fn h1_balance_ratio(&self, length: f64) -> f64 {
        let (Some(first), Some(last)) = (self.samples.first(), self.samples.last()) else {
            return 0.0;
        };
        let sup2 = self.samples.iter().map(|s| s.energy).fold(0.0, f64::max);
        let horizon = last.t - first.t;
        let rhs = horizon * (0.5 * sup2 + length / 18.0 * sup2 * sup2);
        if rhs == 0.0 {
            return 0.0;
        }
        let lhs = 0.5 * (last.weighted_energy - first.weighted_energy)
            + self.trapezoid(|s| s.h1_seminorm * s.h1_seminorm);
        lhs / rhs
    }
}

/// `(4 y_1 - y_2) / (2h)`, second order with `y_0 = 0`.
pub fn boundary_slope(y: &StateField) -> f64 {
    boundary_slope_raw(y.grid().spacing(), y.values())
}

pub(crate) fn boundary_slope_raw(h: f64, y: &[f64]) -> f64 {
    (4.0 * y[0] - y[1]) / (2.0 * h)
}

/// `h * sum x_i y_i^2`.
pub fn weighted_energy(y: &StateField) -> f64 {
    let g = y.grid();
    g.spacing() * g.nodes().zip(y.values()).map(|(x, v)| x * v * v).sum::<f64>()
}

pub(crate) fn sample_for(
    h: f64,
    t: f64,
    y: &[f64],
    control: &[f64],
    residual: f64,
) -> TraceSample {
    TraceSample {
        t,
        energy: energy(h, y),
        boundary_slope: boundary_slope_raw(h, y),
        control_l2: energy(h, control).sqrt(),
        weighted_energy: h * y
            .iter()
            .enumerate()
            .map(|(i, v)| (i as f64 + 1.0) * h * v * v)
            .sum::<f64>(),
        h1_seminorm: h1_seminorm_raw(h, y),
        dissipation_residual: residual,
    }
}

pub(crate) fn residual_raw(h: f64, y: &[f64], y_next: &[f64], dt: f64, law: &FeedbackLaw) -> f64 {
    let mid: Vec<f64> = y.iter().zip(y_next).map(|(a, b)| 0.5 * (a + b)).collect();
    let f_mid = law.control_raw(h, &mid);
    (energy(h, y_next) - energy(h, y)) / (2.0 * dt) + boundary_flux(h, &mid) + inner(h, &mid, &f_mid)
}

/// Residual of `(1/2) dE/dt + boundary dissipation + <y, f(y)> = 0` over one
/// step, with every term centred at the midpoint state.
///
/// The boundary term is the exact boundary dissipation of the discrete
/// operator. The transport term is energy-neutral and drops out.
pub fn dissipation_residual(y: &StateField, y_next: &StateField, dt: f64, law: &FeedbackLaw) -> f64 {
    assert_eq!(y.grid(), y_next.grid());
    residual_raw(y.grid().spacing(), y.values(), y_next.values(), dt, law)
}

/// `sup_t ||y|| + (int_0^T (||y||^2 + ||y_x||^2) dt)^{1/2}` with the
/// trapezoid rule in time.
pub fn bt_norm(traj: &Trajectory) -> f64 {
    let h = traj.grid().spacing();
    let states: Vec<&[f64]> = traj.states().iter().map(|s| s.values()).collect();
    bt_norm_raw(h, traj.times(), &states)
}

pub(crate) fn bt_norm_raw(h: f64, times: &[f64], states: &[&[f64]]) -> f64 {
    let sup = states.iter().map(|y| energy(h, y).sqrt()).fold(0.0, f64::max);
    let dens: Vec<f64> = states
        .iter()
        .map(|y| energy(h, y) + h1_seminorm_raw(h, y).powi(2))
        .collect();
    let integral: f64 = times
        .windows(2)
        .zip(dens.windows(2))
        .map(|(t, d)| 0.5 * (t[1] - t[0]) * (d[0] + d[1]))
        .sum();
    sup + integral.sqrt()
}
