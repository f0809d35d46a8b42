//! Distributed feedback laws and the decay-rate calculus for the
//! saturated closed loop.

use crate::diagnostics::EnergyTrace;
use crate::error::{KdvError, Result};
use crate::grid::{energy, StateField};
use crate::saturation::saturate_in_place;

/// Control `f` applied in `y_t + y_x + y_xxx + y y_x + f = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FeedbackLaw {
    Zero,
    /// `f = a y`.
    Linear { gain: f64 },
    /// `f = sat(a y)` with saturation level `u_s`.
    Saturated { gain: f64, level: f64 },
}

fn positive(name: &str, v: f64) -> Result<f64> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(KdvError::config(format!("{name} must be positive and finite, got {v}")))
    }
}

impl FeedbackLaw {
    pub fn linear(gain: f64) -> Result<Self> {
        Ok(FeedbackLaw::Linear { gain: positive("gain a", gain)? })
    }

    pub fn saturated(gain: f64, level: f64) -> Result<Self> {
        Ok(FeedbackLaw::Saturated {
            gain: positive("gain a", gain)?,
            level: positive("saturation level u_s", level)?,
        })
    }

    pub fn gain(&self) -> Option<f64> {
        match *self {
            FeedbackLaw::Zero => None,
            FeedbackLaw::Linear { gain } | FeedbackLaw::Saturated { gain, .. } => Some(gain),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            FeedbackLaw::Zero => "zero",
            FeedbackLaw::Linear { .. } => "linear",
            FeedbackLaw::Saturated { .. } => "saturated",
        }
    }

    /// Writes the control for `y` into `out`.
    pub(crate) fn control_into(&self, h: f64, y: &[f64], out: &mut [f64]) {
        match *self {
            FeedbackLaw::Zero => out.iter_mut().for_each(|v| *v = 0.0),
            FeedbackLaw::Linear { gain } => {
                out.iter_mut().zip(y).for_each(|(o, v)| *o = gain * v);
            }
            FeedbackLaw::Saturated { gain, level } => {
                out.iter_mut().zip(y).for_each(|(o, v)| *o = gain * v);
                saturate_in_place(h, out, level);
            }
        }
    }

    /// Scalar `g(y)` with `f(y) = g(y) y`.
    pub(crate) fn effective_gain(&self, h: f64, y: &[f64]) -> f64 {
        match *self {
            FeedbackLaw::Zero => 0.0,
            FeedbackLaw::Linear { gain } => gain,
            FeedbackLaw::Saturated { gain, level } => {
                let norm = energy(h, y).sqrt();
                if gain * norm > level {
                    level / norm
                } else {
                    gain
                }
            }
        }
    }

    pub(crate) fn control_raw(&self, h: f64, y: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; y.len()];
        self.control_into(h, y, &mut out);
        out
    }

    /// Decay envelope on the ball `||y0|| <= r`.
    ///
    /// The linear law is the `u_s -> infinity` limit (`mu = a`, no switch
    /// time). The zero law has no decay guarantee.
    pub fn decay_envelope(&self, r: f64) -> Result<DecayEnvelope> {
        match *self {
            FeedbackLaw::Zero => Err(KdvError::domain("the zero law has no decay envelope")),
            FeedbackLaw::Linear { gain } => DecayEnvelope::new(gain, f64::INFINITY, r),
            FeedbackLaw::Saturated { gain, level } => DecayEnvelope::new(gain, level, r),
        }
    }
}

pub fn control_field(law: &FeedbackLaw, y: &StateField) -> StateField {
    StateField::from_raw(*y.grid(), law.control_raw(y.grid().spacing(), y.values()))
}

/// Exponential envelopes of the saturated closed loop on `||y0|| <= r`.
///
/// * local: `||y(t)|| <= ||y0|| e^{-mu t}` with `mu = min{a, u_s / r}`;
/// * global: the trajectory enters the linear region `||y|| <= u_s / a`
///   by `T_r = ln(a r / u_s) / mu`, after which it decays like `e^{-a t}`,
///   giving `||y(t)|| <= ||y0|| e^{a T_r} e^{-a t}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayEnvelope {
    pub radius_r: f64,
    pub gain_a: f64,
    pub level_u_s: f64,
    pub mu: f64,
    pub switch_time_t_r: f64,
    pub amplification: f64,
}

impl DecayEnvelope {
    pub fn new(a: f64, u_s: f64, r: f64) -> Result<Self> {
        if !(r > 0.0 && r.is_finite()) {
            return Err(KdvError::domain(format!("radius r must be positive, got {r}")));
        }
        if !(a > 0.0 && a.is_finite()) {
            return Err(KdvError::domain(format!("gain a must be positive, got {a}")));
        }
        if !(u_s > 0.0) {
            return Err(KdvError::domain(format!("level u_s must be positive, got {u_s}")));
        }
        let mu = a.min(u_s / r);
        let switch = if a * r > u_s { (a * r / u_s).ln() / mu } else { 0.0 };
        Ok(DecayEnvelope {
            radius_r: r,
            gain_a: a,
            level_u_s: u_s,
            mu,
            switch_time_t_r: switch,
            amplification: (a * switch).exp(),
        })
    }

    /// `||y0|| e^{-mu t}`.
    pub fn local_bound(&self, initial_norm: f64, t: f64) -> f64 {
        initial_norm * (-self.mu * t).exp()
    }

    /// `r e^{a T_r} e^{-a t}`, valid for every `||y0|| <= r`.
    pub fn global_bound(&self, t: f64) -> f64 {
        self.class_k() * (-self.gain_a * t).exp()
    }

    /// The class-K representative `alpha(r) = r e^{a T_r(r)}`.
    pub fn class_k(&self) -> f64 {
        self.radius_r * self.amplification
    }
}

/// Free function form of [`FeedbackLaw::decay_envelope`].
pub fn decay_envelope(law: &FeedbackLaw, r: f64) -> Result<DecayEnvelope> {
    law.decay_envelope(r)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnvelopeViolation {
    pub index: usize,
    pub time: f64,
    pub sqrt_energy: f64,
    pub bound: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum EnvelopeReport {
    /// `sqrt(E(0)) > r`: the estimate does not apply to this trace.
    Inapplicable { initial_norm: f64, radius: f64 },
    /// Worst relative margin `1 - sqrt(E) / bound` over all samples.
    Pass { worst_margin: f64 },
    Fail(EnvelopeViolation),
}

impl EnvelopeReport {
    pub fn passed(&self) -> bool {
        matches!(self, EnvelopeReport::Pass { .. })
    }
}

/// Checks `sqrt(E(t_k)) <= sqrt(E(0)) e^{-mu t_k} (1 + slack)` at every sample.
pub fn envelope_check(trace: &EnergyTrace, env: &DecayEnvelope, slack: f64) -> Result<EnvelopeReport> {
    rate_check(trace, env.mu, env.radius_r, slack)
}

/// [`envelope_check`] for an explicit decay rate.
pub fn rate_check(trace: &EnergyTrace, mu: f64, radius: f64, slack: f64) -> Result<EnvelopeReport> {
    let samples = trace.samples();
    let first = samples
        .first()
        .ok_or_else(|| KdvError::Precondition("empty energy trace".into()))?;
    let initial_norm = first.energy.sqrt();
    if initial_norm > radius * (1.0 + 1e-12) {
        return Ok(EnvelopeReport::Inapplicable { initial_norm, radius });
    }
    let t0 = first.t;
    let mut worst = f64::INFINITY;
    for (index, s) in samples.iter().enumerate() {
        let sqrt_energy = s.energy.sqrt();
        let bound = initial_norm * (-mu * (s.t - t0)).exp() * (1.0 + slack);
        if sqrt_energy > bound {
            return Ok(EnvelopeReport::Fail(EnvelopeViolation {
                index,
                time: s.t,
                sqrt_energy,
                bound,
            }));
        }
        if bound > 0.0 {
            worst = worst.min(1.0 - sqrt_energy / bound);
        }
    }
    Ok(EnvelopeReport::Pass { worst_margin: worst })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diagnostics::TraceSample;
    use crate::grid::{named_profile, SpatialGrid, TWO_PI};
    use std::f64::consts::PI;

    fn trace_from(samples: impl IntoIterator<Item = (f64, f64)>) -> EnergyTrace {
        let mut tr = EnergyTrace::default();
        for (t, e) in samples {
            tr.push(TraceSample { t, energy: e, ..TraceSample::default() }).unwrap();
        }
        tr
    }

    #[test]
    fn control_fields() {
        let g = SpatialGrid::new(TWO_PI, 255).unwrap();
        let y = named_profile("one-minus-cos", g).unwrap();
        assert!(control_field(&FeedbackLaw::Zero, &y).is_zero());
        assert_eq!(control_field(&FeedbackLaw::linear(1.0).unwrap(), &y), y);
        let sat = control_field(&FeedbackLaw::saturated(1.0, 0.5).unwrap(), &y);
        let norm = y.l2_norm();
        assert!((norm - 3.07).abs() < 0.01);
        assert!((sat.l2_norm() - 0.5).abs() < 1e-14);
        assert!(sat.sub(&y.scaled(0.5 / norm)).max_abs() < 1e-15);
    }

    #[test]
    fn law_validation() {
        assert!(FeedbackLaw::linear(0.0).is_err());
        assert!(FeedbackLaw::saturated(1.0, -0.5).is_err());
        assert!(FeedbackLaw::saturated(f64::INFINITY, 0.5).is_err());
    }

    #[test]
    fn envelope_at_linear_boundary() {
        let env = FeedbackLaw::saturated(1.0, 0.5).unwrap().decay_envelope(0.5).unwrap();
        assert_eq!(env.mu, 1.0);
        assert_eq!(env.switch_time_t_r, 0.0);
        assert_eq!(env.amplification, 1.0);
    }

    #[test]
    fn envelope_reference_scenario() {
        let r = (3.0 * PI).sqrt();
        let env = decay_envelope(&FeedbackLaw::saturated(1.0, 0.5).unwrap(), r).unwrap();
        assert!((env.mu - 0.5 / r).abs() < 1e-15);
        assert!((env.mu - 0.16287).abs() < 1e-5);
        let t_r = (2.0 * r).ln() / env.mu;
        assert!((env.switch_time_t_r - t_r).abs() < 1e-12);
        assert!((env.switch_time_t_r - 11.143).abs() < 1e-3);
        assert!((env.amplification.ln() - env.switch_time_t_r).abs() < 1e-12);
    }

    #[test]
    fn envelope_direct_arithmetic() {
        let env = DecayEnvelope::new(2.0, 1.0, 4.0).unwrap();
        assert_eq!(env.mu, 0.25);
        assert!((env.switch_time_t_r - 4.0 * 8f64.ln()).abs() < 1e-12);
        assert!(DecayEnvelope::new(1.0, 1.0, 0.0).is_err());
        assert!(FeedbackLaw::Zero.decay_envelope(1.0).is_err());
    }

    #[test]
    fn linear_law_envelope_is_plain_exponential() {
        let env = FeedbackLaw::linear(1.5).unwrap().decay_envelope(10.0).unwrap();
        assert_eq!(env.mu, 1.5);
        assert_eq!(env.switch_time_t_r, 0.0);
        assert_eq!(env.amplification, 1.0);
    }

    #[test]
    fn envelope_continuity_at_switch() {
        for (a, u_s, r) in [(1.0, 0.5, 3.07), (2.0, 1.0, 4.0), (0.3, 0.01, 7.0)] {
            let env = DecayEnvelope::new(a, u_s, r).unwrap();
            let handoff = r * (-env.mu * env.switch_time_t_r).exp();
            assert!((handoff - u_s / a).abs() < 1e-12 * (u_s / a));
        }
    }

    #[test]
    fn global_envelope_dominates_two_phase_bound() {
        let env = DecayEnvelope::new(1.0, 0.5, 3.0).unwrap();
        for k in 0..400 {
            let t = 0.1 * k as f64;
            let two_phase = if t <= env.switch_time_t_r {
                env.local_bound(env.radius_r, t)
            } else {
                env.level_u_s / env.gain_a * (-env.gain_a * (t - env.switch_time_t_r)).exp()
            };
            assert!(two_phase <= env.global_bound(t) * (1.0 + 1e-12));
        }
    }

    #[test]
    fn mu_monotonicity() {
        let mut last = f64::INFINITY;
        for k in 1..50 {
            let mu = DecayEnvelope::new(1.0, 0.5, 0.1 * k as f64).unwrap().mu;
            assert!(mu <= last);
            last = mu;
        }
        let mut last = 0.0;
        for k in 1..50 {
            let mu = DecayEnvelope::new(1.0, 0.1 * k as f64, 2.0).unwrap().mu;
            assert!(mu >= last);
            last = mu;
        }
        assert_eq!(DecayEnvelope::new(2.0, 1.0, 0.5).unwrap().mu, 2.0);
    }

    #[test]
    fn zero_trace_passes_with_infinite_margin() {
        let env = DecayEnvelope::new(1.0, 0.5, 1.0).unwrap();
        let tr = trace_from((0..10).map(|k| (k as f64 * 0.1, 0.0)));
        assert_eq!(
            envelope_check(&tr, &env, 0.02).unwrap(),
            EnvelopeReport::Pass { worst_margin: f64::INFINITY }
        );
    }

    #[test]
    fn too_slow_decay_is_caught_at_first_crossing() {
        let env = DecayEnvelope::new(1.0, 0.5, 3.0).unwrap();
        let mu = env.mu;
        let dt = 0.05;
        // E(t) = E(0) e^{-mu t}: sqrt(E) decays at mu / 2 only.
        let tr = trace_from((0..400).map(|k| (k as f64 * dt, 4.0 * (-mu * k as f64 * dt).exp())));
        let crossing = 2.0 * 1.02f64.ln() / mu;
        match envelope_check(&tr, &env, 0.02).unwrap() {
            EnvelopeReport::Fail(v) => {
                assert!(v.time >= crossing && v.time < crossing + dt, "{v:?}");
                assert!(v.sqrt_energy > v.bound);
            }
            other => panic!("expected failure, got {other:?}"),
        }
    }

    #[test]
    fn oversized_initial_norm_is_inapplicable() {
        let env = DecayEnvelope::new(1.0, 0.5, 1.0).unwrap();
        let tr = trace_from([(0.0, 4.0), (0.1, 3.0)]);
        assert!(matches!(
            envelope_check(&tr, &env, 0.02).unwrap(),
            EnvelopeReport::Inapplicable { .. }
        ));
    }
}
