//! Time integration of the closed loop
//! `y_t + y_x + y_xxx + y y_x + f(y) = 0`.
//!
//! The production scheme is a two-stage Crank-Nicolson step in which the
//! transport velocity and the control gain are frozen:
//!
//! ```text
//! (I - dt/2 L(w)) y+ = (I + dt/2 L(w)) y,    L(w) = A_h - B_w - g(w) I
//! ```
//!
//! Here `B_w` is the tridiagonal transport matrix with `B_y y = N(y)` and
//! `g(w)` is the scalar with `f(w) = g(w) w`. The first stage freezes at
//! `w = y`, the second at the average of `y` and the first-stage result.
//! With the skew-symmetric transport form `B_w` is skew and `g >= 0`, so
//! every stage satisfies `E+ - E = 2 dt (<A_h m, m> - g ||m||^2) <= 0` with
//! `m = (y + y+) / 2`.
//!
//! An explicit RK4 integrator with automatic micro-steps is kept as a
//! reference for verifying the production scheme.

use crate::banded::{BandedLu, BandedMatrix};
use crate::diagnostics::{residual_raw, sample_for, EnergyTrace};
use crate::error::{KdvError, Result};
use crate::feedback::FeedbackLaw;
use crate::grid::{energy, Profile, SpatialGrid, StateField};
use crate::operators::{build_linear_operator, nonlinear_raw, transport_matrix, DiscreteLinearOperator, NonlinearForm};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Scheme {
    #[default]
    SemiImplicitCn,
    ExplicitRk4Reference,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum TimeStep {
    /// `dt = cfl_safety * h / max(1, max|y0|)`, rounded down to divide `T`.
    #[default]
    Auto,
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepperConfig {
    pub dt: TimeStep,
    pub scheme: Scheme,
    pub cfl_safety: f64,
    /// `false` drops the `y y_x` term (linear mode).
    pub nonlinear: bool,
    pub nonlinear_form: NonlinearForm,
    /// Re-solves with the frozen state moved to the latest midpoint.
    pub corrector_passes: usize,
}

impl Default for StepperConfig {
    fn default() -> Self {
        StepperConfig {
            dt: TimeStep::Auto,
            scheme: Scheme::SemiImplicitCn,
            cfl_safety: 0.5,
            nonlinear: true,
            nonlinear_form: NonlinearForm::SkewSymmetric,
            corrector_passes: 2,
        }
    }
}

/// Initial condition: a named profile or tabulated nodal values, optionally
/// rescaled to a prescribed `L^2` norm.
#[derive(Debug, Clone, PartialEq)]
pub enum InitialShape {
    Named(Profile),
    Tabulated(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct InitialCondition {
    pub shape: InitialShape,
    pub target_norm: Option<f64>,
}

impl InitialCondition {
    pub fn named(profile: Profile) -> Self {
        InitialCondition { shape: InitialShape::Named(profile), target_norm: None }
    }

    pub fn with_norm(mut self, norm: f64) -> Self {
        self.target_norm = Some(norm);
        self
    }

    pub fn sample(&self, grid: SpatialGrid) -> Result<StateField> {
        let y = match &self.shape {
            InitialShape::Named(p) => p.sample(grid),
            InitialShape::Tabulated(v) => StateField::new(grid, v.clone())?,
        };
        match self.target_norm {
            None => Ok(y),
            Some(target) => {
                if !(target >= 0.0 && target.is_finite()) {
                    return Err(KdvError::Config(format!("invalid target norm {target}")));
                }
                let norm = y.l2_norm();
                if norm == 0.0 {
                    if target == 0.0 {
                        return Ok(y);
                    }
                    return Err(KdvError::Config("cannot rescale a zero profile".into()));
                }
                Ok(y.scaled(target / norm))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub grid: SpatialGrid,
    pub initial: InitialCondition,
    pub law: FeedbackLaw,
    pub final_time: f64,
    pub stepper: StepperConfig,
    /// Snapshot every `stride` steps (the final state is always kept).
    pub stride: usize,
    /// Allowed per-step energy increase.
    pub energy_slack: f64,
    /// Step halvings tried before giving up on energy growth.
    pub max_retries: u32,
}

impl SimConfig {
    pub const DEFAULT_STRIDE: usize = 50;
    pub const DEFAULT_ENERGY_SLACK: f64 = 1e-10;

    pub fn new(grid: SpatialGrid, initial: InitialCondition, law: FeedbackLaw, final_time: f64) -> Self {
        SimConfig {
            grid,
            initial,
            law,
            final_time,
            stepper: StepperConfig::default(),
            stride: Self::DEFAULT_STRIDE,
            energy_slack: Self::DEFAULT_ENERGY_SLACK,
            max_retries: 5,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let t = self.final_time;
        if !(t > 0.0 && t.is_finite()) {
            return Err(KdvError::Config(format!("final time must be positive, got {t}")));
        }
        if let TimeStep::Fixed(dt) = self.stepper.dt {
            if !(dt > 0.0 && dt < t) {
                return Err(KdvError::Config(format!("dt must lie in (0, T), got {dt}")));
            }
        }
        let cfl = self.stepper.cfl_safety;
        if !(cfl > 0.0 && cfl <= 1.0) {
            return Err(KdvError::Config(format!("cfl safety must lie in (0, 1], got {cfl}")));
        }
        if self.stride == 0 {
            return Err(KdvError::Config("stride must be at least 1".into()));
        }
        if !(self.energy_slack >= 0.0) {
            return Err(KdvError::Config("energy slack must be nonnegative".into()));
        }
        Ok(())
    }

    pub fn initial_state(&self) -> Result<StateField> {
        self.initial.sample(self.grid)
    }

    /// Base step and number of steps, with `steps * dt == T`.
    pub fn resolve_dt(&self, y0: &StateField) -> (f64, usize) {
        let t = self.final_time;
        let target = match self.stepper.dt {
            TimeStep::Fixed(dt) => dt,
            TimeStep::Auto => cfl_limit(self.stepper.cfl_safety, self.grid.spacing(), y0.values()),
        };
        let steps = ((t / target) - 1e-9).ceil().max(1.0) as usize;
        (t / steps as f64, steps)
    }
}

/// Transport restriction `cfl * h / max(1, max|y|)`.
fn cfl_limit(cfl: f64, h: f64, y: &[f64]) -> f64 {
    let peak = y.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    cfl * h / peak
}

/// Time-ordered snapshots of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    grid: SpatialGrid,
    times: Vec<f64>,
    states: Vec<StateField>,
}

impl Trajectory {
    pub fn new(initial: StateField) -> Self {
        Trajectory { grid: *initial.grid(), times: vec![0.0], states: vec![initial] }
    }

    pub fn push(&mut self, t: f64, y: StateField) -> Result<()> {
        if !(t > *self.times.last().expect("never empty")) {
            return Err(KdvError::Precondition(format!("snapshot time {t} does not increase")));
        }
        if *y.grid() != self.grid {
            return Err(KdvError::Dimension("snapshot on a different grid".into()));
        }
        self.times.push(t);
        self.states.push(y);
        Ok(())
    }

    pub fn grid(&self) -> &SpatialGrid {
        &self.grid
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn states(&self) -> &[StateField] {
        &self.states
    }

    pub fn final_state(&self) -> &StateField {
        self.states.last().expect("never empty")
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Snapshots at `t <= horizon`.
    pub fn truncated(&self, horizon: f64) -> Trajectory {
        let k = self.times.partition_point(|&t| t <= horizon).max(1);
        Trajectory {
            grid: self.grid,
            times: self.times[..k].to_vec(),
            states: self.states[..k].to_vec(),
        }
    }
}

/// Advances states of one grid for a fixed law and scheme.
///
/// In linear mode the Crank-Nicolson factorization depends on `dt` only and
/// is cached across steps.
#[derive(Debug)]
pub struct Stepper {
    op: DiscreteLinearOperator,
    law: FeedbackLaw,
    config: StepperConfig,
    cached: Option<((f64, f64), BandedLu)>,
    rk4_radius: f64,
}

impl Stepper {
    pub fn new(grid: SpatialGrid, law: FeedbackLaw, config: StepperConfig) -> Result<Self> {
        let op = build_linear_operator(grid)?;
        let m = op.matrix();
        let n = m.dim();
        let rk4_radius = (0..n)
            .map(|i| (i.saturating_sub(2)..(i + 3).min(n)).map(|j| m.get(i, j).abs()).sum::<f64>())
            .fold(0.0, f64::max);
        Ok(Stepper { op, law, config, cached: None, rk4_radius })
    }

    pub fn operator(&self) -> &DiscreteLinearOperator {
        &self.op
    }

    pub fn law(&self) -> &FeedbackLaw {
        &self.law
    }

    pub fn config(&self) -> &StepperConfig {
        &self.config
    }

    fn h(&self) -> f64 {
        self.op.grid().spacing()
    }

    /// One step of size `dt`; does not sub-step.
    pub fn step(&mut self, y: &StateField, dt: f64) -> Result<StateField> {
        assert_eq!(y.grid(), self.op.grid());
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(KdvError::Config(format!("invalid step {dt}")));
        }
        let next = match self.config.scheme {
            Scheme::SemiImplicitCn => self.cn_step(y.values(), dt)?,
            Scheme::ExplicitRk4Reference => self.rk4_advance(y.values(), dt),
        };
        if let Some(i) = next.iter().position(|v| !v.is_finite()) {
            return Err(KdvError::Instability {
                time: f64::NAN,
                message: format!("non-finite value at node {i} after a step of {dt}"),
            });
        }
        Ok(StateField::from_raw(*y.grid(), next))
    }

    /// `A_h - B_w - g(w) I`, dropping `B_w` in linear mode.
    fn implicit_operator(&self, w: &[f64], damping: f64) -> BandedMatrix {
        let a = self.op.matrix();
        let mut l = if self.config.nonlinear {
            a.add_scaled(-1.0, &transport_matrix(self.h(), w, self.config.nonlinear_form))
        } else {
            a.clone()
        };
        if damping != 0.0 {
            l = l.shifted(-damping, 1.0);
        }
        l
    }

    /// Crank-Nicolson half-step with the transport and control gain frozen
    /// at `w`.
    fn cn_frozen(&mut self, w: &[f64], dt: f64, y: &[f64]) -> Result<Vec<f64>> {
        let damping = self.law.effective_gain(self.h(), w);
        let l = self.implicit_operator(w, damping);
        let mut rhs = l.shifted(1.0, 0.5 * dt).matvec(y);
        if self.config.nonlinear {
            l.shifted(1.0, -0.5 * dt).factorize()?.solve_in_place(&mut rhs);
        } else {
            let key = (dt, damping);
            let fresh = !matches!(&self.cached, Some((k, _)) if *k == key);
            if fresh {
                self.cached = Some((key, l.shifted(1.0, -0.5 * dt).factorize()?));
            }
            self.cached.as_ref().expect("just cached").1.solve_in_place(&mut rhs);
        }
        Ok(rhs)
    }

    fn cn_step(&mut self, y: &[f64], dt: f64) -> Result<Vec<f64>> {
        let frozen_is_exact = !self.config.nonlinear && !matches!(self.law, FeedbackLaw::Saturated { .. });
        if frozen_is_exact {
            return self.cn_frozen(y, dt, y);
        }
        let mut next = self.cn_frozen(y, dt, y)?;
        for _ in 0..self.config.corrector_passes {
            let w: Vec<f64> = y.iter().zip(&next).map(|(a, b)| 0.5 * (a + b)).collect();
            next = self.cn_frozen(&w, dt, y)?;
        }
        Ok(next)
    }

    fn rhs(&self, y: &[f64]) -> Vec<f64> {
        let h = self.h();
        let mut out = self.op.matrix().matvec(y);
        let f = self.law.control_raw(h, y);
        out.iter_mut().zip(&f).for_each(|(o, c)| *o -= c);
        if self.config.nonlinear {
            let nl = nonlinear_raw(h, y, self.config.nonlinear_form);
            out.iter_mut().zip(&nl).for_each(|(o, c)| *o -= c);
        }
        out
    }

    /// Stable RK4 step size for the stiff dispersive operator.
    pub fn rk4_max_step(&self, y: &[f64]) -> f64 {
        let peak = y.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let transport = if self.config.nonlinear { 2.0 * peak / self.h() } else { 0.0 };
        let control = 3.0 * self.law.gain().unwrap_or(0.0);
        2.0 / (self.rk4_radius + transport + control)
    }

    fn rk4_advance(&self, y: &[f64], dt: f64) -> Vec<f64> {
        let micro = (dt / self.rk4_max_step(y)).ceil().max(1.0) as usize;
        let tau = dt / micro as f64;
        let axpy = |y: &[f64], c: f64, k: &[f64]| -> Vec<f64> {
            y.iter().zip(k).map(|(a, b)| a + c * b).collect()
        };
        let mut state = y.to_vec();
        for _ in 0..micro {
            let k1 = self.rhs(&state);
            let k2 = self.rhs(&axpy(&state, 0.5 * tau, &k1));
            let k3 = self.rhs(&axpy(&state, 0.5 * tau, &k2));
            let k4 = self.rhs(&axpy(&state, tau, &k3));
            for i in 0..state.len() {
                state[i] += tau / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            }
        }
        state
    }
}

/// One production step from `y` with a freshly built operator.
pub fn step(y: &StateField, dt: f64, law: &FeedbackLaw, config: &StepperConfig) -> Result<StateField> {
    Stepper::new(*y.grid(), *law, *config)?.step(y, dt)
}

#[derive(Debug, Clone)]
pub struct SimulationOutput {
    pub trajectory: Trajectory,
    pub trace: EnergyTrace,
    pub dt: f64,
    pub steps: usize,
    /// Sub-steps actually taken (equals `steps` when no step was split).
    pub substeps: usize,
    /// Step halvings triggered by energy growth.
    pub retries: usize,
}

/// Integrates `config` to its final time, recording the energy trace at
/// every step and snapshots every `stride` steps.
///
/// A base step that violates the transport restriction for the current
/// state is split into equal sub-steps. A sub-step that raises the energy
/// by more than `energy_slack` is retried with half the size, at most
/// `max_retries` times, after which the run aborts.
pub fn simulate(config: &SimConfig) -> Result<SimulationOutput> {
    config.validate()?;
    let y0 = config.initial_state()?;
    let (dt, steps) = config.resolve_dt(&y0);
    let grid = config.grid;
    let h = grid.spacing();
    let mut stepper = Stepper::new(grid, config.law, config.stepper)?;

    let mut trace = EnergyTrace::default();
    trace.push(sample_for(h, 0.0, y0.values(), &config.law.control_raw(h, y0.values()), 0.0))?;
    let mut trajectory = Trajectory::new(y0.clone());
    let mut y = y0;
    let (mut substeps_total, mut retries) = (0usize, 0usize);

    for k in 1..=steps {
        let t_prev = (k - 1) as f64 * dt;
        let mut pieces = match config.stepper.scheme {
            Scheme::SemiImplicitCn => {
                let limit = cfl_limit(config.stepper.cfl_safety, h, y.values());
                ((dt / limit) - 1e-9).ceil().max(1.0) as usize
            }
            Scheme::ExplicitRk4Reference => 1,
        };
        let mut attempt = 0;
        let (next, residual) = loop {
            match advance(&mut stepper, &y, dt, pieces, config.energy_slack) {
                Ok(done) => break done,
                Err(Growth::Energy(_)) if attempt < config.max_retries => {
                    attempt += 1;
                    retries += 1;
                    pieces *= 2;
                }
                Err(Growth::Energy(growth)) => {
                    return Err(KdvError::Instability {
                        time: t_prev,
                        message: format!(
                            "energy grew by {growth:e} after {attempt} step halvings; \
                             rerun with dt below {:e}",
                            dt / pieces as f64 / 2.0
                        ),
                    })
                }
                Err(Growth::Failed(mut e)) => {
                    if let KdvError::Instability { time, .. } = &mut e {
                        *time = t_prev;
                    }
                    return Err(e);
                }
            }
        };
        substeps_total += pieces;
        let t = if k == steps { config.final_time } else { k as f64 * dt };
        trace.push(sample_for(h, t, next.values(), &config.law.control_raw(h, next.values()), residual))?;
        if k % config.stride == 0 || k == steps {
            trajectory.push(t, next.clone())?;
        }
        y = next;
    }

    Ok(SimulationOutput { trajectory, trace, dt, steps, substeps: substeps_total, retries })
}

enum Growth {
    Energy(f64),
    Failed(KdvError),
}

/// Takes `pieces` equal sub-steps; returns the new state and the sub-step
/// dissipation residual of largest magnitude.
fn advance(
    stepper: &mut Stepper,
    y: &StateField,
    dt: f64,
    pieces: usize,
    slack: f64,
) -> std::result::Result<(StateField, f64), Growth> {
    let tau = dt / pieces as f64;
    let h = y.grid().spacing();
    let law = *stepper.law();
    let mut cur = y.clone();
    let mut e = energy(h, cur.values());
    let mut residual = 0.0f64;
    for _ in 0..pieces {
        let next = stepper.step(&cur, tau).map_err(Growth::Failed)?;
        let e_next = energy(h, next.values());
        if e_next > e + slack {
            return Err(Growth::Energy(e_next - e));
        }
        let r = residual_raw(h, cur.values(), next.values(), tau, &law);
        if r.abs() > residual.abs() {
            residual = r;
        }
        cur = next;
        e = e_next;
    }
    Ok((cur, residual))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::TWO_PI;

    fn config(n: usize, law: FeedbackLaw, t: f64) -> SimConfig {
        SimConfig::new(
            SpatialGrid::new(TWO_PI, n).unwrap(),
            InitialCondition::named(Profile::OneMinusCos),
            law,
            t,
        )
    }

    #[test]
    fn zero_is_an_equilibrium() {
        let g = SpatialGrid::new(TWO_PI, 32).unwrap();
        let z = StateField::zeros(g);
        for law in [
            FeedbackLaw::Zero,
            FeedbackLaw::linear(1.0).unwrap(),
            FeedbackLaw::saturated(1.0, 0.5).unwrap(),
        ] {
            for scheme in [Scheme::SemiImplicitCn, Scheme::ExplicitRk4Reference] {
                let cfg = StepperConfig { scheme, ..Default::default() };
                assert!(step(&z, 0.01, &law, &cfg).unwrap().is_zero());
            }
        }
    }

    #[test]
    fn zero_initial_data_gives_zero_run() {
        let mut cfg = config(32, FeedbackLaw::saturated(1.0, 0.5).unwrap(), 1.0);
        cfg.initial = InitialCondition::named(Profile::Zero);
        let out = simulate(&cfg).unwrap();
        assert!(out.trajectory.states().iter().all(|s| s.is_zero()));
        assert!(out.trace.samples().iter().all(|s| s.energy == 0.0 && s.control_l2 == 0.0));
    }

    #[test]
    fn linear_zero_law_step_is_nonexpansive() {
        let g = SpatialGrid::new(TWO_PI, 64).unwrap();
        let y = Profile::Gaussian.sample(g);
        let cfg = StepperConfig { nonlinear: false, ..Default::default() };
        let mut st = Stepper::new(g, FeedbackLaw::Zero, cfg).unwrap();
        let mut cur = y;
        for _ in 0..50 {
            let next = st.step(&cur, 0.05).unwrap();
            assert!(next.l2_norm() <= cur.l2_norm() * (1.0 + 1e-14));
            cur = next;
        }
    }

    #[test]
    fn stationary_profile_step_residual_shrinks() {
        // The boundary row of the closure is inconsistent at O(1/h), so a
        // single step only shows the residual shrinking, not a clean order.
        let mut ratios = Vec::new();
        let mut g = SpatialGrid::new(TWO_PI, 63).unwrap();
        for _ in 0..3 {
            let y = Profile::OneMinusCos.sample(g);
            let dt = 0.01;
            let cfg = StepperConfig { nonlinear: false, ..Default::default() };
            let next = step(&y, dt, &FeedbackLaw::Zero, &cfg).unwrap();
            ratios.push(next.sub(&y).l2_norm() / dt);
            g = g.refined();
        }
        for w in ratios.windows(2) {
            let order = (w[0] / w[1]).log2();
            assert!(order > 1.0, "{ratios:?}");
        }
    }

    #[test]
    fn auto_dt_divides_final_time() {
        let cfg = config(63, FeedbackLaw::linear(1.0).unwrap(), 6.0);
        let y0 = cfg.initial_state().unwrap();
        let (dt, steps) = cfg.resolve_dt(&y0);
        assert!((dt * steps as f64 - 6.0).abs() < 1e-12);
        assert!(dt <= 0.5 * cfg.grid.spacing() / 2.0 + 1e-15);
    }

    #[test]
    fn config_validation() {
        let mut cfg = config(16, FeedbackLaw::Zero, 1.0);
        cfg.stepper.dt = TimeStep::Fixed(2.0);
        assert!(simulate(&cfg).is_err());
        cfg.stepper.dt = TimeStep::Auto;
        cfg.stride = 0;
        assert!(simulate(&cfg).is_err());
        cfg.stride = 1;
        cfg.final_time = -1.0;
        assert!(simulate(&cfg).is_err());
    }

    #[test]
    fn strided_snapshots_keep_final_state() {
        let mut cfg = config(31, FeedbackLaw::linear(1.0).unwrap(), 0.5);
        cfg.stride = 7;
        let out = simulate(&cfg).unwrap();
        assert_eq!(*out.trajectory.times().last().unwrap(), 0.5);
        assert_eq!(out.trace.len(), out.steps + 1);
        assert_eq!(out.trajectory.len(), out.steps / 7 + 1 + usize::from(!out.steps.is_multiple_of(7)));
    }

    #[test]
    fn energy_is_monotone_for_all_laws() {
        for law in [
            FeedbackLaw::Zero,
            FeedbackLaw::linear(1.0).unwrap(),
            FeedbackLaw::saturated(1.0, 0.5).unwrap(),
        ] {
            let out = simulate(&config(63, law, 2.0)).unwrap();
            assert!(out.trace.is_energy_monotone(1e-10), "{law:?}: {}", out.trace.max_energy_increase());
            assert_eq!(out.retries, 0);
        }
    }

    #[test]
    fn saturated_and_linear_controls_agree_in_linear_region() {
        let g = SpatialGrid::new(TWO_PI, 64).unwrap();
        let y = Profile::OneMinusCos.sample(g).scaled(0.1);
        let lin = FeedbackLaw::linear(2.0).unwrap().control_raw(g.spacing(), y.values());
        let sat = FeedbackLaw::saturated(2.0, 1.0).unwrap().control_raw(g.spacing(), y.values());
        assert_eq!(lin, sat);
        let a = step(&y, 0.01, &FeedbackLaw::linear(2.0).unwrap(), &StepperConfig::default()).unwrap();
        let b = step(&y, 0.01, &FeedbackLaw::saturated(2.0, 1.0).unwrap(), &StepperConfig::default()).unwrap();
        assert_eq!(a, b);
    }
}
