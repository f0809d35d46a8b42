//! Independent solver for the closed loop: Picard iteration on the
//! variation-of-constants form
//!
//! ```text
//! y(t) = W(t) y0 + int_0^t W(t - s) g(y(s)) ds,   g(z) = -N(z) - f(z)
//! ```
//!
//! with `W(t) = exp(t A_h)` formed densely and the time integral taken with
//! the trapezoid rule on a uniform grid. The iteration starts from zero and
//! stops when the `B(T)`-norm of the increment drops below the tolerance.
//! Dense matrix exponentials limit this to small grids.

use nalgebra::{DMatrix, DVector};

use crate::diagnostics::bt_norm_raw;
use crate::error::{KdvError, Result};
use crate::feedback::FeedbackLaw;
use crate::grid::StateField;
use crate::operators::{build_linear_operator, nonlinear_raw, NonlinearForm};
use crate::stepper::Trajectory;

/// Largest grid the dense oracle accepts.
pub const MAX_ORACLE_NODES: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PicardConfig {
    pub dt: f64,
    pub tol: f64,
    pub max_iterations: usize,
    /// `false` drops the `y y_x` term.
    pub nonlinear: bool,
    pub nonlinear_form: NonlinearForm,
}

impl Default for PicardConfig {
    fn default() -> Self {
        PicardConfig {
            dt: 0.01,
            tol: 1e-12,
            max_iterations: 200,
            nonlinear: true,
            nonlinear_form: NonlinearForm::SkewSymmetric,
        }
    }
}

#[derive(Debug, Clone)]
pub struct PicardSolution {
    pub trajectory: Trajectory,
    /// `B(T)`-norm of `z^{m} - z^{m-1}` for each iteration.
    pub increments: Vec<f64>,
    /// Ratios of successive increments.
    pub contraction_factors: Vec<f64>,
}

impl PicardSolution {
    pub fn iterations(&self) -> usize {
        self.increments.len()
    }
}

impl PicardConfig {
    fn validate(&self, final_time: f64) -> Result<usize> {
        if !(final_time > 0.0 && final_time.is_finite()) {
            return Err(KdvError::Config(format!("final time must be positive, got {final_time}")));
        }
        if !(self.dt > 0.0 && self.dt <= final_time) {
            return Err(KdvError::Config(format!("dt must lie in (0, T], got {}", self.dt)));
        }
        if !(self.tol > 0.0) || self.max_iterations == 0 {
            return Err(KdvError::Config("tolerance and iteration cap must be positive".into()));
        }
        Ok(((final_time / self.dt) - 1e-9).ceil().max(1.0) as usize)
    }
}

/// Mild solution on `[0, T]` sampled at `T / K` with `K = ceil(T / dt)`.
pub fn picard_mild_solution(
    y0: &StateField,
    law: &FeedbackLaw,
    final_time: f64,
    config: &PicardConfig,
) -> Result<PicardSolution> {
    let steps = config.validate(final_time)?;
    let grid = *y0.grid();
    let n = grid.n_interior();
    if n > MAX_ORACLE_NODES {
        return Err(KdvError::Config(format!(
            "the dense oracle supports at most {MAX_ORACLE_NODES} nodes, got {n}"
        )));
    }
    let h = grid.spacing();
    let dt = final_time / steps as f64;
    let a = build_linear_operator(grid)?;
    let dense = DMatrix::from_fn(n, n, |i, j| a.matrix().get(i, j) * dt);
    let w = dense.exp();

    let g = |z: &[f64]| -> DVector<f64> {
        let mut out = DVector::from_vec(law.control_raw(h, z));
        if config.nonlinear {
            out += DVector::from_vec(nonlinear_raw(h, z, config.nonlinear_form));
        }
        -out
    };
    let times: Vec<f64> = (0..=steps).map(|k| final_time * k as f64 / steps as f64).collect();
    let y0v = DVector::from_column_slice(y0.values());

    let mut z: Vec<DVector<f64>> = vec![DVector::zeros(n); steps + 1];
    let mut increments = Vec::new();
    let mut contraction_factors = Vec::new();
    for _ in 0..config.max_iterations {
        let forcing: Vec<DVector<f64>> = z.iter().map(|zk| g(zk.as_slice())).collect();
        let mut next = Vec::with_capacity(steps + 1);
        next.push(y0v.clone());
        for k in 1..=steps {
            let carried = &next[k - 1] + &forcing[k - 1] * (0.5 * dt);
            next.push(&w * carried + &forcing[k] * (0.5 * dt));
        }
        let diffs: Vec<Vec<f64>> = next.iter().zip(&z).map(|(a, b)| (a - b).as_slice().to_vec()).collect();
        let diff_refs: Vec<&[f64]> = diffs.iter().map(|d| d.as_slice()).collect();
        let inc = bt_norm_raw(h, &times, &diff_refs);
        if !inc.is_finite() {
            return Err(KdvError::NonContraction { iterations: increments.len() + 1, last_increment: inc });
        }
        if let Some(&prev) = increments.last() {
            contraction_factors.push(if prev > 0.0 { inc / prev } else { 0.0 });
        }
        increments.push(inc);
        z = next;
        if inc < config.tol {
            let mut states = z.into_iter().map(|v| StateField::from_raw(grid, v.as_slice().to_vec()));
            let mut trajectory = Trajectory::new(states.next().expect("initial state"));
            for (t, y) in times.iter().skip(1).zip(states) {
                trajectory.push(*t, y)?;
            }
            return Ok(PicardSolution { trajectory, increments, contraction_factors });
        }
    }
    Err(KdvError::NonContraction {
        iterations: increments.len(),
        last_increment: *increments.last().expect("at least one iteration"),
    })
}
