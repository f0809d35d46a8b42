//! Simulation and certificate checks for the Korteweg-de Vries equation
//!
//! ```text
//! y_t + y_x + y_xxx + y y_x + f = 0   on (0, L)
//! y(t, 0) = y(t, L) = y_x(t, L) = 0
//! ```
//!
//! under distributed feedback `f = a y` or `f = sat(a y)`, where `sat`
//! saturates the control in `L^2(0, L)`-norm.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod banded;
pub mod convergence;
pub mod critical;
pub mod diagnostics;
pub mod error;
pub mod feedback;
pub mod grid;
pub mod operators;
pub mod picard;
pub mod properties;
pub mod saturation;
pub mod stepper;

pub use banded::{solve_banded, BandedLu, BandedMatrix};
pub use convergence::{convergence_study, ConvergenceLevel, ConvergenceTable};
pub use critical::{critical_lengths, CriticalLengthQuery, CriticalMatch};
pub use diagnostics::{bt_norm, dissipation_residual, EnergyTrace, TraceSample};
pub use error::{KdvError, Result};
pub use feedback::{control_field, decay_envelope, envelope_check, DecayEnvelope, EnvelopeReport, FeedbackLaw};
pub use grid::{h1_seminorm, l2_norm, named_profile, Profile, SpatialGrid, StateField, TWO_PI};
pub use operators::{build_linear_operator, nonlinear_term, DiscreteLinearOperator, NonlinearForm};
pub use picard::{picard_mild_solution, PicardConfig, PicardSolution};
pub use saturation::{lipschitz_ratio, sat, sector_defect, sector_gain, SaturationParams, SectorGain};
pub use stepper::{
    simulate, step, InitialCondition, InitialShape, Scheme, SimConfig, SimulationOutput, Stepper,
    StepperConfig, TimeStep, Trajectory,
};
