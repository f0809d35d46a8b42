//! Grid-refinement study on nested grids.
//!
//! Level `k` has `(n0 + 1) 2^k - 1` interior nodes and step `dt0 / 2^k`, so
//! every coarse node is also a node of each finer grid. The observed order
//! at level `k` is `log2(d_k / d_{k+1})`, where `d_k` is the discrete
//! `L^2` distance between the final states of levels `k` and `k + 1` on the
//! coarser grid.

use crate::error::{KdvError, Result};
use crate::grid::{energy, StateField};
use crate::stepper::{simulate, SimConfig, TimeStep};

/// Differences below this (relative to the solution size) count as zero.
pub const EXACT_THRESHOLD: f64 = 1e-13;

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceLevel {
    pub n_interior: usize,
    pub dt: f64,
    pub steps: usize,
    pub final_norm: f64,
    /// Distance to the next finer level, on this level's grid.
    pub diff_to_next: Option<f64>,
    pub order: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceTable {
    pub levels: Vec<ConvergenceLevel>,
}

impl ConvergenceTable {
    pub fn diffs(&self) -> Vec<f64> {
        self.levels.iter().filter_map(|l| l.diff_to_next).collect()
    }

    pub fn orders(&self) -> Vec<f64> {
        self.levels.iter().filter_map(|l| l.order).collect()
    }

    /// Successive differences decrease strictly.
    pub fn is_monotone(&self) -> bool {
        self.diffs().windows(2).all(|w| w[1] < w[0])
    }

    /// All levels agree to round-off.
    pub fn is_exact(&self) -> bool {
        let scale = self.levels.iter().map(|l| l.final_norm).fold(1.0, f64::max);
        self.diffs().iter().all(|&d| d <= EXACT_THRESHOLD * scale)
    }
}

/// Values of `fine` at the nodes of a grid with `n_coarse` interior nodes.
fn restrict(fine: &[f64], n_coarse: usize) -> Vec<f64> {
    let ratio = (fine.len() + 1) / (n_coarse + 1);
    (1..=n_coarse).map(|i| fine[i * ratio - 1]).collect()
}

/// Runs `levels` refinements of `base` concurrently.
///
/// An automatic step is resolved from the base grid, then halved per level.
pub fn convergence_study(base: &SimConfig, levels: usize) -> Result<ConvergenceTable> {
    if levels < 3 {
        return Err(KdvError::Config(format!("need at least 3 levels, got {levels}")));
    }
    if levels > 8 {
        return Err(KdvError::Config(format!("at most 8 levels are supported, got {levels}")));
    }
    base.validate()?;
    let y0 = base.initial_state()?;
    let (dt0, _) = base.resolve_dt(&y0);

    let configs: Vec<SimConfig> = (0..levels)
        .map(|k| {
            let mut cfg = base.clone();
            for _ in 0..k {
                cfg.grid = cfg.grid.refined();
            }
            cfg.stepper.dt = TimeStep::Fixed(dt0 / (1u64 << k) as f64);
            cfg.stride = usize::MAX;
            cfg
        })
        .collect();

    let runs: Vec<Result<(StateField, f64, usize)>> = std::thread::scope(|scope| {
        let handles: Vec<_> = configs
            .iter()
            .map(|cfg| {
                scope.spawn(move || {
                    simulate(cfg).map(|out| (out.trajectory.final_state().clone(), out.dt, out.steps))
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("level thread panicked")).collect()
    });
    let runs = runs.into_iter().collect::<Result<Vec<_>>>()?;

    let mut table = ConvergenceTable {
        levels: runs
            .iter()
            .map(|(y, dt, steps)| ConvergenceLevel {
                n_interior: y.grid().n_interior(),
                dt: *dt,
                steps: *steps,
                final_norm: y.l2_norm(),
                diff_to_next: None,
                order: None,
            })
            .collect(),
    };
    for k in 0..levels - 1 {
        let coarse = &runs[k].0;
        let g = coarse.grid();
        let fine = restrict(runs[k + 1].0.values(), g.n_interior());
        let d: Vec<f64> = coarse.values().iter().zip(&fine).map(|(a, b)| a - b).collect();
        table.levels[k].diff_to_next = Some(energy(g.spacing(), &d).sqrt());
    }
    for k in 0..levels - 2 {
        let (a, b) = (table.levels[k].diff_to_next.unwrap(), table.levels[k + 1].diff_to_next.unwrap());
        table.levels[k].order = Some((a / b).log2());
    }
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::feedback::FeedbackLaw;
    use crate::grid::{Profile, SpatialGrid, TWO_PI};
    use crate::stepper::InitialCondition;

    #[test]
    fn restriction_picks_shared_nodes() {
        let fine: Vec<f64> = (1..=15).map(f64::from).collect();
        assert_eq!(restrict(&fine, 3), vec![4.0, 8.0, 12.0]);
        assert_eq!(restrict(&fine, 7), vec![2.0, 4.0, 6.0, 8.0, 10.0, 12.0, 14.0]);
    }

    #[test]
    fn too_few_levels() {
        let g = SpatialGrid::new(TWO_PI, 15).unwrap();
        let cfg = SimConfig::new(g, InitialCondition::named(Profile::Sine), FeedbackLaw::Zero, 0.1);
        assert!(convergence_study(&cfg, 2).is_err());
    }

    #[test]
    fn zero_solution_is_exact() {
        let g = SpatialGrid::new(TWO_PI, 15).unwrap();
        let cfg = SimConfig::new(g, InitialCondition::named(Profile::Zero), FeedbackLaw::linear(1.0).unwrap(), 0.2);
        let table = convergence_study(&cfg, 3).unwrap();
        assert!(table.is_exact());
        assert_eq!(table.levels[2].n_interior, 63);
    }
}
