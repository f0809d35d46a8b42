//! Uniform mesh on `[0, L]` and nodal state fields.
//!
//! Only interior nodes are stored. The Dirichlet values `y(0) = y(L) = 0`
//! are implicit, so no arithmetic on a [`StateField`] can break them. All
//! discrete norms use the composite rule `h * sum(interior)`, which is what
//! the trapezoid rule collapses to when both end values vanish.

use std::f64::consts::PI;
use std::str::FromStr;

use crate::error::{KdvError, Result};

/// Uniform grid `x_i = i h`, `i = 1..=n`, with `h = L / (n + 1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpatialGrid {
    length: f64,
    n_interior: usize,
    spacing: f64,
}

impl SpatialGrid {
    pub const MIN_NODES: usize = 4;

    pub fn new(length: f64, n_interior: usize) -> Result<Self> {
        if !(length.is_finite() && length > 0.0) {
            return Err(KdvError::config(format!(
                "domain length must be positive and finite, got {length}"
            )));
        }
        if n_interior < Self::MIN_NODES {
            return Err(KdvError::config(format!(
                "need at least {} interior nodes, got {n_interior}",
                Self::MIN_NODES
            )));
        }
        Ok(SpatialGrid {
            length,
            n_interior,
            spacing: length / (n_interior as f64 + 1.0),
        })
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn n_interior(&self) -> usize {
        self.n_interior
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    /// Position of interior node `i` (zero based, so `node(0) = h`).
    #[inline]
    pub fn node(&self, i: usize) -> f64 {
        (i as f64 + 1.0) * self.spacing
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n_interior).map(move |i| self.node(i))
    }

    /// Grid with half the spacing whose nodes contain all nodes of `self`.
    pub fn refined(&self) -> Self {
        let n = 2 * (self.n_interior + 1) - 1;
        SpatialGrid::new(self.length, n).expect("refinement of a valid grid is valid")
    }
}

/// Nodal values of `y(t, .)` at the interior nodes of a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct StateField {
    grid: SpatialGrid,
    values: Vec<f64>,
}

impl StateField {
    pub fn new(grid: SpatialGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.n_interior() {
            return Err(KdvError::Dimension(format!(
                "field has {} values, grid has {} interior nodes",
                values.len(),
                grid.n_interior()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(KdvError::config(format!(
                "non-finite value {} at node {i}",
                values[i]
            )));
        }
        Ok(StateField { grid, values })
    }

    /// Wraps values that the caller already knows are valid.
    pub(crate) fn from_raw(grid: SpatialGrid, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.n_interior());
        StateField { grid, values }
    }

    pub fn zeros(grid: SpatialGrid) -> Self {
        StateField::from_raw(grid, vec![0.0; grid.n_interior()])
    }

    /// Samples `f` at the interior nodes.
    pub fn from_fn(grid: SpatialGrid, f: impl Fn(f64) -> f64) -> Result<Self> {
        StateField::new(grid, grid.nodes().map(f).collect())
    }

    pub fn grid(&self) -> &SpatialGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn scaled(&self, c: f64) -> StateField {
        StateField::from_raw(self.grid, self.values.iter().map(|v| c * v).collect())
    }

    pub fn sub(&self, other: &StateField) -> StateField {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn add(&self, other: &StateField) -> StateField {
        self.zip_with(other, |a, b| a + b)
    }

    fn zip_with(&self, other: &StateField, f: impl Fn(f64, f64) -> f64) -> StateField {
        assert_eq!(self.grid, other.grid, "fields live on different grids");
        StateField::from_raw(
            self.grid,
            self.values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        )
    }

    /// Discrete `L^2(0, L)` inner product.
    pub fn inner(&self, other: &StateField) -> f64 {
        assert_eq!(self.grid, other.grid, "fields live on different grids");
        inner(self.grid.spacing(), &self.values, &other.values)
    }

    pub fn l2_norm(&self) -> f64 {
        l2_norm(self)
    }

    pub fn energy(&self) -> f64 {
        energy(self.grid.spacing(), &self.values)
    }
}

#[inline]
pub(crate) fn inner(h: f64, a: &[f64], b: &[f64]) -> f64 {
    h * a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>()
}

#[inline]
pub(crate) fn energy(h: f64, y: &[f64]) -> f64 {
    h * y.iter().map(|v| v * v).sum::<f64>()
}

/// `sqrt(h * sum y_i^2)`.
pub fn l2_norm(y: &StateField) -> f64 {
    y.energy().sqrt()
}

/// Discrete `L^2` norm of `y_x`.
///
/// Central differences at the interior nodes, one-sided differences at
/// `x = 0` and `x = L` using the zero boundary values, combined with the
/// trapezoid rule over all `n + 2` nodes.
pub fn h1_seminorm(y: &StateField) -> f64 {
    h1_seminorm_raw(y.grid.spacing(), &y.values)
}

pub(crate) fn h1_seminorm_raw(h: f64, y: &[f64]) -> f64 {
    let n = y.len();
    let at = |i: isize| -> f64 {
        if i < 0 || i as usize >= n {
            0.0
        } else {
            y[i as usize]
        }
    };
    let left = y[0] / h;
    let right = -y[n - 1] / h;
    let interior: f64 = (0..n as isize)
        .map(|i| {
            let g = (at(i + 1) - at(i - 1)) / (2.0 * h);
            g * g
        })
        .sum();
    (h * (interior + 0.5 * (left * left + right * right))).sqrt()
}

/// Named initial profiles.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Profile {
    Zero,
    /// `1 - cos(x)`.
    OneMinusCos,
    /// `sin(x)`.
    Sine,
    /// Bump `exp(-((x - L/2) / (L/10))^2)` centred in the domain.
    Gaussian,
}

impl Profile {
    pub const NAMES: [&'static str; 4] = ["zero", "one-minus-cos", "sine", "gaussian"];

    pub fn name(&self) -> &'static str {
        match self {
            Profile::Zero => "zero",
            Profile::OneMinusCos => "one-minus-cos",
            Profile::Sine => "sine",
            Profile::Gaussian => "gaussian",
        }
    }

    pub fn sample(&self, grid: SpatialGrid) -> StateField {
        let l = grid.length();
        let f: Box<dyn Fn(f64) -> f64> = match self {
            Profile::Zero => Box::new(|_| 0.0),
            Profile::OneMinusCos => Box::new(|x: f64| 1.0 - x.cos()),
            Profile::Sine => Box::new(|x: f64| x.sin()),
            Profile::Gaussian => Box::new(move |x: f64| {
                let z = (x - 0.5 * l) / (0.1 * l);
                (-z * z).exp()
            }),
        };
        StateField::from_raw(grid, grid.nodes().map(f).collect())
    }
}

impl FromStr for Profile {
    type Err = KdvError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "zero" => Ok(Profile::Zero),
            "one-minus-cos" => Ok(Profile::OneMinusCos),
            "sine" => Ok(Profile::Sine),
            "gaussian" => Ok(Profile::Gaussian),
            other => Err(KdvError::config(format!(
                "unknown profile '{other}' (known: {})",
                Profile::NAMES.join(", ")
            ))),
        }
    }
}

pub fn named_profile(name: &str, grid: SpatialGrid) -> Result<StateField> {
    Ok(name.parse::<Profile>()?.sample(grid))
}

/// `2 pi`, the domain length of the reference scenarios.
pub const TWO_PI: f64 = 2.0 * PI;

#[cfg(test)]
mod tests {
    use super::*;

    fn two_pi_grid(n: usize) -> SpatialGrid {
        SpatialGrid::new(TWO_PI, n).unwrap()
    }

    #[test]
    fn grid_rejects_bad_input() {
        assert!(SpatialGrid::new(0.0, 10).is_err());
        assert!(SpatialGrid::new(-1.0, 10).is_err());
        assert!(SpatialGrid::new(f64::NAN, 10).is_err());
        assert!(SpatialGrid::new(1.0, 3).is_err());
    }

    #[test]
    fn nodes_are_strictly_inside() {
        let g = two_pi_grid(9);
        let xs: Vec<f64> = g.nodes().collect();
        assert!(xs.windows(2).all(|w| w[0] < w[1]));
        assert!(xs[0] > 0.0 && *xs.last().unwrap() < g.length());
        assert!(g.n_interior() as f64 * g.spacing() < g.length());
    }

    #[test]
    fn refined_grid_nests() {
        let g = two_pi_grid(31);
        let f = g.refined();
        assert_eq!(f.n_interior(), 63);
        for i in 0..g.n_interior() {
            assert!((g.node(i) - f.node(2 * i + 1)).abs() < 1e-14);
        }
    }

    #[test]
    fn field_validation() {
        let g = two_pi_grid(8);
        assert!(StateField::new(g, vec![0.0; 7]).is_err());
        let mut v = vec![0.0; 8];
        v[3] = f64::NAN;
        assert!(StateField::new(g, v).is_err());
    }

    #[test]
    fn zero_field_has_zero_norms() {
        let y = StateField::zeros(two_pi_grid(17));
        assert_eq!(l2_norm(&y), 0.0);
        assert_eq!(h1_seminorm(&y), 0.0);
    }

    #[test]
    fn one_minus_cos_norm() {
        // int_0^{2 pi} (1 - cos x)^2 dx = 3 pi
        let g = two_pi_grid(1023);
        let y = named_profile("one-minus-cos", g).unwrap();
        assert!((l2_norm(&y) - (3.0 * PI).sqrt()).abs() < 1e-10);
    }

    #[test]
    fn one_minus_cos_at_pi_is_two() {
        // n + 1 even puts a node on x = pi
        let g = two_pi_grid(255);
        let y = named_profile("one-minus-cos", g).unwrap();
        let mid = (g.n_interior() - 1) / 2;
        assert!((g.node(mid) - PI).abs() < 1e-14);
        assert!((y.values()[mid] - 2.0).abs() < 1e-15);
    }

    #[test]
    fn constant_field_norm() {
        // The implicit zero ends cost one cell: h * n = L - h.
        let g = two_pi_grid(4095);
        let y = StateField::from_fn(g, |_| 1.0).unwrap();
        assert!((l2_norm(&y) - TWO_PI.sqrt()).abs() < 1e-3);
    }

    #[test]
    fn sine_h1_seminorm() {
        let g = two_pi_grid(2047);
        let y = named_profile("sine", g).unwrap();
        assert!((h1_seminorm(&y) - PI.sqrt()).abs() < 1e-5);
    }

    #[test]
    fn h1_seminorm_converges() {
        let mut errs = Vec::new();
        let mut g = two_pi_grid(15);
        for _ in 0..5 {
            let y = named_profile("sine", g).unwrap();
            errs.push((h1_seminorm(&y) - PI.sqrt()).abs());
            g = g.refined();
        }
        for w in errs.windows(2) {
            assert!((w[0] / w[1]).log2() >= 1.0, "{errs:?}");
        }
    }

    #[test]
    fn l2_norm_converges_at_second_order() {
        // y = x (L - x): int y^2 = L^5 / 30
        let exact = (TWO_PI.powi(5) / 30.0).sqrt();
        let mut errs = Vec::new();
        let mut g = two_pi_grid(15);
        for _ in 0..5 {
            let y = StateField::from_fn(g, |x| x * (TWO_PI - x)).unwrap();
            errs.push((l2_norm(&y) - exact).abs());
            g = g.refined();
        }
        for w in errs.windows(2) {
            assert!((w[0] / w[1]).log2() > 1.8, "{errs:?}");
        }
    }

    #[test]
    fn unknown_profile() {
        let g = two_pi_grid(8);
        assert!(matches!(
            named_profile("square", g),
            Err(KdvError::Config(_))
        ));
        assert!(named_profile("zero", g).unwrap().is_zero());
    }
}
