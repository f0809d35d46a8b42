//! Finite-difference operators for `y_x + y_xxx` and `y y_x`.
//!
//! The linear operator `A_h` discretizes `w -> -w' - w'''` on the interior
//! nodes with
//!
//! * `D1`: second-order central difference, using `y_0 = y_{n+1} = 0`;
//! * `D3`: the central five-point stencil
//!   `(-y_{i-2} + 2 y_{i-1} - 2 y_{i+1} + y_{i+2}) / (2 h^3)`, with the ghost
//!   node beyond `x = 0` closed by odd reflection (`y_{-1} = -y_1`) and the
//!   ghost beyond `x = L` eliminated through `y_x(L) = 0` (`y_{n+2} = y_n`).
//!
//! With these closures `D1` is skew and the symmetric part of `D3` is
//! `diag(1, 0, ..., 0, 1) / (2 h^3)`, so
//! `<A_h y, y>_h = -((y_1 / h)^2 + (y_n / h)^2) / 2 <= 0` exactly. The left
//! term is the discrete counterpart of the `-|y_x(t, 0)|^2 / 2` boundary
//! damping; the right one is `O(h^2)` because `y_x(L) = 0`.
//!
//! The left closure has an `O(1/h)` local truncation error in the first row
//! (it is exact only when `y''(0) = 0`); the dispersive operator absorbs
//! three orders of boundary error and the global error stays `O(h^2)`.

use crate::banded::BandedMatrix;
use crate::error::{KdvError, Result};
use crate::grid::{inner, SpatialGrid, StateField};

/// Discretization of `A = -d/dx - d^3/dx^3` with
/// `w(0) = w(L) = w'(L) = 0`.
#[derive(Debug, Clone)]
pub struct DiscreteLinearOperator {
    grid: SpatialGrid,
    matrix: BandedMatrix,
}

impl DiscreteLinearOperator {
    pub fn grid(&self) -> &SpatialGrid {
        &self.grid
    }

    pub fn matrix(&self) -> &BandedMatrix {
        &self.matrix
    }

    pub fn apply(&self, y: &StateField) -> StateField {
        assert_eq!(*y.grid(), self.grid);
        StateField::from_raw(self.grid, self.matrix.matvec(y.values()))
    }

    /// `<A_h y, y>_h`.
    pub fn quadratic_form(&self, y: &StateField) -> f64 {
        let ay = self.matrix.matvec(y.values());
        inner(self.grid.spacing(), &ay, y.values())
    }

    /// Dense row-major copy, for small oracle computations.
    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        self.matrix.to_dense()
    }
}

pub fn build_linear_operator(grid: SpatialGrid) -> Result<DiscreteLinearOperator> {
    let n = grid.n_interior();
    if n < SpatialGrid::MIN_NODES {
        return Err(KdvError::Dimension(format!(
            "linear operator needs at least {} interior nodes",
            SpatialGrid::MIN_NODES
        )));
    }
    let h = grid.spacing();
    let c1 = 1.0 / (2.0 * h);
    let c3 = 1.0 / (2.0 * h * h * h);
    let mut m = BandedMatrix::zeros(n, 2, 2)?;
    for i in 0..n {
        // -D1
        if i >= 1 {
            m.add(i, i - 1, c1);
        }
        if i + 1 < n {
            m.add(i, i + 1, -c1);
        }
        // -D3, interior five-point stencil
        for (offset, coef) in [(-2isize, -1.0), (-1, 2.0), (1, -2.0), (2, 1.0)] {
            let j = i as isize + offset;
            if (0..n as isize).contains(&j) {
                m.add(i, j as usize, -coef * c3);
            }
        }
    }
    // y_{-1} = -y_1 contributes +y_1 / (2h^3) to row 0 of D3.
    m.add(0, 0, -c3);
    // y_{n+2} = y_n contributes +y_n / (2h^3) to row n-1 of D3.
    m.add(n - 1, n - 1, -c3);
    Ok(DiscreteLinearOperator { grid, matrix: m })
}

/// `-<A_h y, y>_h`, the boundary dissipation of the discrete operator.
pub fn boundary_flux(h: f64, y: &[f64]) -> f64 {
    let (l, r) = (y[0] / h, y[y.len() - 1] / h);
    0.5 * (l * l + r * r)
}

/// Discretization of the transport term `y y_x`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NonlinearForm {
    /// `(y D1 y + D1 (y^2)) / 3`; satisfies `<N(y), y>_h = 0` exactly.
    #[default]
    SkewSymmetric,
    /// `y D1 y`.
    Central,
}

impl std::str::FromStr for NonlinearForm {
    type Err = KdvError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "skew" | "skew-symmetric" => Ok(NonlinearForm::SkewSymmetric),
            "central" => Ok(NonlinearForm::Central),
            other => Err(KdvError::Config(format!(
                "unknown nonlinear form '{other}' (known: skew, central)"
            ))),
        }
    }
}

/// Tridiagonal matrix `B_w` with `B_y y = N(y)`.
///
/// For the skew-symmetric form `B_w` is skew for every `w`, so a
/// Crank-Nicolson step that freezes the advecting field stays
/// energy-neutral in the transport term.
pub fn transport_matrix(h: f64, w: &[f64], form: NonlinearForm) -> BandedMatrix {
    let n = w.len();
    let mut m = BandedMatrix::zeros(n, 1, 1).expect("tridiagonal fits");
    match form {
        NonlinearForm::SkewSymmetric => {
            let c = 1.0 / (6.0 * h);
            for i in 0..n.saturating_sub(1) {
                let v = c * (w[i] + w[i + 1]);
                m.set(i, i + 1, v);
                m.set(i + 1, i, -v);
            }
        }
        NonlinearForm::Central => {
            let c = 1.0 / (2.0 * h);
            for i in 0..n {
                if i + 1 < n {
                    m.set(i, i + 1, c * w[i]);
                }
                if i >= 1 {
                    m.set(i, i - 1, -c * w[i]);
                }
            }
        }
    }
    m
}

pub(crate) fn nonlinear_raw(h: f64, y: &[f64], form: NonlinearForm) -> Vec<f64> {
    let n = y.len();
    let at = |i: isize| -> f64 {
        if i < 0 || i as usize >= n {
            0.0
        } else {
            y[i as usize]
        }
    };
    (0..n as isize)
        .map(|i| {
            let (l, c, r) = (at(i - 1), at(i), at(i + 1));
            match form {
                NonlinearForm::SkewSymmetric => ((c + r) * r - (c + l) * l) / (6.0 * h),
                NonlinearForm::Central => c * (r - l) / (2.0 * h),
            }
        })
        .collect()
}

/// Discrete `y y_x`.
pub fn nonlinear_term(y: &StateField, form: NonlinearForm) -> StateField {
    StateField::from_raw(*y.grid(), nonlinear_raw(y.grid().spacing(), y.values(), form))
}
