//! Band matrices of bandwidth at most two, and their LU factorization.

use crate::error::{KdvError, Result};

/// Largest lower/upper bandwidth supported.
pub const MAX_BANDWIDTH: usize = 2;

/// Pivots smaller than this fraction of their row's largest entry trigger
/// the partial-pivoting path.
const PIVOT_RATIO: f64 = 1e-13;

/// Square `n x n` matrix with `lower` sub- and `upper` super-diagonals.
///
/// Row `i` stores columns `i - lower ..= i + upper` contiguously.
#[derive(Debug, Clone, PartialEq)]
pub struct BandedMatrix {
    n: usize,
    lower: usize,
    upper: usize,
    data: Vec<f64>,
}

impl BandedMatrix {
    pub fn zeros(n: usize, lower: usize, upper: usize) -> Result<Self> {
        if n == 0 {
            return Err(KdvError::Dimension("band matrix must be non-empty".into()));
        }
        if lower > MAX_BANDWIDTH || upper > MAX_BANDWIDTH {
            return Err(KdvError::Dimension(format!(
                "bandwidths ({lower}, {upper}) exceed {MAX_BANDWIDTH}"
            )));
        }
        Ok(BandedMatrix {
            n,
            lower,
            upper,
            data: vec![0.0; n * (lower + upper + 1)],
        })
    }

    pub fn identity(n: usize) -> Result<Self> {
        let mut m = BandedMatrix::zeros(n, 0, 0)?;
        m.data.iter_mut().for_each(|v| *v = 1.0);
        Ok(m)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn lower(&self) -> usize {
        self.lower
    }

    pub fn upper(&self) -> usize {
        self.upper
    }

    #[inline]
    fn width(&self) -> usize {
        self.lower + self.upper + 1
    }

    #[inline]
    fn in_band(&self, i: usize, j: usize) -> bool {
        i < self.n && j < self.n && j + self.lower >= i && j <= i + self.upper
    }

    #[inline]
    fn slot(&self, i: usize, j: usize) -> usize {
        i * self.width() + (j + self.lower - i)
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        if self.in_band(i, j) {
            self.data[self.slot(i, j)]
        } else {
            0.0
        }
    }

    /// Adds `v` to entry `(i, j)`; panics outside the band.
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        assert!(self.in_band(i, j), "({i}, {j}) outside band");
        let k = self.slot(i, j);
        self.data[k] += v;
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        assert!(self.in_band(i, j), "({i}, {j}) outside band");
        let k = self.slot(i, j);
        self.data[k] = v;
    }

    /// Columns of row `i` that lie inside the band and the matrix.
    #[inline]
    fn row_range(&self, i: usize) -> std::ops::Range<usize> {
        i.saturating_sub(self.lower)..(i + self.upper + 1).min(self.n)
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        self.matvec_into(x, &mut out);
        out
    }

    pub fn matvec_into(&self, x: &[f64], out: &mut [f64]) {
        assert_eq!(x.len(), self.n);
        assert_eq!(out.len(), self.n);
        for (i, o) in out.iter_mut().enumerate() {
            *o = self
                .row_range(i)
                .map(|j| self.data[self.slot(i, j)] * x[j])
                .sum();
        }
    }

    /// `alpha * I + beta * self`.
    pub fn shifted(&self, alpha: f64, beta: f64) -> BandedMatrix {
        let mut m = self.clone();
        m.data.iter_mut().for_each(|v| *v *= beta);
        for i in 0..self.n {
            m.add(i, i, alpha);
        }
        m
    }

    /// `self + c * other`, widening the band if needed.
    pub fn add_scaled(&self, c: f64, other: &BandedMatrix) -> BandedMatrix {
        assert_eq!(self.n, other.n);
        let lower = self.lower.max(other.lower);
        let upper = self.upper.max(other.upper);
        let mut m = BandedMatrix::zeros(self.n, lower, upper).expect("bands already valid");
        for i in 0..self.n {
            for j in m.row_range(i) {
                let v = self.get(i, j) + c * other.get(i, j);
                m.set(i, j, v);
            }
        }
        m
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        (0..self.n)
            .map(|i| (0..self.n).map(|j| self.get(i, j)).collect())
            .collect()
    }

    fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn factorize(&self) -> Result<BandedLu> {
        match BandedLu::without_pivoting(self) {
            Some(lu) => Ok(lu),
            None => BandedLu::with_partial_pivoting(self),
        }
    }
}

/// LU factors of a [`BandedMatrix`], reusable across right-hand sides.
///
/// Row slot `i` stores columns `i - lower ..= i + lower + upper`; the extra
/// `lower` super-diagonals hold the fill-in produced by row interchanges.
/// Multipliers are kept in LAPACK `gbtrf` order, so interchanges are
/// replayed on the right-hand side during the forward sweep.
#[derive(Debug, Clone)]
pub struct BandedLu {
    n: usize,
    lower: usize,
    upper: usize,
    data: Vec<f64>,
    pivots: Option<Vec<usize>>,
}

impl BandedLu {
    fn empty(m: &BandedMatrix) -> Self {
        let lower = m.lower;
        let upper = m.lower + m.upper;
        let mut lu = BandedLu {
            n: m.n,
            lower,
            upper,
            data: vec![0.0; m.n * (lower + upper + 1)],
            pivots: None,
        };
        for i in 0..m.n {
            for j in m.row_range(i) {
                let k = lu.slot(i, j);
                lu.data[k] = m.get(i, j);
            }
        }
        lu
    }

    #[inline]
    fn slot(&self, i: usize, j: usize) -> usize {
        i * (self.lower + self.upper + 1) + (j + self.lower - i)
    }

    #[inline]
    fn at(&self, i: usize, j: usize) -> f64 {
        self.data[self.slot(i, j)]
    }

    fn without_pivoting(m: &BandedMatrix) -> Option<Self> {
        let mut lu = BandedLu::empty(m);
        let n = m.n;
        let row_max: Vec<f64> = (0..n)
            .map(|i| m.row_range(i).fold(0.0f64, |acc, j| acc.max(m.get(i, j).abs())))
            .collect();
        for k in 0..n {
            let pivot = lu.at(k, k);
            if !(pivot.abs() > PIVOT_RATIO * row_max[k]) {
                return None;
            }
            let last_col = (k + m.upper).min(n - 1);
            for i in k + 1..=(k + m.lower).min(n - 1) {
                let s = lu.slot(i, k);
                let l = lu.data[s] / pivot;
                lu.data[s] = l;
                if l != 0.0 {
                    for j in k + 1..=last_col {
                        let t = lu.slot(i, j);
                        lu.data[t] -= l * lu.at(k, j);
                    }
                }
            }
        }
        Some(lu)
    }

    fn with_partial_pivoting(m: &BandedMatrix) -> Result<Self> {
        let mut lu = BandedLu::empty(m);
        let n = m.n;
        let tiny = PIVOT_RATIO * m.max_abs();
        let mut pivots = vec![0; n];
        for k in 0..n {
            let last_row = (k + lu.lower).min(n - 1);
            let p = (k..=last_row)
                .max_by(|&a, &b| lu.at(a, k).abs().total_cmp(&lu.at(b, k).abs()))
                .unwrap_or(k);
            let pivot = lu.at(p, k);
            if !(pivot.abs() > tiny) {
                return Err(KdvError::Factorization { row: k, pivot });
            }
            pivots[k] = p;
            let last_col = (k + lu.upper).min(n - 1);
            if p != k {
                for j in k..=last_col {
                    let (a, b) = (lu.slot(k, j), lu.slot(p, j));
                    lu.data.swap(a, b);
                }
            }
            for i in k + 1..=last_row {
                let s = lu.slot(i, k);
                let l = lu.data[s] / pivot;
                lu.data[s] = l;
                if l != 0.0 {
                    for j in k + 1..=last_col {
                        let t = lu.slot(i, j);
                        lu.data[t] -= l * lu.at(k, j);
                    }
                }
            }
        }
        lu.pivots = Some(pivots);
        Ok(lu)
    }

    pub fn is_pivoted(&self) -> bool {
        self.pivots.is_some()
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let mut x = rhs.to_vec();
        self.solve_in_place(&mut x);
        x
    }

    pub fn solve_in_place(&self, b: &mut [f64]) {
        assert_eq!(b.len(), self.n);
        let n = self.n;
        for k in 0..n {
            if let Some(p) = &self.pivots {
                b.swap(k, p[k]);
            }
            let bk = b[k];
            if bk != 0.0 {
                for i in k + 1..=(k + self.lower).min(n - 1) {
                    b[i] -= self.at(i, k) * bk;
                }
            }
        }
        for k in (0..n).rev() {
            let mut s = b[k];
            for j in k + 1..=(k + self.upper).min(n - 1) {
                s -= self.at(k, j) * b[j];
            }
            b[k] = s / self.at(k, k);
        }
    }
}

/// Factorizes `m` and solves `m x = rhs`.
pub fn solve_banded(m: &BandedMatrix, rhs: &[f64]) -> Result<Vec<f64>> {
    if rhs.len() != m.dim() {
        return Err(KdvError::Dimension(format!(
            "rhs has length {}, matrix is {}x{}",
            rhs.len(),
            m.dim(),
            m.dim()
        )));
    }
    Ok(m.factorize()?.solve(rhs))
}
