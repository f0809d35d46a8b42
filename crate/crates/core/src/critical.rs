//! Critical domain lengths `L = 2 pi sqrt((k^2 + k l + l^2) / 3)`, for which
//! the linearized equation has solutions whose energy does not decay.

use std::f64::consts::PI;

use crate::error::{KdvError, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CriticalLengthQuery {
    pub length: f64,
    pub search_bound: u32,
    pub tolerance: f64,
}

impl CriticalLengthQuery {
    pub fn new(length: f64, search_bound: u32, tolerance: f64) -> Result<Self> {
        if !(length > 0.0 && length.is_finite()) {
            return Err(KdvError::Config(format!("length must be positive, got {length}")));
        }
        if search_bound < 1 {
            return Err(KdvError::Config("search bound must be at least 1".into()));
        }
        if !(tolerance > 0.0) {
            return Err(KdvError::Config(format!("tolerance must be positive, got {tolerance}")));
        }
        Ok(CriticalLengthQuery { length, search_bound, tolerance })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CriticalMatch {
    pub k: u32,
    pub l: u32,
    pub length: f64,
}

pub fn critical_length(k: u32, l: u32) -> f64 {
    let (k, l) = (k as f64, l as f64);
    2.0 * PI * ((k * k + k * l + l * l) / 3.0).sqrt()
}

/// All ordered pairs `(k, l)` in `[1, bound]^2` whose critical length is
/// within `tolerance` of the query. Empty means not critical within the
/// bound and tolerance.
pub fn critical_lengths(q: &CriticalLengthQuery) -> Vec<CriticalMatch> {
    let b = q.search_bound;
    (1..=b)
        .flat_map(|k| (1..=b).map(move |l| (k, l)))
        .filter_map(|(k, l)| {
            let length = critical_length(k, l);
            ((length - q.length).abs() <= q.tolerance).then_some(CriticalMatch { k, l, length })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn has(m: &[CriticalMatch], k: u32, l: u32) -> bool {
        m.iter().any(|c| c.k == k && c.l == l)
    }

    #[test]
    fn two_pi_is_critical() {
        let q = CriticalLengthQuery::new(2.0 * PI, 5, 1e-9).unwrap();
        let m = critical_lengths(&q);
        assert!(has(&m, 1, 1));
        assert_eq!(m.len(), 1);
    }

    #[test]
    fn k1_l2() {
        let q = CriticalLengthQuery::new(2.0 * PI * (7.0f64 / 3.0).sqrt(), 5, 1e-9).unwrap();
        let m = critical_lengths(&q);
        assert!(has(&m, 1, 2) && has(&m, 2, 1));
        assert!((m[0].length - 9.597724091861606).abs() < 1e-12);
    }

    #[test]
    fn unit_length_is_not_critical() {
        let q = CriticalLengthQuery::new(1.0, 50, 1e-9).unwrap();
        assert!(critical_lengths(&q).is_empty());
        // Brute-force oracle: the smallest value over the search box is 2 pi.
        let min = (1..=50)
            .flat_map(|k| (1..=50).map(move |l| critical_length(k, l)))
            .fold(f64::INFINITY, f64::min);
        assert!((min - 2.0 * PI).abs() < 1e-12);
    }

    #[test]
    fn matches_are_symmetric() {
        for k in 1..=6 {
            for l in 1..=6 {
                let q = CriticalLengthQuery::new(critical_length(k, l), 8, 1e-9).unwrap();
                let m = critical_lengths(&q);
                for c in &m {
                    assert!(has(&m, c.l, c.k));
                }
            }
        }
    }

    #[test]
    fn invalid_queries() {
        assert!(CriticalLengthQuery::new(0.0, 5, 1e-9).is_err());
        assert!(CriticalLengthQuery::new(1.0, 0, 1e-9).is_err());
        assert!(CriticalLengthQuery::new(1.0, 5, 0.0).is_err());
    }
}
