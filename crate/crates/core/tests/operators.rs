//! Discrete operator against derivatives computed by forward-mode jets.

use kdvsat::{build_linear_operator, nonlinear_term, NonlinearForm, SpatialGrid, StateField};

/// Truncated Taylor jet: `d[k]` is the k-th derivative.
#[derive(Clone, Copy, Debug)]
struct Jet {
    d: [f64; 4],
}

impl Jet {
    fn var(x: f64) -> Jet {
        Jet { d: [x, 1.0, 0.0, 0.0] }
    }

    fn constant(c: f64) -> Jet {
        Jet { d: [c, 0.0, 0.0, 0.0] }
    }

    fn add(self, o: Jet) -> Jet {
        Jet { d: std::array::from_fn(|k| self.d[k] + o.d[k]) }
    }

    fn scale(self, c: f64) -> Jet {
        Jet { d: self.d.map(|v| v * c) }
    }

    fn mul(self, o: Jet) -> Jet {
        const BINOM: [[f64; 4]; 4] = [[1.0, 0.0, 0.0, 0.0], [1.0, 1.0, 0.0, 0.0], [1.0, 2.0, 1.0, 0.0], [1.0, 3.0, 3.0, 1.0]];
        let mut d = [0.0; 4];
        for (n, dn) in d.iter_mut().enumerate() {
            *dn = (0..=n).map(|k| BINOM[n][k] * self.d[k] * o.d[n - k]).sum();
        }
        Jet { d }
    }

    /// `sin(u)` by the chain rule through third order.
    fn sin(self) -> Jet {
        let (s, c) = self.d[0].sin_cos();
        let [_, u1, u2, u3] = self.d;
        Jet { d: [s, c * u1, c * u2 - s * u1 * u1, c * u3 - 3.0 * s * u1 * u2 - c * u1 * u1 * u1] }
    }
}

/// `w = x (L - x)^2 sin^6(pi x / L)`: vanishes with its first derivatives at
/// both ends, so every boundary closure sees a smooth extension.
fn w_jet(x: f64, length: f64) -> Jet {
    let xv = Jet::var(x);
    let lm = Jet::constant(length).add(xv.scale(-1.0));
    let s = xv.scale(std::f64::consts::PI / length).sin();
    let s2 = s.mul(s);
    let s6 = s2.mul(s2).mul(s2);
    xv.mul(lm).mul(lm).mul(s6)
}

fn max_error(n: usize, length: f64) -> (f64, f64) {
    let g = SpatialGrid::new(length, n).unwrap();
    let w = StateField::from_fn(g, |x| w_jet(x, length).d[0]).unwrap();
    let aw = build_linear_operator(g).unwrap().apply(&w);
    let linear = g
        .nodes()
        .zip(aw.values())
        .map(|(x, v)| {
            let j = w_jet(x, length);
            (v + j.d[1] + j.d[3]).abs()
        })
        .fold(0.0, f64::max);
    let nw = nonlinear_term(&w, NonlinearForm::SkewSymmetric);
    let nonlinear = g
        .nodes()
        .zip(nw.values())
        .map(|(x, v)| {
            let j = w_jet(x, length);
            (v - j.d[0] * j.d[1]).abs()
        })
        .fold(0.0, f64::max);
    (linear, nonlinear)
}

#[test]
fn jet_oracle_is_consistent() {
    let x = 0.7;
    let (a, b) = (w_jet(x, 3.0), w_jet(x + 1e-5, 3.0));
    assert!(((b.d[0] - a.d[0]) / 1e-5 - a.d[1]).abs() < 1e-3);
    assert!(((b.d[2] - a.d[2]) / 1e-5 - a.d[3]).abs() < 1e-3 * a.d[3].abs().max(1.0));
}

#[test]
fn linear_and_nonlinear_terms_are_second_order_at_every_row() {
    let length = 5.0;
    let mut prev: Option<(f64, f64)> = None;
    for n in [63, 127, 255, 511] {
        let cur = max_error(n, length);
        if let Some(p) = prev {
            let lin_order = (p.0 / cur.0).log2();
            let nl_order = (p.1 / cur.1).log2();
            assert!((1.8..2.3).contains(&lin_order), "linear order {lin_order} at n = {n}");
            assert!((1.8..2.3).contains(&nl_order), "nonlinear order {nl_order} at n = {n}");
        }
        prev = Some(cur);
    }
}

#[test]
fn quadratic_form_equals_negative_boundary_flux() {
    let g = SpatialGrid::new(7.0, 40).unwrap();
    let w = StateField::from_fn(g, |x| (x * 1.3).sin() + 0.2 * x).unwrap();
    let a = build_linear_operator(g).unwrap();
    let h = g.spacing();
    let v = w.values();
    let flux = 0.5 * ((v[0] / h).powi(2) + (v[v.len() - 1] / h).powi(2));
    assert!((a.quadratic_form(&w) + flux).abs() < 1e-9 * flux);
}
