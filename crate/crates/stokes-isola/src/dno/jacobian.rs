//! ε-series of the flattening Jacobian `J = |∂_x X|² + |∂_z X|²`.
//!
//! With `X − x = Σ_m Z_m(ε) sin(mx) cosh(m(z+h_ε))/cosh(mh_ε)`, `Z₁ = εζ₁₁ + ε³ζ₃₁`,
//! `Z₂ = ε²ζ₂₂`, `Z₃ = ε³ζ₃₃` and `h_ε = h + h₂ε²`, the depth shift contributes
//! `h₂ sinh z / cosh² h` (resp. `h₂ cosh z / cosh² h`) to the third-order
//! coefficient of `∂_x X` (resp. `∂_z X`).

use std::collections::BTreeMap;

use super::profile::ExpPoly;
use crate::dispersion::ln_2cosh;
use crate::stokes::ExpansionTables;

/// Map `(ε order n, x wavenumber m) → coefficient of ε^n e^{imx}`.
pub type XSeries = BTreeMap<(usize, i32), ExpPoly>;

#[derive(Debug, Clone)]
pub struct JacobianSeries {
    pub h: f64,
    /// `J = Σ_{n≤3} ε^n Σ_m J_{n,m}(z) e^{imx}`, including `J_{0,0} = 1`.
    pub terms: XSeries,
}

fn add_to(s: &mut XSeries, key: (usize, i32), p: &ExpPoly) {
    let h = p.h;
    let e = s.entry(key).or_insert_with(|| ExpPoly::zero(h));
    *e = e.add(p);
}

fn mul_series(a: &XSeries, b: &XSeries, max_order: usize) -> XSeries {
    let mut out = XSeries::new();
    for (&(n1, m1), p1) in a {
        for (&(n2, m2), p2) in b {
            if n1 + n2 <= max_order {
                add_to(&mut out, (n1 + n2, m1 + m2), &p1.mul(p2));
            }
        }
    }
    out
}

/// `sinh z / cosh² h` (`odd`) or `cosh z / cosh² h`.
fn depth_shift(h: f64, odd: bool) -> ExpPoly {
    let mut p = ExpPoly::zero(h);
    let ls = -2.0 * (ln_2cosh(h) - std::f64::consts::LN_2);
    p.push_exp(0.5, ls, 1.0, 0.0, 0);
    p.push_exp(if odd { -0.5 } else { 0.5 }, ls, -1.0, 0.0, 0);
    p.canonical()
}

impl JacobianSeries {
    pub fn new(h: f64, t: &ExpansionTables) -> Self {
        let ch = |m: f64| ExpPoly::hyperbolic_ratio(h, m, false);
        let sh = |m: f64| ExpPoly::hyperbolic_ratio(h, m, true);
        // a_{m,n}: cos(mx) coefficient of ∂_x X at ε^n; b_{m,n}: sin(mx) coefficient of ∂_z X.
        let a: Vec<(i32, usize, ExpPoly)> = vec![
            (1, 1, ch(1.0).scale(t.zeta11)),
            (1, 3, ch(1.0).scale(t.zeta31).add(&depth_shift(h, true).scale(t.zeta11 * t.h2))),
            (2, 2, ch(2.0).scale(2.0 * t.zeta22)),
            (3, 3, ch(3.0).scale(3.0 * t.zeta33)),
        ];
        let b: Vec<(i32, usize, ExpPoly)> = vec![
            (1, 1, sh(1.0).scale(t.zeta11)),
            (1, 3, sh(1.0).scale(t.zeta31).add(&depth_shift(h, false).scale(t.zeta11 * t.h2))),
            (2, 2, sh(2.0).scale(2.0 * t.zeta22)),
            (3, 3, sh(3.0).scale(3.0 * t.zeta33)),
        ];
        let mut dx = XSeries::new();
        dx.insert((0, 0), ExpPoly::constant(h, 1.0));
        for (m, n, p) in &a {
            add_to(&mut dx, (*n, *m), &p.clone().scale(0.5));
            add_to(&mut dx, (*n, -*m), &p.clone().scale(0.5));
        }
        // W = i ∂_z X has real exponential-basis coefficients ±b/2.
        let mut w = XSeries::new();
        for (m, n, p) in &b {
            add_to(&mut w, (*n, *m), &p.clone().scale(0.5));
            add_to(&mut w, (*n, -*m), &p.clone().scale(-0.5));
        }
        let mut terms = mul_series(&dx, &dx, 3);
        for (k, p) in mul_series(&w, &w, 3) {
            add_to(&mut terms, k, &p.scale(-1.0));
        }
        terms.retain(|_, p| !p.terms.is_empty());
        Self { h, terms }
    }

    /// `J_{n,m}(z)`; zero polynomial if absent.
    pub fn coefficient(&self, n: usize, m: i32) -> ExpPoly {
        self.terms.get(&(n, m)).cloned().unwrap_or_else(|| ExpPoly::zero(self.h))
    }

    /// `J(x, z; ε)` evaluated pointwise.
    pub fn eval(&self, eps: f64, x: f64, z: f64) -> f64 {
        self.terms
            .iter()
            .map(|(&(n, m), p)| eps.powi(n as i32) * (m as f64 * x).cos() * p.eval(z))
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dispersion::DepthContext;

    /// Conformal map evaluated directly from its definition with `h_ε = h + h₂ε²`.
    fn direct_jacobian(t: &ExpansionTables, h: f64, eps: f64, x: f64, z: f64) -> f64 {
        let he = h + t.h2 * eps * eps;
        let zs = [
            (1.0, eps * t.zeta11 + eps.powi(3) * t.zeta31),
            (2.0, eps * eps * t.zeta22),
            (3.0, eps.powi(3) * t.zeta33),
        ];
        let (mut xx, mut xz) = (1.0, 0.0);
        for (m, zm) in zs {
            xx += m * zm * (m * x).cos() * (m * (z + he)).cosh() / (m * he).cosh();
            xz += m * zm * (m * x).sin() * (m * (z + he)).sinh() / (m * he).cosh();
        }
        xx * xx + xz * xz
    }

    #[test]
    fn series_matches_direct_map_to_fourth_order() {
        let h = 1.2;
        let ctx = DepthContext::new(h).unwrap();
        let t = ExpansionTables::from_context(&ctx);
        let js = JacobianSeries::new(h, &t);
        let err = |eps: f64| {
            let mut e: f64 = 0.0;
            for i in 0..9 {
                for j in 0..7 {
                    let x = 0.7 * i as f64;
                    let z = -h * j as f64 / 6.0;
                    e = e.max((js.eval(eps, x, z) - direct_jacobian(&t, h, eps, x, z)).abs());
                }
            }
            e
        };
        let (e1, e2) = (err(0.02), err(0.01));
        assert!(e1 < 1e-4);
        assert!((e1 / e2 / 16.0 - 1.0).abs() < 0.2, "ratio {}", e1 / e2);
    }

    #[test]
    fn second_order_matches_closed_form() {
        let h = 0.9;
        let ctx = DepthContext::new(h).unwrap();
        let t = ExpansionTables::from_context(&ctx);
        let js = JacobianSeries::new(h, &t);
        let c = |a: f64| a.cosh();
        for z in [-0.9, -0.4, 0.0] {
            let mean = c(2.0 * (h + z)) / (2.0 * c(h) * c(h)) * t.zeta11 * t.zeta11;
            let cos2 = 4.0 * c(2.0 * (h + z)) / c(2.0 * h) * t.zeta22 + t.zeta11 * t.zeta11 / (2.0 * c(h) * c(h));
            assert!((js.coefficient(2, 0).eval(z) - mean).abs() < 1e-12);
            assert!((2.0 * js.coefficient(2, 2).eval(z) - cos2).abs() < 1e-12);
            let first = 2.0 * c(h + z) / c(h) * t.zeta11;
            assert!((2.0 * js.coefficient(1, 1).eval(z) - first).abs() < 1e-12);
        }
    }
}
