//! Exponential polynomials in the vertical variable on `[−h, 0]`.
//!
//! A term `c · z^p · e^{r (z − a)}` is anchored at `a = 0` for `r ≥ 0` and at
//! `a = −h` for `r < 0`, so every exponential factor is bounded by one on the
//! strip and deep-water profiles never overflow.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Rates closer than this (relative) are treated as equal.
const RATE_TOL: f64 = 1e-11;
/// Rates smaller than this in magnitude are snapped to zero.
const ZERO_RATE: f64 = 1e-12;
/// Particular-solution denominators below this switch to the secular branch.
pub const RESONANCE_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpTerm {
    pub amplitude: f64,
    pub rate: f64,
    pub secular_power: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExpPoly {
    pub h: f64,
    pub terms: Vec<ExpTerm>,
}

fn snap(rate: f64) -> f64 {
    if rate.abs() < ZERO_RATE {
        0.0
    } else {
        rate
    }
}

impl ExpPoly {
    pub fn zero(h: f64) -> Self {
        Self { h, terms: Vec::new() }
    }

    pub fn constant(h: f64, c: f64) -> Self {
        let mut p = Self::zero(h);
        p.terms.push(ExpTerm { amplitude: c, rate: 0.0, secular_power: 0 });
        p
    }

    pub fn anchor(&self, rate: f64) -> f64 {
        if rate >= 0.0 {
            0.0
        } else {
            -self.h
        }
    }

    /// Appends `c · e^{log_scale} · z^p · e^{r (z − z0)}`.
    pub fn push_exp(&mut self, c: f64, log_scale: f64, rate: f64, z0: f64, power: u32) {
        let rate = snap(rate);
        let a = self.anchor(rate);
        let amplitude = c * (log_scale + rate * (a - z0)).exp();
        if amplitude != 0.0 {
            self.terms.push(ExpTerm { amplitude, rate, secular_power: power });
        }
    }

    /// `cosh(m(z+h))/cosh(mh)` (`odd = false`) or `sinh(m(z+h))/cosh(mh)` (`odd = true`).
    pub fn hyperbolic_ratio(h: f64, m: f64, odd: bool) -> Self {
        let mut p = Self::zero(h);
        let ls = -crate::dispersion::ln_2cosh(m * h);
        p.push_exp(1.0, ls, m, -h, 0);
        p.push_exp(if odd { -1.0 } else { 1.0 }, ls, -m, -h, 0);
        p.canonical()
    }

    pub fn scale(mut self, s: f64) -> Self {
        self.terms.iter_mut().for_each(|t| t.amplitude *= s);
        self
    }

    pub fn add(&self, o: &ExpPoly) -> ExpPoly {
        let mut p = self.clone();
        p.terms.extend_from_slice(&o.terms);
        p.canonical()
    }

    pub fn add_assign(&mut self, o: &ExpPoly) {
        self.terms.extend_from_slice(&o.terms);
    }

    pub fn mul(&self, o: &ExpPoly) -> ExpPoly {
        let mut p = ExpPoly::zero(self.h);
        for t1 in &self.terms {
            let a1 = self.anchor(t1.rate);
            for t2 in &o.terms {
                let a2 = self.anchor(t2.rate);
                let r = snap(t1.rate + t2.rate);
                let a = self.anchor(r);
                let f = (r * a - t1.rate * a1 - t2.rate * a2).exp();
                p.terms.push(ExpTerm {
                    amplitude: t1.amplitude * t2.amplitude * f,
                    rate: r,
                    secular_power: t1.secular_power + t2.secular_power,
                });
            }
        }
        p.canonical()
    }

    /// Sorts terms and merges equal (power, rate) pairs.
    pub fn canonical(mut self) -> Self {
        self.terms.retain(|t| t.amplitude != 0.0);
        self.terms.sort_by(|a, b| {
            a.secular_power.cmp(&b.secular_power).then(a.rate.partial_cmp(&b.rate).unwrap())
        });
        let mut out: Vec<ExpTerm> = Vec::with_capacity(self.terms.len());
        for t in self.terms {
            if let Some(last) = out.last_mut() {
                if last.secular_power == t.secular_power
                    && (last.rate - t.rate).abs() <= RATE_TOL * last.rate.abs().max(1.0)
                {
                    last.amplitude += t.amplitude;
                    continue;
                }
            }
            out.push(t);
        }
        out.retain(|t| t.amplitude != 0.0);
        self.terms = out;
        self
    }

    pub fn eval(&self, z: f64) -> f64 {
        self.terms
            .iter()
            .map(|t| t.amplitude * z.powi(t.secular_power as i32) * (t.rate * (z - self.anchor(t.rate))).exp())
            .sum()
    }

    pub fn eval_complex(&self, z: Complex64) -> Complex64 {
        self.terms
            .iter()
            .map(|t| t.amplitude * z.powi(t.secular_power as i32) * (t.rate * (z - self.anchor(t.rate))).exp())
            .sum()
    }

    pub fn derivative(&self) -> ExpPoly {
        let mut p = ExpPoly::zero(self.h);
        for t in &self.terms {
            if t.secular_power > 0 {
                p.terms.push(ExpTerm {
                    amplitude: t.amplitude * t.secular_power as f64,
                    rate: t.rate,
                    secular_power: t.secular_power - 1,
                });
            }
            if t.rate != 0.0 {
                p.terms.push(ExpTerm { amplitude: t.amplitude * t.rate, ..*t });
            }
        }
        p.canonical()
    }

    pub fn max_abs_amplitude(&self) -> f64 {
        self.terms.iter().map(|t| t.amplitude.abs()).fold(0.0, f64::max)
    }
}

/// A solved vertical profile together with the boundary-value problem it solves:
/// `θ'' − κ²θ = forcing` on `(−h, 0)`, `θ(0) = top`, `θ'(−h) = neumann`.
#[derive(Debug, Clone, PartialEq)]
pub struct VerticalProfile {
    pub k: i32,
    pub order: usize,
    pub kappa: f64,
    pub top: f64,
    pub neumann: f64,
    pub forcing: ExpPoly,
    pub solution: ExpPoly,
}

impl VerticalProfile {
    /// Pointwise residual of the ODE at `z`.
    pub fn residual(&self, z: f64) -> f64 {
        let d2 = self.solution.derivative().derivative();
        d2.eval(z) - self.kappa * self.kappa * self.solution.eval(z) - self.forcing.eval(z)
    }

    /// Maximum ODE residual on `n` equispaced samples, and the two boundary defects.
    pub fn check(&self, n: usize) -> (f64, f64, f64) {
        let h = self.solution.h;
        let d1 = self.solution.derivative();
        let d2 = d1.derivative();
        let k2 = self.kappa * self.kappa;
        let mut r: f64 = 0.0;
        for i in 0..n {
            let z = -h * i as f64 / (n - 1) as f64;
            r = r.max((d2.eval(z) - k2 * self.solution.eval(z) - self.forcing.eval(z)).abs());
        }
        (r, (self.solution.eval(0.0) - self.top).abs(), (d1.eval(-h) - self.neumann).abs())
    }

    /// `∂_z θ(0)`.
    pub fn trace(&self) -> f64 {
        self.solution.derivative().eval(0.0)
    }
}

/// Solves `θ'' − κ²θ = forcing`, `θ(0) = top`, `θ'(−h) = neumann`.
pub fn solve_bvp(forcing: &ExpPoly, kappa: f64, top: f64, neumann: f64, k: i32, order: usize) -> Result<VerticalProfile> {
    let h = forcing.h;
    let k2 = kappa * kappa;
    let mut part = ExpPoly::zero(h);
    for t in &forcing.terms {
        let p = t.secular_power as usize;
        let mut mu = t.rate;
        let mut c = t.amplitude;
        let d = mu * mu - k2;
        if d.abs() < RESONANCE_TOL {
            // Secular branch: move the rate onto ±κ exactly, then P'' + 2μP' = c z^p.
            let target = if mu >= 0.0 { kappa } else { -kappa };
            let (a_old, a_new) = (forcing.anchor(mu), forcing.anchor(target));
            if a_old != a_new {
                return Err(Error::RateCollision {
                    order,
                    k,
                    detail: format!("resonant rate {mu} straddles the anchor switch"),
                });
            }
            c *= ((mu - target) * (0.0 - a_old)).exp();
            mu = target;
            let mut q = vec![0.0; p + 1];
            for i in (0..=p).rev() {
                let rhs = if i == p { c } else { 0.0 } - if i < p { (i + 1) as f64 * q[i + 1] } else { 0.0 };
                q[i] = rhs / (2.0 * mu);
            }
            for (i, qi) in q.iter().enumerate() {
                part.terms.push(ExpTerm { amplitude: qi / (i + 1) as f64, rate: mu, secular_power: (i + 1) as u32 });
            }
        } else {
            let mut pc = vec![0.0; p + 3];
            for i in (0..=p).rev() {
                let rhs = if i == p { c } else { 0.0 }
                    - ((i + 2) * (i + 1)) as f64 * pc[i + 2]
                    - 2.0 * mu * (i + 1) as f64 * pc[i + 1];
                pc[i] = rhs / d;
            }
            for (i, pi) in pc.iter().take(p + 1).enumerate() {
                part.terms.push(ExpTerm { amplitude: *pi, rate: mu, secular_power: i as u32 });
            }
        }
    }
    let part = part.canonical();
    let dpart = part.derivative();
    let e = (-kappa * h).exp();
    let p0 = part.eval(0.0);
    let dp_bottom = dpart.eval(-h);
    // θ = part + α e^{κz} + γ e^{−κ(z+h)}
    let gamma = (dp_bottom - kappa * e * (p0 - top) - neumann) / (kappa * (1.0 + e * e));
    let alpha = top - p0 - gamma * e;
    let mut sol = part;
    sol.terms.push(ExpTerm { amplitude: alpha, rate: kappa, secular_power: 0 });
    sol.terms.push(ExpTerm { amplitude: gamma, rate: -kappa, secular_power: 0 });
    Ok(VerticalProfile {
        k,
        order,
        kappa,
        top,
        neumann,
        forcing: forcing.clone(),
        solution: sol.canonical(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hyperbolic_ratio_values() {
        let h = 1.3;
        let c = ExpPoly::hyperbolic_ratio(h, 2.0, false);
        let s = ExpPoly::hyperbolic_ratio(h, 2.0, true);
        for z in [-1.3, -0.7, 0.0] {
            assert!((c.eval(z) - (2.0 * (z + h)).cosh() / (2.0 * h).cosh()).abs() < 1e-14);
            assert!((s.eval(z) - (2.0 * (z + h)).sinh() / (2.0 * h).cosh()).abs() < 1e-14);
        }
    }

    #[test]
    fn deep_ratio_is_bounded() {
        let c = ExpPoly::hyperbolic_ratio(50.0, 3.0, false);
        assert!(c.max_abs_amplitude() <= 1.0);
        assert!((c.eval(0.0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn product_and_derivative() {
        let h = 0.8;
        let a = ExpPoly::hyperbolic_ratio(h, 1.0, false);
        let b = ExpPoly::hyperbolic_ratio(h, 1.7, true);
        let p = a.mul(&b);
        let d = p.derivative();
        for z in [-0.8, -0.3, 0.0] {
            assert!((p.eval(z) - a.eval(z) * b.eval(z)).abs() < 1e-14);
            let fd = (p.eval(z + 1e-6) - p.eval(z - 1e-6)) / 2e-6;
            assert!((d.eval(z) - fd).abs() < 1e-8);
        }
    }

    #[test]
    fn bvp_generic_and_resonant() {
        let h = 1.1;
        let kappa = 1.4;
        let mut f = ExpPoly::zero(h);
        f.push_exp(0.7, 0.0, 2.1, 0.0, 1);
        f.push_exp(-0.3, 0.0, -0.4, 0.0, 0);
        f.push_exp(1.2, 0.0, kappa, 0.0, 0);
        f.push_exp(0.5, 0.0, -kappa, -h, 1);
        let f = f.canonical();
        let p = solve_bvp(&f, kappa, 0.25, -0.5, 0, 2).unwrap();
        let (r, top, bot) = p.check(100);
        assert!(r < 1e-12 && top < 1e-14 && bot < 1e-13, "{r} {top} {bot}");
    }
}
