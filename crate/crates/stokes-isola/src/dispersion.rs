//! Linear dispersion relation, unperturbed spectrum and the resonance root.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Argument above which `tanh` and `sech²` use their saturated forms.
const SATURATION: f64 = 19.0;

/// `tanh(x)` with the saturated branch `1 − 2e^{−2x}` for large `|x|`.
pub fn tanh_s(x: f64) -> f64 {
    if x > SATURATION {
        1.0 - 2.0 * (-2.0 * x).exp()
    } else if x < -SATURATION {
        -1.0 + 2.0 * (2.0 * x).exp()
    } else {
        x.tanh()
    }
}

/// `sech²(x)`, overflow-free.
pub fn sech2(x: f64) -> f64 {
    let a = x.abs();
    if a > SATURATION {
        4.0 * (-2.0 * a).exp()
    } else {
        let c = a.cosh();
        1.0 / (c * c)
    }
}

/// `ln(2 cosh x)` without overflow.
pub fn ln_2cosh(x: f64) -> f64 {
    let a = x.abs();
    a + (-2.0 * a).exp().ln_1p()
}

/// `(k²+β)^{1/4} tanh^{1/2}(h (k²+β)^{1/2})`, the branch frequency.
pub fn omega(k: f64, beta: f64, h: f64) -> f64 {
    let s = (k * k + beta).sqrt();
    s.sqrt() * tanh_s(h * s).sqrt()
}

/// Linear wave speed `c₀ = √tanh h`.
pub fn wave_speed(h: f64) -> f64 {
    tanh_s(h).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Branch {
    Plus,
    Minus,
}

impl Branch {
    pub fn sign(self) -> f64 {
        match self {
            Branch::Plus => 1.0,
            Branch::Minus => -1.0,
        }
    }
}

/// Unperturbed eigenvalue `λ⁰_±(k, β) = i[c₀k ± ω(k)]`.
pub fn lambda0(k: i32, beta: f64, h: f64, branch: Branch) -> Result<Complex64> {
    if !(beta > 0.0) || !(h > 0.0) {
        return Err(Error::Domain(format!("lambda0 needs beta > 0 and h > 0 (beta={beta}, h={h})")));
    }
    let c0 = wave_speed(h);
    let im = c0 * k as f64 + branch.sign() * omega(k as f64, beta, h);
    Ok(Complex64::new(0.0, im))
}

/// `F(β, h) = 3 tanh^{1/2} h − ω(1) − ω(2)`; its zero is the resonance.
pub fn resonance_residual(beta: f64, h: f64) -> Result<f64> {
    if !(beta >= 0.0) || !(h > 0.0) {
        return Err(Error::Domain(format!("resonance residual needs beta >= 0 and h > 0 (beta={beta}, h={h})")));
    }
    Ok(3.0 * wave_speed(h) - omega(1.0, beta, h) - omega(2.0, beta, h))
}

/// `τ = ½(h sech²(h s) + tanh(h s)/s)` with `s = √(k²+β)`; note `∂_β ω = τ/(2ω)`.
pub fn tau(k: f64, beta: f64, h: f64) -> f64 {
    let s = (k * k + beta).sqrt();
    0.5 * (h * sech2(h * s) + tanh_s(h * s) / s)
}

fn d_omega_d_beta(k: f64, beta: f64, h: f64) -> f64 {
    tau(k, beta, h) / (2.0 * omega(k, beta, h))
}

/// `∂_β F(β, h)`, strictly negative.
pub fn resonance_residual_dbeta(beta: f64, h: f64) -> f64 {
    -d_omega_d_beta(1.0, beta, h) - d_omega_d_beta(2.0, beta, h)
}

/// Bisection to width `switch_width`, then safeguarded Newton on a decreasing function.
fn bracketed_newton(
    f: impl Fn(f64) -> f64,
    df: impl Fn(f64) -> f64,
    mut lo: f64,
    mut hi: f64,
    tol: f64,
    switch_width: f64,
) -> Result<f64> {
    let (flo, fhi) = (f(lo), f(hi));
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if flo.signum() == fhi.signum() {
        return Err(Error::Bracket { lo, hi });
    }
    let increasing = flo < 0.0;
    let mut iterations = 0usize;
    while hi - lo > switch_width {
        let mid = 0.5 * (lo + hi);
        let fm = f(mid);
        if (fm < 0.0) == increasing {
            lo = mid;
        } else {
            hi = mid;
        }
        iterations += 1;
    }
    let mut x = 0.5 * (lo + hi);
    while iterations < 100 {
        iterations += 1;
        let fx = f(x);
        if fx.abs() <= tol {
            return Ok(x);
        }
        if (fx < 0.0) == increasing {
            lo = x;
        } else {
            hi = x;
        }
        let mut next = x - fx / df(x);
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if (next - x).abs() <= 4.0 * f64::EPSILON * x.abs().max(f64::MIN_POSITIVE) {
            return if f(next).abs() <= tol.max(8.0 * f64::EPSILON) {
                Ok(next)
            } else {
                Err(Error::Solver { lo, hi })
            };
        }
        x = next;
    }
    Err(Error::Solver { lo, hi })
}

/// Resonant transverse wavenumber squared, the unique root of `F(·, h)` in `(0, 3)`.
pub fn solve_beta_star(h: f64, tol: f64) -> Result<f64> {
    solve_beta_star_in(h, tol, 0.0, 3.0)
}

/// As [`solve_beta_star`] with a caller-supplied bracket inside `[0, 3]`.
pub fn solve_beta_star_in(h: f64, tol: f64, lo: f64, hi: f64) -> Result<f64> {
    if !(h > 0.0) || !(tol > 0.0) {
        return Err(Error::Domain(format!("solve_beta_star needs h > 0 and tol > 0 (h={h}, tol={tol})")));
    }
    let f = |b: f64| 3.0 * wave_speed(h) - omega(1.0, b, h) - omega(2.0, b, h);
    let df = |b: f64| if b > 0.0 { resonance_residual_dbeta(b, h) } else { resonance_residual_dbeta(1e-300, h) };
    bracketed_newton(f, df, lo, hi, tol, 1e-3)
}

/// Infinite-depth resonance `β_{*,∞}`: root of `3 − (1+β)^{1/4} − (4+β)^{1/4}`.
pub fn beta_star_infinite() -> f64 {
    let f = |b: f64| 3.0 - (1.0 + b).powf(0.25) - (4.0 + b).powf(0.25);
    let df = |b: f64| -0.25 * ((1.0 + b).powf(-0.75) + (4.0 + b).powf(-0.75));
    bracketed_newton(f, df, 0.0, 3.0, 1e-15, 1e-3).expect("bracket holds by construction")
}

/// Large-depth asymptote `β_{*,∞} − 12e^{−2h}/[(1+β_{*,∞})^{−3/4} + (4+β_{*,∞})^{−3/4}]`.
pub fn beta_star_deep_asymptote(h: f64) -> f64 {
    let b = beta_star_infinite();
    b - 12.0 * (-2.0 * h).exp() / ((1.0 + b).powf(-0.75) + (4.0 + b).powf(-0.75))
}

/// Shallow asymptote `(4/3)h²`.
pub fn beta_star_shallow_asymptote(h: f64) -> f64 {
    4.0 / 3.0 * h * h
}

/// Every depth-dependent scalar of the resonant configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DepthContext {
    pub h: f64,
    pub c0: f64,
    pub beta_star: f64,
    pub sigma: f64,
    pub gamma1: f64,
    pub gamma2: f64,
    pub tau1: f64,
    pub tau2: f64,
}

impl DepthContext {
    pub fn new(h: f64) -> Result<Self> {
        let beta_star = solve_beta_star(h, 1e-15)?;
        let c0 = wave_speed(h);
        let gamma1 = omega(1.0, beta_star, h);
        let gamma2 = omega(2.0, beta_star, h);
        Ok(Self {
            h,
            c0,
            beta_star,
            sigma: c0 - gamma1,
            gamma1,
            gamma2,
            tau1: tau(1.0, beta_star, h),
            tau2: tau(2.0, beta_star, h),
        })
    }

    /// Minimum distance from `iσ` to the rest of the unperturbed spectrum on `|k| ≤ K`.
    pub fn spectrum_gap(&self, kmax: i32) -> f64 {
        let mut gap = f64::INFINITY;
        for k in -kmax..=kmax {
            for branch in [Branch::Plus, Branch::Minus] {
                if (k, branch) == (1, Branch::Minus) || (k, branch) == (-2, Branch::Plus) {
                    continue;
                }
                let im = self.c0 * k as f64 + branch.sign() * omega(k as f64, self.beta_star, self.h);
                gap = gap.min((im - self.sigma).abs());
            }
        }
        gap
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn lambda0_deep_zero_mode() {
        let l = lambda0(0, 1.0, 50.0, Branch::Plus).unwrap();
        assert_eq!(l.re, 0.0);
        assert!((l.im - 1.0).abs() < 1e-10);
    }

    #[test]
    fn lambda0_collision_at_resonance() {
        for h in [0.1, 0.5, 1.0, 3.0, 20.0] {
            let b = solve_beta_star(h, 1e-15).unwrap();
            let a = lambda0(1, b, h, Branch::Minus).unwrap();
            let c = lambda0(-2, b, h, Branch::Plus).unwrap();
            assert!((a - c).norm() < 1e-10, "h={h}");
        }
    }

    #[test]
    fn lambda0_high_precision_value() {
        // 50-digit reference evaluation of the same expression.
        let l = lambda0(3, 2.5, 1.0, Branch::Plus).unwrap();
        assert!((l.im - 4.457_506_056_008_212_4).abs() < 1e-14);
    }

    #[test]
    fn lambda0_rejects_bad_domain() {
        assert!(lambda0(1, 0.0, 1.0, Branch::Plus).is_err());
        assert!(lambda0(1, 1.0, -1.0, Branch::Plus).is_err());
    }

    #[test]
    fn residual_signs_at_bracket_ends() {
        assert!(resonance_residual(0.0, 1.0).unwrap() > 0.0);
        assert!(resonance_residual(3.0, 1.0).unwrap() < 0.0);
        let b = solve_beta_star(1.0, 1e-14).unwrap();
        assert!(resonance_residual(b, 1.0).unwrap().abs() < 1e-12);
    }

    #[test]
    fn deep_and_shallow_limits() {
        assert!((solve_beta_star(50.0, 1e-14).unwrap() - 2.7275).abs() < 5e-4);
        let r = solve_beta_star(0.01, 1e-15).unwrap() / beta_star_shallow_asymptote(0.01);
        assert!((r - 1.0).abs() < 0.05, "ratio {r}");
        assert!((beta_star_infinite() - 2.727_521_147_881_380_8).abs() < 1e-13);
    }

    #[test]
    fn deep_correction_at_moderate_depth() {
        let b = solve_beta_star(10.0, 1e-15).unwrap();
        assert!((b - beta_star_deep_asymptote(10.0)).abs() < 1e-6);
    }

    #[test]
    fn context_invariants() {
        for h in [0.05, 0.3, 1.0, 2.0, 10.0, 100.0] {
            let c = DepthContext::new(h).unwrap();
            assert!(c.beta_star > 0.0 && c.beta_star < 3.0);
            assert!((c.sigma - (-2.0 * c.c0 + c.gamma2)).abs() < 1e-12);
            assert!(c.tau1 > 0.0 && c.tau2 > 0.0);
        }
    }

    #[test]
    fn gap_properties() {
        let c = DepthContext::new(1.0).unwrap();
        assert!(c.spectrum_gap(8) > 0.0);
        let c2 = DepthContext::new(2.0).unwrap();
        assert_eq!(c2.spectrum_gap(8), c2.spectrum_gap(16));
        let c3 = DepthContext::new(1.5).unwrap();
        let mut brute = f64::INFINITY;
        for k in -8..=8 {
            for br in [Branch::Plus, Branch::Minus] {
                if (k == 1 && br == Branch::Minus) || (k == -2 && br == Branch::Plus) {
                    continue;
                }
                let l = lambda0(k, c3.beta_star, 1.5, br).unwrap();
                brute = brute.min((l.im - c3.sigma).abs());
            }
        }
        assert_eq!(brute, c3.spectrum_gap(8));
    }

    #[test]
    fn beta_star_increasing_for_deep_water() {
        let mut prev = 0.0;
        for i in 0..40 {
            let h = 1.0 + 0.25 * i as f64;
            let b = solve_beta_star(h, 1e-15).unwrap();
            assert!(b > prev, "h={h}");
            prev = b;
        }
    }

    proptest! {
        #[test]
        fn monotone_branch_spacing(beta in 0.05f64..3.0, h in 0.1f64..10.0) {
            let c0 = wave_speed(h);
            let bound = c0 * (1.0 - (1.0 + beta).powf(-0.5));
            let im = |k: f64| c0 * k + omega(k, beta, h);
            for k in 1..=10 {
                let mid = k as f64 + 0.5;
                let d = (im(mid + 1e-6) - im(mid - 1e-6)) / 2e-6;
                prop_assert!(d > bound);
            }
        }

        #[test]
        fn root_independent_of_bracket(lo in 0.0f64..1.0, hi in 2.8f64..3.0) {
            let a = solve_beta_star(1.0, 1e-15).unwrap();
            let b = solve_beta_star_in(1.0, 1e-15, lo.min(a * 0.99), hi).unwrap();
            prop_assert!((a - b).abs() < 1e-10);
        }
    }
}
