//! Third-order Stokes wave, conformal map and flattened coefficient tables,
//! plus a fixed-point conformal solver used as an independent check.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::dispersion::{tanh_s, DepthContext};
use crate::error::{Error, Result};

/// Largest amplitude accepted by the truncated series.
pub const EPS_GUARD: f64 = 0.1;

/// Expansion coefficients, each a rational function of `c₀`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExpansionTables {
    pub c0: f64,
    pub c2: f64,
    pub eta20: f64,
    pub eta22: f64,
    pub eta31: f64,
    pub eta33: f64,
    pub psi22: f64,
    pub psi31: f64,
    pub psi33: f64,
    pub h2: f64,
    pub zeta11: f64,
    pub zeta22: f64,
    pub zeta31: f64,
    pub zeta33: f64,
    pub p11: f64,
    pub p20: f64,
    pub p22: f64,
    pub p31: f64,
    pub p33: f64,
    pub q11: f64,
    pub q20: f64,
    pub q22: f64,
    pub q31: f64,
    pub q33: f64,
    pub r11: f64,
    pub r20: f64,
    pub r22: f64,
    pub r31: f64,
    pub r33: f64,
}

impl ExpansionTables {
    pub fn from_context(ctx: &DepthContext) -> Self {
        Self::from_c0(ctx.c0)
    }

    pub fn from_c0(c: f64) -> Self {
        let p = |n: i32| c.powi(n);
        let s = c * c + 1.0;
        Self {
            c0: c,
            c2: (-12.0 * p(12) + 13.0 * p(8) - 12.0 * p(4) + 9.0) / (16.0 * p(7)),
            eta20: (p(4) - 1.0) / (4.0 * p(2)),
            eta22: (-p(4) + 3.0) / (4.0 * p(6)),
            eta31: (-2.0 * p(12) + 3.0 * p(8) + 3.0) / (16.0 * p(8) * s),
            eta33: (-3.0 * p(12) + 9.0 * p(8) - 9.0 * p(4) + 27.0) / (64.0 * p(12)),
            psi22: (p(8) + 3.0) / (8.0 * p(7)),
            psi31: (2.0 * p(12) - 8.0 * p(8) - 3.0) / (16.0 * p(7) * s),
            psi33: (-9.0 * p(12) + 19.0 * p(8) + 5.0 * p(4) + 9.0) / (64.0 * p(13)),
            h2: (p(4) - 3.0) / (4.0 * p(2)),
            zeta11: 1.0 / p(2),
            zeta22: (p(8) + 4.0 * p(4) + 3.0) / (8.0 * p(8)),
            zeta31: (4.0 * p(14) + 2.0 * p(12) - 17.0 * p(10) - 14.0 * p(8) + 10.0 * p(6) + 10.0 * p(4)
                - 15.0 * p(2)
                - 12.0)
                / (16.0 * p(10) * s),
            zeta33: (3.0 * p(12) + 43.0 * p(8) + 41.0 * p(4) + 9.0) / (64.0 * p(14)),
            p11: -2.0 / c,
            p20: (-2.0 * p(12) + 5.0 * p(8) + 12.0 * p(4) + 9.0) / (16.0 * p(7)),
            p22: -(p(4) + 3.0) / (2.0 * p(7)),
            p31: (-2.0 * p(14) + 14.0 * p(10) + 11.0 * p(8) - 10.0 * p(6) - 10.0 * p(4) + 24.0 * p(2) + 21.0)
                / (8.0 * p(9) * s),
            p33: -(p(12) + 17.0 * p(8) + 51.0 * p(4) + 27.0) / (32.0 * p(13)),
            q11: -p(2),
            q20: 1.0,
            q22: 2.0 - 3.0 / p(4),
            q31: (4.0 * p(14) + 6.0 * p(12) - 9.0 * p(10) - 12.0 * p(8) - 30.0 * p(6) - 30.0 * p(4)
                + 69.0 * p(2)
                + 66.0)
                / (16.0 * p(6) * s),
            q33: -3.0 * (3.0 * p(12) + 19.0 * p(8) - 71.0 * p(4) + 81.0) / (64.0 * p(10)),
            r11: -(p(2) + 1.0 / p(2)),
            r20: 1.5 + 0.5 / p(4),
            r22: (9.0 * p(8) - 14.0 * p(4) - 3.0) / (4.0 * p(8)),
            r31: (4.0 * p(18) + 6.0 * p(16) - 11.0 * p(14) - 12.0 * p(12) - 45.0 * p(10) - 48.0 * p(8)
                + 93.0 * p(6)
                + 90.0 * p(4)
                + 27.0 * p(2)
                + 24.0)
                / (16.0 * p(10) * s),
            r33: (-p(16) - 98.0 * p(12) + 252.0 * p(8) - 318.0 * p(4) - 27.0) / (64.0 * p(14)),
        }
    }

    /// Named entries in a fixed order, for serialization.
    pub fn entries(&self) -> Vec<(&'static str, f64)> {
        vec![
            ("c2", self.c2),
            ("eta20", self.eta20),
            ("eta22", self.eta22),
            ("eta31", self.eta31),
            ("eta33", self.eta33),
            ("psi22", self.psi22),
            ("psi31", self.psi31),
            ("psi33", self.psi33),
            ("h2", self.h2),
            ("zeta11", self.zeta11),
            ("zeta22", self.zeta22),
            ("zeta31", self.zeta31),
            ("zeta33", self.zeta33),
            ("p11", self.p11),
            ("p20", self.p20),
            ("p22", self.p22),
            ("p31", self.p31),
            ("p33", self.p33),
            ("q11", self.q11),
            ("q20", self.q20),
            ("q22", self.q22),
            ("q31", self.q31),
            ("q33", self.q33),
            ("r11", self.r11),
            ("r20", self.r20),
            ("r22", self.r22),
            ("r31", self.r31),
            ("r33", self.r33),
        ]
    }

    pub fn series(&self, which: Profile) -> PeriodicFunctionSeries {
        let t = self;
        let (parity, list): (Parity, Vec<((u32, u32), f64)>) = match which {
            Profile::Eta => (
                Parity::Even,
                vec![((1, 1), 1.0), ((2, 0), t.eta20), ((2, 2), t.eta22), ((3, 1), t.eta31), ((3, 3), t.eta33)],
            ),
            Profile::Psi => (
                Parity::Odd,
                vec![((1, 1), 1.0 / t.c0), ((2, 2), t.psi22), ((3, 1), t.psi31), ((3, 3), t.psi33)],
            ),
            Profile::Zeta => (
                Parity::Odd,
                vec![((1, 1), t.zeta11), ((2, 2), t.zeta22), ((3, 1), t.zeta31), ((3, 3), t.zeta33)],
            ),
            Profile::P => (
                Parity::Even,
                vec![
                    ((0, 0), t.c0),
                    ((1, 1), t.p11),
                    ((2, 0), t.p20),
                    ((2, 2), t.p22),
                    ((3, 1), t.p31),
                    ((3, 3), t.p33),
                ],
            ),
            Profile::Q => (
                Parity::Even,
                vec![((1, 1), t.q11), ((2, 0), t.q20), ((2, 2), t.q22), ((3, 1), t.q31), ((3, 3), t.q33)],
            ),
            Profile::R => (
                Parity::Even,
                vec![
                    ((0, 0), 1.0),
                    ((1, 1), t.r11),
                    ((2, 0), t.r20),
                    ((2, 2), t.r22),
                    ((3, 1), t.r31),
                    ((3, 3), t.r33),
                ],
            ),
        };
        PeriodicFunctionSeries { coefficients: list.into_iter().collect(), parity }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Profile {
    /// Surface elevation η*.
    Eta,
    /// Surface potential ψ*.
    Psi,
    /// Boundary value of the conformal map, ζ(x) (includes the identity part).
    Zeta,
    P,
    Q,
    /// `(1+q)/ζ′`.
    R,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Parity {
    Even,
    Odd,
}

/// `Σ ε^n a_{n,m} cos(mx)` (even) or `Σ ε^n a_{n,m} sin(mx)` (odd).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodicFunctionSeries {
    pub coefficients: BTreeMap<(u32, u32), f64>,
    pub parity: Parity,
}

impl PeriodicFunctionSeries {
    pub fn eval(&self, eps: f64, x: f64) -> f64 {
        self.coefficients
            .iter()
            .map(|(&(n, m), &a)| {
                let trig = match self.parity {
                    Parity::Even => (m as f64 * x).cos(),
                    Parity::Odd => (m as f64 * x).sin(),
                };
                a * eps.powi(n as i32) * trig
            })
            .sum()
    }

    /// Amplitude multiplying `cos(mx)` (or `sin(mx)`) at `eps`.
    pub fn amplitude(&self, eps: f64, m: u32) -> f64 {
        self.coefficients
            .iter()
            .filter(|(&(_, mm), _)| mm == m)
            .map(|(&(n, _), &a)| a * eps.powi(n as i32))
            .sum()
    }

    /// Highest wavenumber present.
    pub fn bandwidth(&self) -> u32 {
        self.coefficients.keys().map(|&(_, m)| m).max().unwrap_or(0)
    }
}

/// Third-order truncated evaluation of a profile.
pub fn eval_profile(tables: &ExpansionTables, eps: f64, x: f64, which: Profile) -> Result<f64> {
    if eps.abs() > EPS_GUARD {
        return Err(Error::Range { eps, guard: EPS_GUARD });
    }
    let v = tables.series(which).eval(eps, x);
    Ok(match which {
        Profile::Zeta => x + v,
        _ => v,
    })
}

/// Result of the conformal fixed-point iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct ConformalSolution {
    /// `ζ(x_j)` at `x_j = 2πj/N`.
    pub zeta: Vec<f64>,
    pub h_eps: f64,
    pub iterations: usize,
}

impl ConformalSolution {
    /// Sine amplitude of `ζ − x` at wavenumber `m`.
    pub fn sine_amplitude(&self, m: u32) -> f64 {
        let n = self.zeta.len();
        let mut s = 0.0;
        for (j, z) in self.zeta.iter().enumerate() {
            let x = 2.0 * PI * j as f64 / n as f64;
            s += (z - x) * (m as f64 * x).sin();
        }
        2.0 * s / n as f64
    }
}

/// Picard iteration for the boundary value of the conformal map.
///
/// Iterates `g ↦ −(i/2π) Σ sign(k) coth(|k| h_ε) FT[η*∘(I+g)](k) e^{ikx}`,
/// updating `h_ε = h + mean(η*∘(I+g))` each sweep.
pub fn conformal_fixed_point(
    ctx: &DepthContext,
    tables: &ExpansionTables,
    eps: f64,
    n: usize,
    tol: f64,
) -> Result<ConformalSolution> {
    if eps.abs() > 0.05 {
        return Err(Error::Range { eps, guard: 0.05 });
    }
    if n < 64 || !n.is_power_of_two() {
        return Err(Error::Domain(format!("grid size {n} must be a power of two >= 64")));
    }
    let eta = tables.series(Profile::Eta);
    let mut planner = FftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(n);
    let inv = planner.plan_fft_inverse(n);
    let xs: Vec<f64> = (0..n).map(|j| 2.0 * PI * j as f64 / n as f64).collect();
    let kcut = (n / 3) as i64;
    let mut g = vec![0.0; n];
    let mut h_eps;
    let mut first_update = None;
    for it in 1..=500 {
        let mut buf: Vec<Complex64> = xs.iter().zip(&g).map(|(x, gj)| Complex64::new(eta.eval(eps, x + gj), 0.0)).collect();
        fwd.process(&mut buf);
        h_eps = ctx.h + buf[0].re / n as f64;
        for (idx, v) in buf.iter_mut().enumerate() {
            let k = if idx <= n / 2 { idx as i64 } else { idx as i64 - n as i64 };
            if k == 0 || k.abs() > kcut || idx == n / 2 {
                *v = Complex64::new(0.0, 0.0);
            } else {
                let coth = 1.0 / tanh_s(k.unsigned_abs() as f64 * h_eps);
                *v *= Complex64::new(0.0, -(k.signum() as f64) * coth);
            }
        }
        inv.process(&mut buf);
        let mut update: f64 = 0.0;
        for (gj, b) in g.iter_mut().zip(&buf) {
            let new = b.re / n as f64;
            update = update.max((new - *gj).abs());
            *gj = new;
        }
        if !update.is_finite() || first_update.is_some_and(|f: f64| update > 1e3 * f.max(1e-300) && it > 3) {
            return Err(Error::Convergence { iterations: it, last_update: update });
        }
        first_update.get_or_insert(update);
        if update < tol {
            let zeta = xs.iter().zip(&g).map(|(x, gj)| x + gj).collect();
            return Ok(ConformalSolution { zeta, h_eps, iterations: it });
        }
    }
    Err(Error::Convergence { iterations: 500, last_update: f64::NAN })
}
