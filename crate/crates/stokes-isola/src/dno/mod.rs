//! The flattened Dirichlet–Neumann operator `G_{ε,β} = Σ ε^j R_{j,β}`.
//!
//! `R₀` and `R₁` have closed-form Fourier multipliers; `R₂` and `R₃` come from
//! the order cascade in [`cascade`]. The spectral solver in [`oracle`] solves the
//! variable-coefficient strip problem directly and serves as an independent check.

pub mod cascade;
pub mod jacobian;
pub mod oracle;
pub mod profile;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dispersion::tanh_s;
use crate::error::{Error, Result};
use crate::jet::Jet;
use crate::stokes::ExpansionTables;
use cascade::Cascade;
use jacobian::JacobianSeries;
use profile::VerticalProfile;

/// Symbol of `R₀`: `√(k²+β) tanh(h√(k²+β))`.
pub fn r0_coeff(k: i32, beta: f64, h: f64) -> f64 {
    r0_jet::<1>(k, Jet::constant(beta), h).value()
}

pub fn r0_jet<const N: usize>(k: i32, beta: Jet<N>, h: f64) -> Jet<N> {
    let s = (beta + (k as f64).powi(2)).sqrt();
    s * (s * h).tanh()
}

/// `(B^{−1}_k, B^{1}_k)`: coefficients of `f̂(k−1)` and `f̂(k+1)` in `(R₁f)^(k)`.
pub fn r1_coeffs(k: i32, beta: f64, h: f64) -> (f64, f64) {
    let (a, b) = r1_jet::<1>(k, Jet::constant(beta), h);
    (a.value(), b.value())
}

pub fn r1_jet<const N: usize>(k: i32, beta: Jet<N>, h: f64) -> (Jet<N>, Jet<N>) {
    let kf = k as f64;
    let coth = 1.0 / tanh_s(h);
    let s = |m: f64| (beta + m * m).sqrt();
    let st = |m: f64| {
        let r = s(m);
        (r, (r * h).tanh())
    };
    let (sm, tm) = st(kf - 1.0);
    let (s0, t0) = st(kf);
    let (sp, tp) = st(kf + 1.0);
    let bm = (beta - sm * s0 * tm * t0 + (sm * tm * kf - s0 * t0 * (kf - 1.0)) * coth + (kf * kf - kf)).scale(0.5);
    let bp = (beta - s0 * sp * t0 * tp + (s0 * t0 * (kf + 1.0) - sp * tp * kf) * coth + (kf * kf + kf)).scale(0.5);
    (bm, bp)
}

/// Infinite-depth limits of `(B^{−1}_k, B^{1}_k)`.
pub fn r1_deep_limits(k: i32, beta: f64) -> (f64, f64) {
    let k = k as f64;
    let s = |m: f64| (beta + m * m).sqrt();
    let bm = 0.5 * (beta - (k - 1.0) * s(k) - s(k - 1.0) * s(k) + k * k + k * s(k - 1.0) - k);
    let bp = 0.5 * (beta + (k + 1.0) * s(k) - s(k) * s(k + 1.0) + k * k - k * s(k + 1.0) + k);
    (bm, bp)
}

/// One output row of the multipliers: `(R_j f)^(k) = Σ_s coeff(j, s) f̂(k+s)`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct MultiplierCoeffs {
    pub k: i32,
    pub a0: f64,
    pub bm1: f64,
    pub bp1: f64,
    pub cm2: f64,
    pub c0: f64,
    pub cp2: f64,
    pub dm3: f64,
    pub dm1: f64,
    pub dp1: f64,
    pub dp3: f64,
}

impl MultiplierCoeffs {
    pub const COLUMNS: [&'static str; 11] = ["k", "A0", "Bm1", "Bp1", "Cm2", "C0", "Cp2", "Dm3", "Dm1", "Dp1", "Dp3"];

    /// Coefficient of `f̂(k+s)` in `(R_j f)^(k)`; zero outside the band.
    pub fn coeff(&self, j: usize, s: i32) -> f64 {
        match (j, s) {
            (0, 0) => self.a0,
            (1, -1) => self.bm1,
            (1, 1) => self.bp1,
            (2, -2) => self.cm2,
            (2, 0) => self.c0,
            (2, 2) => self.cp2,
            (3, -3) => self.dm3,
            (3, -1) => self.dm1,
            (3, 1) => self.dp1,
            (3, 3) => self.dp3,
            _ => 0.0,
        }
    }

    pub fn set(&mut self, j: usize, s: i32, v: f64) {
        let slot = match (j, s) {
            (0, 0) => &mut self.a0,
            (1, -1) => &mut self.bm1,
            (1, 1) => &mut self.bp1,
            (2, -2) => &mut self.cm2,
            (2, 0) => &mut self.c0,
            (2, 2) => &mut self.cp2,
            (3, -3) => &mut self.dm3,
            (3, -1) => &mut self.dm1,
            (3, 1) => &mut self.dp1,
            (3, 3) => &mut self.dp3,
            _ => return,
        };
        *slot = v;
    }

    pub fn values(&self) -> [f64; 10] {
        [self.a0, self.bm1, self.bp1, self.cm2, self.c0, self.cp2, self.dm3, self.dm1, self.dp1, self.dp3]
    }

    fn combine(rows: &[(f64, &MultiplierCoeffs)]) -> MultiplierCoeffs {
        let mut out = MultiplierCoeffs { k: rows[0].1.k, ..Default::default() };
        for j in 0..=3 {
            for s in -3..=3 {
                let v: f64 = rows.iter().map(|(w, r)| w * r.coeff(j, s)).sum();
                out.set(j, s, v);
            }
        }
        out
    }
}

/// Shifts carried by order `j`.
pub fn shifts(j: usize) -> &'static [i32] {
    match j {
        0 => &[0],
        1 => &[-1, 1],
        2 => &[-2, 0, 2],
        _ => &[-3, -1, 1, 3],
    }
}

/// Solves the cascade for every input `k + s` feeding output `k` and returns the
/// order-`j` profiles `Θ̂^j(k, ·)` (one per input) and the multiplier row.
pub fn cascade_solve(
    j: usize,
    k: i32,
    beta: f64,
    h: f64,
    tables: &ExpansionTables,
) -> Result<(Vec<VerticalProfile>, MultiplierCoeffs)> {
    if !(1..=3).contains(&j) {
        return Err(Error::Domain(format!("cascade order {j} outside 1..=3")));
    }
    let jac = JacobianSeries::new(h, tables);
    let mut row = MultiplierCoeffs { k, ..Default::default() };
    let mut profiles = Vec::new();
    for &s in shifts(j) {
        let c = Cascade::solve(k + s, beta, tables.h2, &jac, j)?;
        if let Some(p) = c.profile(j, k) {
            profiles.push(p.clone());
        }
        row.set(j, s, c.trace(j, k));
    }
    Ok((profiles, row))
}

/// How the first-order multipliers are obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FirstOrder {
    ClosedForm,
    Cascade,
}

/// Multiplier rows for outputs `kmin..=kmax`.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiplierTable {
    pub kmin: i32,
    pub kmax: i32,
    pub rows: Vec<MultiplierCoeffs>,
}

impl MultiplierTable {
    pub fn build(beta: f64, h: f64, tables: &ExpansionTables, kmin: i32, kmax: i32) -> Result<Self> {
        Self::build_with(beta, h, tables, kmin, kmax, FirstOrder::ClosedForm)
    }

    pub fn build_with(
        beta: f64,
        h: f64,
        tables: &ExpansionTables,
        kmin: i32,
        kmax: i32,
        first: FirstOrder,
    ) -> Result<Self> {
        let jac = JacobianSeries::new(h, tables);
        let cascades: Vec<Cascade> = ((kmin - 3)..=(kmax + 3))
            .into_par_iter()
            .map(|k_in| Cascade::solve(k_in, beta, tables.h2, &jac, 3))
            .collect::<Result<_>>()?;
        let rows = (kmin..=kmax)
            .map(|k| {
                let mut row = MultiplierCoeffs { k, a0: r0_coeff(k, beta, h), ..Default::default() };
                match first {
                    FirstOrder::ClosedForm => {
                        let (bm, bp) = r1_coeffs(k, beta, h);
                        row.bm1 = bm;
                        row.bp1 = bp;
                    }
                    FirstOrder::Cascade => {
                        for &s in shifts(1) {
                            row.set(1, s, cascades[(k + s - kmin + 3) as usize].trace(1, k));
                        }
                    }
                }
                for j in 2..=3 {
                    for &s in shifts(j) {
                        row.set(j, s, cascades[(k + s - kmin + 3) as usize].trace(j, k));
                    }
                }
                row
            })
            .collect();
        Ok(Self { kmin, kmax, rows })
    }

    pub fn row(&self, k: i32) -> Option<&MultiplierCoeffs> {
        if k < self.kmin || k > self.kmax {
            None
        } else {
            Some(&self.rows[(k - self.kmin) as usize])
        }
    }

    /// Coefficient mapping input `e^{i k_in x}` to output `e^{i(k_in+t)x}` at order `j`.
    pub fn response(&self, j: usize, k_in: i32, t: i32) -> f64 {
        self.row(k_in + t).map(|r| r.coeff(j, -t)).unwrap_or(0.0)
    }

    /// Taylor coefficients `∂_β^ℓ/ℓ!` of every multiplier at `beta`.
    ///
    /// Orders 0 and 1 use jet arithmetic through the closed forms; orders 2 and 3
    /// use Richardson-extrapolated central differences of the cascade.
    pub fn taylor(ell: usize, beta: f64, h: f64, tables: &ExpansionTables, kmin: i32, kmax: i32) -> Result<Self> {
        if ell == 0 {
            return Self::build(beta, h, tables, kmin, kmax);
        }
        if ell > 3 {
            return Err(Error::Domain(format!("beta Taylor order {ell} outside 1..=3")));
        }
        let step = fd_step(ell, beta);
        let fd = |s: f64| -> Result<MultiplierTable> {
            let nodes: Vec<(f64, f64)> = match ell {
                1 => vec![(1.0, 0.5), (-1.0, -0.5)],
                2 => vec![(1.0, 1.0), (0.0, -2.0), (-1.0, 1.0)],
                _ => vec![(2.0, 0.5), (1.0, -1.0), (-1.0, 1.0), (-2.0, -0.5)],
            };
            let tables_at: Vec<(f64, MultiplierTable)> = nodes
                .iter()
                .map(|&(o, w)| Ok((w / s.powi(ell as i32), Self::build(beta + o * s, h, tables, kmin, kmax)?)))
                .collect::<Result<_>>()?;
            let rows = (0..tables_at[0].1.rows.len())
                .map(|i| {
                    let parts: Vec<(f64, &MultiplierCoeffs)> = tables_at.iter().map(|(w, t)| (*w, &t.rows[i])).collect();
                    MultiplierCoeffs::combine(&parts)
                })
                .collect();
            Ok(MultiplierTable { kmin, kmax, rows })
        };
        let coarse = fd(step)?;
        let fine = fd(0.5 * step)?;
        let fact: f64 = (1..=ell).map(|i| i as f64).product();
        let mut rows = Vec::with_capacity(fine.rows.len());
        for (k, (f, c)) in (kmin..=kmax).zip(fine.rows.iter().zip(&coarse.rows)) {
            let mut r = MultiplierCoeffs::combine(&[(4.0 / 3.0 / fact, f), (-1.0 / 3.0 / fact, c)]);
            let jets = taylor_closed_form(k, beta, h);
            r.a0 = jets.0[ell];
            r.bm1 = jets.1[ell];
            r.bp1 = jets.2[ell];
            rows.push(r);
        }
        let mut t = Self { kmin, kmax, rows };
        t.symmetrize(&[2, 3]);
        Ok(t)
    }

    /// Replaces each pair `coeff(k, s)`, `coeff(k+s, −s)` of orders `js` by its mean.
    fn symmetrize(&mut self, js: &[usize]) {
        let orig = self.clone();
        for row in &mut self.rows {
            for &j in js {
                for &s in shifts(j) {
                    if let Some(m) = orig.row(row.k + s) {
                        row.set(j, s, 0.5 * (orig.row(row.k).unwrap().coeff(j, s) + m.coeff(j, -s)));
                    }
                }
            }
        }
    }
}

/// Step for the ℓ-th central difference in β.
fn fd_step(ell: usize, beta: f64) -> f64 {
    let base = 1e-4f64.max(1e-4 * beta) * [1.0, 20.0, 60.0][ell - 1];
    base.min(beta * [1e-3, 1e-2, 3e-2][ell - 1])
}

/// Taylor coefficients in β of `(A⁰_k, B^{−1}_k, B^{1}_k)` up to third order.
pub fn taylor_closed_form(k: i32, beta: f64, h: f64) -> ([f64; 4], [f64; 4], [f64; 4]) {
    let b = Jet::<4>::variable(beta);
    let a = r0_jet(k, b, h);
    let (bm, bp) = r1_jet(k, b, h);
    (a.c, bm.c, bp.c)
}

/// ℓ-th Taylor coefficient in β of the order-`j` multipliers at output `k`.
pub fn beta_derivative(j: usize, ell: usize, k: i32, beta: f64, h: f64, tables: &ExpansionTables) -> Result<MultiplierCoeffs> {
    if j > 3 {
        return Err(Error::Domain(format!("order {j} outside 0..=3")));
    }
    let t = MultiplierTable::taylor(ell, beta, h, tables, k, k)?;
    let full = t.rows[0];
    let mut out = MultiplierCoeffs { k, ..Default::default() };
    for &s in shifts(j) {
        out.set(j, s, full.coeff(j, s));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dispersion::DepthContext;

    fn setup(h: f64) -> (DepthContext, ExpansionTables) {
        let c = DepthContext::new(h).unwrap();
        (c, ExpansionTables::from_context(&c))
    }

    #[test]
    fn r0_limits() {
        for k in -3..=3 {
            let want = ((k * k) as f64 + 0.7).sqrt();
            assert!((r0_coeff(k, 0.7, 50.0) - want).abs() < 1e-10);
        }
        assert!((r0_coeff(0, 1.0, 1.0) - 1f64.tanh()).abs() < 1e-15);
        assert!((r0_coeff(2, 1e-12, 1.0) - 2.0 * 2f64.tanh()).abs() < 1e-8);
        assert!(r0_coeff(0, 1e-3, 0.1) >= 0.0);
    }

    #[test]
    fn r1_mirror_and_deep_limit() {
        let (c, _) = setup(1.0);
        for k in -5..=5 {
            let (bm, _) = r1_coeffs(-k, c.beta_star, 1.0);
            let (_, bp) = r1_coeffs(k, c.beta_star, 1.0);
            assert!((bm - bp).abs() < 1e-13);
            let (a, b) = r1_coeffs(k, 1.3, 50.0);
            let (la, lb) = r1_deep_limits(k, 1.3);
            assert!((a - la).abs() < 1e-8 && (b - lb).abs() < 1e-8);
        }
    }

    #[test]
    fn cascade_first_order_matches_closed_form() {
        for h in [0.3, 1.0, 3.0] {
            let (c, t) = setup(h);
            let table = MultiplierTable::build_with(c.beta_star, h, &t, -6, 6, FirstOrder::Cascade).unwrap();
            for row in &table.rows {
                let (bm, bp) = r1_coeffs(row.k, c.beta_star, h);
                assert!((row.bm1 - bm).abs() < 1e-10, "h={h} k={} {} vs {bm}", row.k, row.bm1);
                assert!((row.bp1 - bp).abs() < 1e-10, "h={h} k={} {} vs {bp}", row.k, row.bp1);
            }
        }
    }

    #[test]
    fn cascade_profiles_solve_their_problems() {
        for h in [0.5, 2.0] {
            let (c, t) = setup(h);
            for j in 1..=3 {
                for k in [-2, 1, 3] {
                    let (profiles, _) = cascade_solve(j, k, c.beta_star, h, &t).unwrap();
                    for p in profiles {
                        let (r, top, bot) = p.check(100);
                        let scale = 1.0 + p.forcing.max_abs_amplitude();
                        assert!(r < 1e-9 * scale && top < 1e-10 && bot < 1e-10, "h={h} j={j} k={k}: {r} {top} {bot}");
                    }
                }
            }
        }
    }

    #[test]
    fn second_order_shift_structure() {
        let (c, t) = setup(1.0);
        let jac = JacobianSeries::new(1.0, &t);
        let cas = Cascade::solve(0, c.beta_star, t.h2, &jac, 2).unwrap();
        let outs: Vec<i32> = cas.orders[2].keys().copied().collect();
        assert_eq!(outs, vec![-2, 0, 2]);
    }

    #[test]
    fn mirror_symmetry_all_orders() {
        for h in [0.4, 1.5] {
            let (c, t) = setup(h);
            let table = MultiplierTable::build(c.beta_star, h, &t, -6, 6).unwrap();
            for k in -6..=6 {
                let a = table.row(k).unwrap();
                let b = table.row(-k).unwrap();
                for j in 0..=3 {
                    for &s in shifts(j) {
                        let (x, y) = (a.coeff(j, s), b.coeff(j, -s));
                        assert!((x - y).abs() < 1e-10 * (1.0 + x.abs()), "h={h} k={k} j={j} s={s}: {x} {y}");
                    }
                }
            }
        }
    }

    #[test]
    fn beta_derivatives() {
        let (c, t) = setup(1.0);
        let d = beta_derivative(0, 1, 1, c.beta_star, 1.0, &t).unwrap();
        assert!((d.a0 - c.tau1).abs() < 1e-12);
        let b = c.beta_star;
        let s = 1e-3;
        let fd2 = (r0_coeff(1, b + s, 1.0) - 2.0 * r0_coeff(1, b, 1.0) + r0_coeff(1, b - s, 1.0)) / (s * s) / 2.0;
        let d2 = beta_derivative(0, 2, 1, b, 1.0, &t).unwrap();
        assert!((d2.a0 - fd2).abs() < 1e-7);
        let d1 = beta_derivative(1, 1, -2, b, 1.0, &t).unwrap();
        let s = 1e-5;
        let (m1, p1) = r1_coeffs(-2, b + s, 1.0);
        let (m0, p0) = r1_coeffs(-2, b - s, 1.0);
        assert!((d1.bm1 - (m1 - m0) / (2.0 * s)).abs() < 1e-8);
        assert!((d1.bp1 - (p1 - p0) / (2.0 * s)).abs() < 1e-8);
    }

    #[test]
    fn fd_derivative_of_second_order_is_consistent() {
        let (c, t) = setup(1.0);
        let b = c.beta_star;
        let d = beta_derivative(2, 1, 1, b, 1.0, &t).unwrap();
        let s = 1e-3;
        let up = MultiplierTable::build(b + s, 1.0, &t, 1, 1).unwrap().rows[0].c0;
        let dn = MultiplierTable::build(b - s, 1.0, &t, 1, 1).unwrap().rows[0].c0;
        assert!((d.c0 - (up - dn) / (2.0 * s)).abs() < 1e-6 * (1.0 + d.c0.abs()));
    }
}
