//! Spectral solver for the flattened strip problem `ΔΘ − βJΘ = 0`.
//!
//! Fourier modes in `x`, Chebyshev collocation in `z ∈ [−h_ε, 0]`, Dirichlet data
//! `f` on top and a homogeneous Neumann condition at the bottom. The Jacobian is
//! the conformal map built from the third-order `ζ` amplitudes, analytic in `ε`,
//! so the solver accepts complex amplitudes and the `ε^j` coefficients of `G_{ε,β}`
//! can be read off a Cauchy integral.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;

use super::{shifts, MultiplierCoeffs};
use crate::error::{Error, Result};
use crate::stokes::ExpansionTables;

/// Fourier coefficients of a scalar periodic function.
pub type ScalarModes = BTreeMap<i32, Complex64>;

pub const DEFAULT_NZ: usize = 64;
pub const DEFAULT_NX: usize = 32;
const MAX_SWEEPS: usize = 400;
const SWEEP_TOL: f64 = 1e-15;
/// Relative update below which a stalled sweep counts as converged (roundoff floor).
const FLOOR_TOL: f64 = 1e-11;
const CAUCHY_RADIUS: f64 = 0.04;
const CAUCHY_NODES: usize = 12;

/// Chebyshev points `t_j = cos(πj/n)` and the first-derivative matrix.
pub fn chebyshev(n: usize) -> (Vec<f64>, DMatrix<f64>) {
    let t: Vec<f64> = (0..=n).map(|j| (PI * j as f64 / n as f64).cos()).collect();
    let c = |j: usize| if j == 0 || j == n { 2.0 } else { 1.0 } * if j % 2 == 0 { 1.0 } else { -1.0 };
    let mut d = DMatrix::<f64>::zeros(n + 1, n + 1);
    for i in 0..=n {
        for j in 0..=n {
            if i != j {
                d[(i, j)] = c(i) / c(j) / (t[i] - t[j]);
            }
        }
    }
    for i in 0..=n {
        let s: f64 = (0..=n).filter(|&j| j != i).map(|j| d[(i, j)]).sum();
        d[(i, i)] = -s;
    }
    (t, d)
}

/// Fourier coefficients `Ĵ_m(z)` of the conformal Jacobian at one depth node.
fn jacobian_modes(t: &ExpansionTables, eps: Complex64, h_eps: Complex64, z: Complex64) -> [Complex64; 13] {
    let zm = [
        eps * t.zeta11 + eps.powi(3) * t.zeta31,
        eps * eps * t.zeta22,
        eps.powi(3) * t.zeta33,
    ];
    let mut alpha = [Complex64::new(0.0, 0.0); 7];
    let mut gamma = [Complex64::new(0.0, 0.0); 7];
    alpha[3] = Complex64::new(1.0, 0.0);
    for (i, zi) in zm.iter().enumerate() {
        let m = (i + 1) as f64;
        let a = m * zi * (m * (z + h_eps)).cosh() / (m * h_eps).cosh();
        let b = m * zi * (m * (z + h_eps)).sinh() / (m * h_eps).cosh();
        alpha[3 + i + 1] += 0.5 * a;
        alpha[3 - i - 1] += 0.5 * a;
        gamma[3 + i + 1] += Complex64::new(0.0, -0.5) * b;
        gamma[3 - i - 1] += Complex64::new(0.0, 0.5) * b;
    }
    let mut out = [Complex64::new(0.0, 0.0); 13];
    for p in 0..7 {
        for q in 0..7 {
            out[p + q] += alpha[p] * alpha[q] + gamma[p] * gamma[q];
        }
    }
    out
}

/// Applies `G_{ε,β}` to `f` with modes `−nx/2..=nx/2` and `nz` Chebyshev intervals.
pub fn elliptic_oracle_g(
    eps: Complex64,
    beta: f64,
    h: f64,
    tables: &ExpansionTables,
    f_hat: &ScalarModes,
    nx: usize,
    nz: usize,
) -> Result<ScalarModes> {
    if eps.norm() > 0.05 + 1e-12 {
        return Err(Error::Range { eps: eps.norm(), guard: 0.05 });
    }
    if nx < 8 || nz < 8 {
        return Err(Error::Domain(format!("resolution nx={nx}, nz={nz} too small")));
    }
    let kmax = (nx / 2) as i32;
    if f_hat.keys().any(|k| k.abs() > kmax) {
        return Err(Error::Domain("input modes exceed the x resolution".into()));
    }
    let nk = (2 * kmax + 1) as usize;
    let h_eps = h + tables.h2 * eps * eps;
    let (t, d) = chebyshev(nz);
    let d = d.map(|v| Complex64::new(v, 0.0));
    let scale = Complex64::new(2.0, 0.0) / h_eps;
    let d1 = &d * scale;
    let d2 = &d1 * &d1;
    let z: Vec<Complex64> = t.iter().map(|&ti| h_eps * (ti - 1.0) * 0.5).collect();
    let jm: Vec<[Complex64; 13]> = z.iter().map(|&zi| jacobian_modes(tables, eps, h_eps, zi)).collect();

    // Per-mode operator θ'' − (k²+β)θ with the boundary rows replaced.
    let solvers: Vec<_> = (-kmax..=kmax)
        .map(|k| {
            let kap2 = (k * k) as f64 + beta;
            let mut m = d2.clone();
            for i in 0..=nz {
                m[(i, i)] -= kap2;
            }
            for j in 0..=nz {
                m[(0, j)] = if j == 0 { Complex64::new(1.0, 0.0) } else { Complex64::new(0.0, 0.0) };
                m[(nz, j)] = d1[(nz, j)];
            }
            m.lu()
        })
        .collect();
    let mut theta: Vec<DVector<Complex64>> = vec![DVector::zeros(nz + 1); nk];
    let mut last = f64::INFINITY;
    for sweep in 0..MAX_SWEEPS {
        let mut next = Vec::with_capacity(nk);
        for (idx, k) in (-kmax..=kmax).enumerate() {
            let mut rhs = DVector::<Complex64>::zeros(nz + 1);
            for i in 1..nz {
                let mut acc = Complex64::new(0.0, 0.0);
                for m in -6..=6i32 {
                    let src = k - m;
                    if src.abs() > kmax {
                        continue;
                    }
                    let mut c = jm[i][(m + 6) as usize];
                    if m == 0 {
                        c -= 1.0;
                    }
                    acc += c * theta[(src + kmax) as usize][i];
                }
                rhs[i] = beta * acc;
            }
            rhs[0] = f_hat.get(&k).copied().unwrap_or_default();
            let sol = solvers[idx].solve(&rhs).ok_or(Error::Resolution { pivot: 0.0 })?;
            next.push(sol);
        }
        let mut change: f64 = 0.0;
        let mut size: f64 = 0.0;
        for (a, b) in next.iter().zip(&theta) {
            change = change.max((a - b).camax());
            size = size.max(a.camax());
        }
        theta = next;
        if !change.is_finite() {
            return Err(Error::Resolution { pivot: change });
        }
        let rel = change / size.max(1e-300);
        if rel <= SWEEP_TOL || (rel <= FLOOR_TOL && change >= 0.5 * last) {
            let mut out = ScalarModes::new();
            for (idx, k) in (-kmax..=kmax).enumerate() {
                let v: Complex64 = (0..=nz).map(|j| d1[(0, j)] * theta[idx][j]).sum();
                out.insert(k, v);
            }
            return Ok(out);
        }
        if sweep > 20 && change > last && rel > FLOOR_TOL {
            return Err(Error::Convergence { iterations: sweep, last_update: change });
        }
        last = change;
    }
    Err(Error::Convergence { iterations: MAX_SWEEPS, last_update: last })
}

/// Taylor coefficients in `ε` of `G_{ε,β} e^{ikx}`: `out[j][s]` is the coefficient of
/// `e^{i(k+s)x}` at order `ε^j`, for `j ≤ 3`.
pub fn oracle_taylor(
    k: i32,
    beta: f64,
    h: f64,
    tables: &ExpansionTables,
    nx: usize,
    nz: usize,
) -> Result<Vec<BTreeMap<i32, Complex64>>> {
    let f = ScalarModes::from([(k, Complex64::new(1.0, 0.0))]);
    let samples: Vec<(Complex64, ScalarModes)> = (0..CAUCHY_NODES)
        .into_par_iter()
        .map(|n| {
            let w = Complex64::from_polar(1.0, 2.0 * PI * n as f64 / CAUCHY_NODES as f64);
            let g = elliptic_oracle_g(w * CAUCHY_RADIUS, beta, h, tables, &f, nx, nz)?;
            Ok((w, g))
        })
        .collect::<Result<_>>()?;
    let mut out = vec![BTreeMap::new(); 4];
    for (j, level) in out.iter_mut().enumerate() {
        for s in -3..=3 {
            let mut acc = Complex64::new(0.0, 0.0);
            for (w, g) in &samples {
                acc += g.get(&(k + s)).copied().unwrap_or_default() * w.powi(-(j as i32));
            }
            level.insert(s, acc / (CAUCHY_NODES as f64 * CAUCHY_RADIUS.powi(j as i32)));
        }
    }
    Ok(out)
}

/// Order-`j` responses of the unit mode `e^{ik x}` extracted from the oracle, in
/// the input-column convention: `coeff(j, s)` is the coefficient of `e^{i(k−s)x}`.
/// Use [`transpose_columns`] over neighbouring inputs to form output rows.
pub fn extract_rj_from_oracle(j: usize, k: i32, beta: f64, h: f64, tables: &ExpansionTables) -> Result<BTreeMap<i32, f64>> {
    if j > 3 {
        return Err(Error::Domain(format!("order {j} outside 0..=3")));
    }
    let taylor = oracle_taylor(k, beta, h, tables, DEFAULT_NX, DEFAULT_NZ)?;
    Ok(shifts(j).iter().map(|&t| (t, taylor[j][&t].re)).collect())
}

/// Output row at `k` assembled from the oracle responses of inputs `k + s`.
pub fn oracle_row(k: i32, beta: f64, h: f64, tables: &ExpansionTables) -> Result<MultiplierCoeffs> {
    Ok(oracle_rows(k, k, beta, h, tables)?.remove(0))
}

/// Output rows `kmin..=kmax`, sharing the oracle solves between neighbouring rows.
pub fn oracle_rows(kmin: i32, kmax: i32, beta: f64, h: f64, tables: &ExpansionTables) -> Result<Vec<MultiplierCoeffs>> {
    oracle_rows_with(kmin, kmax, beta, h, tables, DEFAULT_NX, DEFAULT_NZ)
}

pub fn oracle_rows_with(
    kmin: i32,
    kmax: i32,
    beta: f64,
    h: f64,
    tables: &ExpansionTables,
    nx: usize,
    nz: usize,
) -> Result<Vec<MultiplierCoeffs>> {
    let inputs: BTreeMap<i32, Vec<BTreeMap<i32, Complex64>>> = (kmin - 3..=kmax + 3)
        .map(|k_in| Ok((k_in, oracle_taylor(k_in, beta, h, tables, nx, nz)?)))
        .collect::<Result<_>>()?;
    Ok((kmin..=kmax)
        .map(|k| {
            let mut row = MultiplierCoeffs { k, ..Default::default() };
            for s in -3..=3 {
                let taylor = &inputs[&(k + s)];
                for j in 0..=3 {
                    if shifts(j).contains(&s) {
                        row.set(j, s, taylor[j][&(-s)].re);
                    }
                }
            }
            row
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dispersion::DepthContext;
    use crate::dno::{r0_coeff, r1_coeffs};

    fn setup(h: f64) -> (DepthContext, ExpansionTables) {
        let c = DepthContext::new(h).unwrap();
        (c, ExpansionTables::from_context(&c))
    }

    #[test]
    fn chebyshev_derivative_is_exact_on_polynomials() {
        let (t, d) = chebyshev(10);
        let f = DVector::from_iterator(11, t.iter().map(|x| x.powi(5)));
        let df = &d * f;
        for (i, x) in t.iter().enumerate() {
            assert!((df[i] - 5.0 * x.powi(4)).abs() < 1e-12);
        }
    }

    #[test]
    fn flat_surface_reproduces_symbol() {
        let (c, t) = setup(1.0);
        let f: ScalarModes = (-4..=4).map(|k| (k, Complex64::new(1.0 + k as f64, 0.3))).collect();
        let g = elliptic_oracle_g(Complex64::new(0.0, 0.0), c.beta_star, 1.0, &t, &f, 32, 48).unwrap();
        for (k, v) in &f {
            assert!((g[k] - v * r0_coeff(*k, c.beta_star, 1.0)).norm() < 1e-9);
        }
    }

    #[test]
    fn reflection_symmetry() {
        let (c, t) = setup(1.0);
        let f: ScalarModes = [(-2, Complex64::new(0.4, 0.1)), (1, Complex64::new(-0.3, 0.7)), (3, Complex64::new(0.2, 0.0))].into();
        // f̃(x) = conj(f(−x)) has f̃̂(k) = conj(f̂(k)).
        let fr: ScalarModes = f.iter().map(|(k, v)| (*k, v.conj())).collect();
        let eps = Complex64::new(0.03, 0.0);
        let g = elliptic_oracle_g(eps, c.beta_star, 1.0, &t, &f, 32, 48).unwrap();
        let gr = elliptic_oracle_g(eps, c.beta_star, 1.0, &t, &fr, 32, 48).unwrap();
        for (k, v) in &g {
            assert!((gr[k] - v.conj()).norm() < 1e-11);
        }
    }

    #[test]
    fn self_adjoint() {
        let (c, t) = setup(1.5);
        let f: ScalarModes = [(-1, Complex64::new(0.4, 0.1)), (0, Complex64::new(0.5, 0.0)), (2, Complex64::new(-0.3, 0.7))].into();
        let g: ScalarModes = [(-2, Complex64::new(0.1, -0.2)), (1, Complex64::new(0.6, 0.3)), (3, Complex64::new(0.2, 0.5))].into();
        let eps = Complex64::new(0.04, 0.0);
        let gf = elliptic_oracle_g(eps, c.beta_star, 1.5, &t, &f, 32, 48).unwrap();
        let gg = elliptic_oracle_g(eps, c.beta_star, 1.5, &t, &g, 32, 48).unwrap();
        let ip = |a: &ScalarModes, b: &ScalarModes| -> Complex64 {
            a.iter().map(|(k, v)| v * b.get(k).copied().unwrap_or_default().conj()).sum()
        };
        let (l, r) = (ip(&gf, &g), ip(&f, &gg));
        assert!((l - r).norm() < 1e-8, "{l} vs {r}");
    }

    #[test]
    fn extraction_recovers_closed_forms() {
        let (c, t) = setup(1.0);
        let tay = oracle_taylor(1, c.beta_star, 1.0, &t, 32, 48).unwrap();
        assert!((tay[0][&0].re - r0_coeff(1, c.beta_star, 1.0)).abs() < 1e-9);
        // Input k = 1 feeds output 2 with B^{−1}_2 and output 0 with B^{1}_0.
        let (bm2, _) = r1_coeffs(2, c.beta_star, 1.0);
        let (_, bp0) = r1_coeffs(0, c.beta_star, 1.0);
        assert!((tay[1][&1].re - bm2).abs() < 1e-7);
        assert!((tay[1][&-1].re - bp0).abs() < 1e-7);
    }

    #[test]
    fn cascade_agrees_with_oracle() {
        for h in [1.0] {
            let (c, t) = setup(h);
            let table = crate::dno::MultiplierTable::build(c.beta_star, h, &t, -2, 2).unwrap();
            let rows = oracle_rows(-2, 2, c.beta_star, h, &t).unwrap();
            for (k, o) in (-2..=2).zip(&rows) {
                let r = table.row(k).unwrap();
                for j in 2..=3 {
                    for &s in shifts(j) {
                        let (a, b) = (o.coeff(j, s), r.coeff(j, s));
                        assert!((a - b).abs() < 1e-6, "h={h} k={k} j={j} s={s}: oracle {a} cascade {b}");
                    }
                }
            }
        }
    }

    #[test]
    fn series_remainder_is_fourth_order() {
        let h = 1.0;
        let (c, t) = setup(h);
        let table = crate::dno::MultiplierTable::build(c.beta_star, h, &t, -3, 5).unwrap();
        let f = ScalarModes::from([(1, Complex64::new(1.0, 0.0))]);
        let err = |eps: f64| {
            let g = elliptic_oracle_g(Complex64::new(eps, 0.0), c.beta_star, h, &t, &f, 32, 48).unwrap();
            let mut e: f64 = 0.0;
            for s in -3..=3 {
                let series: f64 = (0..=3).map(|j| eps.powi(j as i32) * table.response(j, 1, s)).sum();
                e = e.max((g[&(1 + s)] - series).norm());
            }
            e
        };
        let ratio = err(0.02) / err(0.01);
        assert!((ratio / 16.0 - 1.0).abs() < 0.2, "ratio {ratio}");
    }
}
