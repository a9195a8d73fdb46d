//! Direct spectral computation on the truncated Fourier discretisation of
//! `L_{ε,β} = J H_{ε,β}`, independent of the Kato reduction.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::dispersion::{lambda0, Branch, DepthContext};
use crate::dno::oracle::{elliptic_oracle_g, ScalarModes, DEFAULT_NZ};
use crate::dno::{shifts, MultiplierTable};
use crate::error::{Error, Result};
use crate::isola::{asymptotic_eigenvalues, detuning, kato_at, IsolaGeometry};
use crate::kato::KatoMatrix;
use crate::stokes::ExpansionTables;

pub const DEFAULT_K: usize = 20;
pub const MIN_K: usize = 16;
const MAX_EPS: f64 = 0.05;
/// Real parts below this fraction of the isola's real semi-axis count as zero.
pub const STABILITY_FLOOR: f64 = 1e-6;

/// Source of the Dirichlet–Neumann block.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GSource {
    /// `Σ_{j≤3} ε^j R_{j,β}` from the cascade.
    Series,
    /// The elliptic solve applied to every basis mode.
    Oracle,
}

/// Dense matrix of `L_{ε,β}` on modes `−K..=K`, unknowns interleaved as `(η̂_k, ψ̂_k)`.
#[derive(Debug, Clone)]
pub struct TruncatedOperator {
    pub matrix: DMatrix<Complex64>,
    pub k: usize,
    pub eps: f64,
    pub beta: f64,
    pub h: f64,
}

impl TruncatedOperator {
    pub fn index(&self, mode: i32, comp: usize) -> usize {
        2 * (mode + self.k as i32) as usize + comp
    }

    pub fn dim(&self) -> usize {
        2 * (2 * self.k + 1)
    }
}

fn cosines(j: usize, t: &ExpansionTables) -> ([(i32, f64); 2], [(i32, f64); 2]) {
    match j {
        0 => ([(0, 1.0), (0, 0.0)], [(0, t.c0), (0, 0.0)]),
        1 => ([(1, t.r11), (0, 0.0)], [(1, t.p11), (0, 0.0)]),
        2 => ([(0, t.r20), (2, t.r22)], [(0, t.p20), (2, t.p22)]),
        _ => ([(1, t.r31), (3, t.r33)], [(1, t.p31), (3, t.p33)]),
    }
}

/// Fourier coefficient of `e^{imx}` in a sum of cosines with amplitude `a` at order `ε^j`.
fn band(eps: f64, t: &ExpansionTables, pick: impl Fn(&([(i32, f64); 2], [(i32, f64); 2])) -> [(i32, f64); 2]) -> Vec<(i32, f64)> {
    let mut out = Vec::new();
    for j in 0..=3 {
        let e = eps.powi(j as i32);
        for (m, a) in pick(&cosines(j, t)) {
            if a == 0.0 {
                continue;
            }
            if m == 0 {
                out.push((0, e * a));
            } else {
                out.push((m, 0.5 * e * a));
                out.push((-m, 0.5 * e * a));
            }
        }
    }
    out
}

/// Assembles the truncated operator at amplitude `eps` and transverse parameter `beta`.
pub fn build_operator(eps: f64, beta: f64, h: f64, k: usize, g_source: GSource) -> Result<TruncatedOperator> {
    if eps.abs() > MAX_EPS {
        return Err(Error::Range { eps, guard: MAX_EPS });
    }
    if k < MIN_K {
        return Err(Error::Domain(format!("cutoff K = {k} below {MIN_K}")));
    }
    if !(beta > 0.0 && h > 0.0) {
        return Err(Error::Domain(format!("operator needs beta > 0 and h > 0 (beta={beta}, h={h})")));
    }
    let ctx = DepthContext::new(h)?;
    let tables = ExpansionTables::from_context(&ctx);
    let ki = k as i32;
    let n = 2 * (2 * k + 1);
    let mut hm = DMatrix::<Complex64>::zeros(n, n);
    let idx = |mode: i32, comp: usize| 2 * (mode + ki) as usize + comp;
    let inside = |mode: i32| mode.abs() <= ki;
    let i = Complex64::new(0.0, 1.0);

    // H₁₁ = (1+q)/ζ′ multiplication, H₁₂ = −p∂ₓ, H₂₁ = ∂ₓ(p·).
    let r = band(eps, &tables, |c| c.0);
    let p = band(eps, &tables, |c| c.1);
    for k_in in -ki..=ki {
        for &(m, a) in &r {
            let k_out = k_in + m;
            if inside(k_out) {
                hm[(idx(k_out, 0), idx(k_in, 0))] += a;
            }
        }
        for &(m, a) in &p {
            let k_out = k_in + m;
            if inside(k_out) {
                hm[(idx(k_out, 0), idx(k_in, 1))] += -i * a * k_in as f64;
                hm[(idx(k_out, 1), idx(k_in, 0))] += i * a * k_out as f64;
            }
        }
    }

    match g_source {
        GSource::Series => {
            let mt = MultiplierTable::build(beta, h, &tables, -ki - 3, ki + 3)?;
            for k_out in -ki..=ki {
                let row = mt.row(k_out).expect("covered");
                for j in 0..=3usize {
                    let e = eps.powi(j as i32);
                    for &s in shifts(j) {
                        let k_in = k_out + s;
                        if inside(k_in) {
                            hm[(idx(k_out, 1), idx(k_in, 1))] += e * row.coeff(j, s);
                        }
                    }
                }
            }
        }
        GSource::Oracle => {
            let nx = 2 * (k + 8);
            let cols: Vec<ScalarModes> = (-ki..=ki)
                .into_par_iter()
                .map(|k_in| {
                    let f = ScalarModes::from([(k_in, Complex64::new(1.0, 0.0))]);
                    elliptic_oracle_g(Complex64::new(eps, 0.0), beta, h, &tables, &f, nx, DEFAULT_NZ)
                })
                .collect::<Result<_>>()?;
            for (col, k_in) in cols.iter().zip(-ki..=ki) {
                for (&k_out, &v) in col {
                    if inside(k_out) {
                        hm[(idx(k_out, 1), idx(k_in, 1))] += v;
                    }
                }
            }
        }
    }

    // L = J H: first row block is H's second, second is −H's first.
    let mut l = DMatrix::<Complex64>::zeros(n, n);
    for mode in -ki..=ki {
        let (a, b) = (idx(mode, 0), idx(mode, 1));
        l.row_mut(a).copy_from(&hm.row(b));
        l.row_mut(b).copy_from(&(-hm.row(a)));
    }
    Ok(TruncatedOperator { matrix: l, k, eps, beta, h })
}

/// Full spectrum of the truncated operator.
pub fn spectrum(op: &TruncatedOperator) -> Result<Vec<Complex64>> {
    let schur = op
        .matrix
        .clone()
        .try_schur(1e-15, 10_000)
        .ok_or_else(|| Error::Eigen(format!("Schur iteration did not converge for K = {}", op.k)))?;
    let ev = schur.eigenvalues().ok_or_else(|| Error::Eigen("Schur form not triangular".into()))?;
    Ok(ev.iter().copied().collect())
}

/// Eigenvalues within `radius` of `center`, nearest first.
pub fn spectrum_near(op: &TruncatedOperator, center: Complex64, radius: f64) -> Result<Vec<Complex64>> {
    let mut near: Vec<Complex64> = spectrum(op)?.into_iter().filter(|z| (z - center).norm() <= radius).collect();
    near.sort_by(|a, b| (a - center).norm().total_cmp(&(b - center).norm()));
    Ok(near)
}

/// Largest distance from an eigenvalue `λ` to the nearest eigenvalue at `−λ̄`.
pub fn hamiltonian_symmetry_defect(ev: &[Complex64]) -> f64 {
    ev.iter()
        .map(|z| {
            let mirror = -z.conj();
            ev.iter().map(|w| (w - mirror).norm()).fold(f64::INFINITY, f64::min)
        })
        .fold(0.0, f64::max)
}

/// Unperturbed spectrum `{λ⁰_±(k, β) : |k| ≤ K}`.
pub fn unperturbed_spectrum(beta: f64, h: f64, k: usize) -> Result<Vec<Complex64>> {
    let ki = k as i32;
    let mut out = Vec::with_capacity(2 * (2 * k + 1));
    for mode in -ki..=ki {
        for b in [Branch::Plus, Branch::Minus] {
            out.push(lambda0(mode, beta, h, b)?);
        }
    }
    Ok(out)
}

/// Predicted and computed eigenvalue pair at one detuning. `distance` is taken at
/// equal `θ`; `curve_distance` is the distance of the computed pair to the ellipse.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComparisonRow {
    pub theta: f64,
    pub predicted: [Complex64; 2],
    pub numerical: [Complex64; 2],
    pub distance: f64,
    pub curve_distance: f64,
    /// Whether the computed pair is off the imaginary axis.
    pub unstable: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub h: f64,
    pub eps: f64,
    pub k: usize,
    pub rows: Vec<ComparisonRow>,
    /// Largest distance from a computed unstable eigenvalue to the predicted isola.
    pub max_distance: f64,
    /// Largest equal-`θ` distance.
    pub max_pointwise: f64,
}

/// Euclidean distance from `z` to the ellipse of `g`.
pub fn ellipse_distance(g: &IsolaGeometry, z: Complex64) -> f64 {
    let n = 4096;
    let d = |t: f64| (g.point(t) - z).norm();
    let step = std::f64::consts::TAU / n as f64;
    let best = (0..n).map(|i| i as f64 * step).min_by(|a, b| d(*a).total_cmp(&d(*b))).unwrap_or(0.0);
    let (mut lo, mut hi) = (best - step, best + step);
    for _ in 0..100 {
        let m1 = lo + (hi - lo) / 3.0;
        let m2 = hi - (hi - lo) / 3.0;
        if d(m1) < d(m2) {
            hi = m2;
        } else {
            lo = m1;
        }
    }
    d(0.5 * (lo + hi))
}

/// Pairs predictions with the two computed eigenvalues by total nearest distance.
pub fn match_pair(predicted: [Complex64; 2], numerical: [Complex64; 2]) -> Result<([Complex64; 2], f64)> {
    let direct = (predicted[0] - numerical[0]).norm().max((predicted[1] - numerical[1]).norm());
    let swapped = (predicted[0] - numerical[1]).norm().max((predicted[1] - numerical[0]).norm());
    let scale = direct.max(swapped);
    if (predicted[0] - predicted[1]).norm() > 0.0 && (direct - swapped).abs() <= 1e-12 * scale && scale > 0.0 && direct != swapped {
        return Err(Error::Pairing { d1: direct, d2: swapped });
    }
    if direct <= swapped {
        Ok((numerical, direct))
    } else {
        Ok(([numerical[1], numerical[0]], swapped))
    }
}

/// Two eigenvalues of the truncated operator nearest `iσ` at `β* + δ(ε, θ)`.
pub fn near_pair(ctx: &DepthContext, km: &KatoMatrix, eps: f64, theta: f64, k: usize, g: GSource) -> Result<[Complex64; 2]> {
    let beta = ctx.beta_star + detuning(km, eps, theta);
    let op = build_operator(eps, beta, ctx.h, k, g)?;
    let center = Complex64::new(0.0, ctx.sigma);
    let near = spectrum_near(&op, center, 0.5 * ctx.spectrum_gap(k as i32))?;
    if near.len() < 2 {
        return Err(Error::Eigen(format!("found {} eigenvalues near iσ, expected 2", near.len())));
    }
    Ok([near[0], near[1]])
}

/// θ samples at the midpoints of `n` cells covering `(−κ₁, κ₁)`.
pub fn theta_grid(kappa1: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| kappa1 * (-1.0 + (2 * i + 1) as f64 / n as f64)).collect()
}

/// Distance between the third-order isola and the computed eigenvalues over `n_theta` samples.
pub fn compare_isola(h: f64, eps: f64, n_theta: usize, k: usize) -> Result<Comparison> {
    let ctx = DepthContext::new(h)?;
    let km = kato_at(h)?;
    compare_with(&ctx, &km, eps, &theta_grid(km.kappa1(), n_theta), k, GSource::Series)
}

pub fn compare_with(ctx: &DepthContext, km: &KatoMatrix, eps: f64, thetas: &[f64], k: usize, g: GSource) -> Result<Comparison> {
    let geometry = IsolaGeometry::new(km, eps);
    let rows: Vec<ComparisonRow> = thetas
        .par_iter()
        .map(|&theta| {
            let (p, m) = asymptotic_eigenvalues(km, eps, theta);
            let pair = near_pair(ctx, km, eps, theta, k, g)?;
            let (numerical, distance) = match_pair([p, m], pair)?;
            let curve_distance = ellipse_distance(&geometry, numerical[0]).max(ellipse_distance(&geometry, numerical[1]));
            let unstable = numerical.iter().any(|z| z.re.abs() > STABILITY_FLOOR * geometry.semi_axis_real);
            Ok(ComparisonRow { theta, predicted: [p, m], numerical, distance, curve_distance, unstable })
        })
        .collect::<Result<_>>()?;
    let max_distance = rows.iter().filter(|r| r.unstable).map(|r| r.curve_distance).fold(0.0, f64::max);
    let max_pointwise = rows.iter().map(|r| r.distance).fold(0.0, f64::max);
    Ok(Comparison { h: ctx.h, eps, k, rows, max_distance, max_pointwise })
}

/// Orthonormal basis of the numerical null space of `M − λI` (singular values below `tol`).
pub fn eigenspace(op: &TruncatedOperator, lambda: Complex64, tol: f64) -> Vec<nalgebra::DVector<Complex64>> {
    let n = op.dim();
    let shifted = &op.matrix - DMatrix::<Complex64>::identity(n, n) * lambda;
    let svd = shifted.svd(false, true);
    let v_t = svd.v_t.expect("requested");
    svd.singular_values
        .iter()
        .enumerate()
        .filter(|(_, s)| **s < tol)
        .map(|(i, _)| v_t.row(i).adjoint())
        .collect()
}
