//! Instability predictions from the reduced 2×2 matrix: eigenvalue pair, the
//! isola ellipse, depth scans and the critical depth where `b₃₀` vanishes.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dispersion::{solve_beta_star, DepthContext};
use crate::error::{Error, Result};
use crate::kato::{assemble_matrix_coeffs, KatoMatrix};
use crate::stokes::ExpansionTables;

/// Below this `|b₃₀|` the cubic isola is indistinguishable from pipeline noise.
pub const DEGENERACY_THRESHOLD: f64 = 1e-8;

/// `λ±(ε, δ) = i(σ + ½(A+C)) ± ½√Δ` with `Δ = −(A−C)² + 4B²`.
pub fn eigenvalues(km: &KatoMatrix, eps: f64, delta: f64) -> (Complex64, Complex64) {
    let (a, b, c) = km.abc(eps, delta);
    let center = Complex64::new(0.0, km.sigma + 0.5 * (a + c));
    let disc = discriminant(a, b, c);
    let root = if disc >= 0.0 { Complex64::new(0.5 * disc.sqrt(), 0.0) } else { Complex64::new(0.0, 0.5 * (-disc).sqrt()) };
    (center + root, center - root)
}

pub fn discriminant(a: f64, b: f64, c: f64) -> f64 {
    -(a - c).powi(2) + 4.0 * b * b
}

/// `det(L − λ)` for the reduced matrix at `(ε, δ)`.
pub fn characteristic(km: &KatoMatrix, eps: f64, delta: f64, lambda: Complex64) -> Complex64 {
    let (a, b, c) = km.abc(eps, delta);
    let i = Complex64::new(0.0, 1.0);
    let mu = lambda - i * km.sigma;
    mu * mu - i * (a + c) * mu - a * c - b * b
}

/// `δ = κ₀ε² + θε³`.
pub fn detuning(km: &KatoMatrix, eps: f64, theta: f64) -> f64 {
    km.kappa0() * eps * eps + theta * eps.powi(3)
}

/// Third-order prediction along `δ = κ₀ε² + θε³`, with every `O(ε⁴)` term dropped.
pub fn asymptotic_eigenvalues(km: &KatoMatrix, eps: f64, theta: f64) -> (Complex64, Complex64) {
    let d = km.a01 - km.c01;
    let e3 = eps.abs().powi(3);
    let im = km.sigma + (km.a01 * km.c20 - km.a20 * km.c01) / d * eps * eps + 0.5 * (km.a01 + km.c01) * theta * eps.powi(3);
    let disc = 4.0 * km.b30 * km.b30 - d * d * theta * theta;
    let root = if disc >= 0.0 { Complex64::new(0.5 * disc.sqrt() * e3, 0.0) } else { Complex64::new(0.0, 0.5 * (-disc).sqrt() * e3) };
    let center = Complex64::new(0.0, im);
    (center + root, center - root)
}

/// Leading-order ellipse traced by the unstable eigenvalues.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IsolaGeometry {
    pub center_imag: f64,
    pub semi_axis_real: f64,
    pub semi_axis_imag: f64,
    pub kappa0: f64,
    pub kappa1: f64,
    pub eps: f64,
}

impl IsolaGeometry {
    pub fn new(km: &KatoMatrix, eps: f64) -> Self {
        let d = km.a01 - km.c01;
        let e3 = eps.abs().powi(3);
        Self {
            center_imag: km.sigma + (km.a01 * km.c20 - km.a20 * km.c01) / d * eps * eps,
            semi_axis_real: km.b30.abs() * e3,
            semi_axis_imag: (km.b30 * (km.a01 + km.c01) / d).abs() * e3,
            kappa0: km.kappa0(),
            kappa1: km.kappa1(),
            eps,
        }
    }

    /// Left-hand side of the ellipse equation minus one.
    pub fn residual(&self, lambda: Complex64) -> f64 {
        let x = lambda.re / self.semi_axis_real;
        let y = (lambda.im - self.center_imag) / self.semi_axis_imag;
        x * x + y * y - 1.0
    }

    /// Point of the ellipse at parameter `t`, with `t = 0` on the positive real side.
    pub fn point(&self, t: f64) -> Complex64 {
        Complex64::new(self.semi_axis_real * t.cos(), self.center_imag + self.semi_axis_imag * t.sin())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IsolaSample {
    pub theta: f64,
    pub plus: Complex64,
    pub minus: Complex64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IsolaCurve {
    pub samples: Vec<IsolaSample>,
    pub geometry: IsolaGeometry,
}

/// Samples `λ±(ε, θ)` at `n` midpoints of `(−κ₁, κ₁)`.
pub fn isola_curve(km: &KatoMatrix, eps: f64, n_samples: usize) -> Result<IsolaCurve> {
    if km.b30.abs() < DEGENERACY_THRESHOLD {
        return Err(Error::Degenerate { b30: km.b30 });
    }
    if n_samples == 0 {
        return Err(Error::Domain("isola needs at least one sample".into()));
    }
    let k1 = km.kappa1();
    let samples = (0..n_samples)
        .map(|i| {
            let theta = k1 * (-1.0 + (2 * i + 1) as f64 / n_samples as f64);
            let (plus, minus) = eigenvalues(km, eps, detuning(km, eps, theta));
            IsolaSample { theta, plus, minus }
        })
        .collect();
    Ok(IsolaCurve { samples, geometry: IsolaGeometry::new(km, eps) })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScanQuantity {
    BetaStar,
    B30,
    Kappa0,
    Kappa1,
}

impl ScanQuantity {
    pub fn name(self) -> &'static str {
        match self {
            Self::BetaStar => "beta_star",
            Self::B30 => "b30",
            Self::Kappa0 => "kappa0",
            Self::Kappa1 => "kappa1",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "beta_star" => Ok(Self::BetaStar),
            "b30" => Ok(Self::B30),
            "kappa0" => Ok(Self::Kappa0),
            "kappa1" => Ok(Self::Kappa1),
            _ => Err(Error::Domain(format!("unknown scan quantity '{s}'"))),
        }
    }

    pub fn evaluate(self, h: f64) -> Result<f64> {
        if self == Self::BetaStar {
            return solve_beta_star(h, 1e-14);
        }
        let km = kato_at(h)?;
        Ok(match self {
            Self::B30 => km.b30,
            Self::Kappa0 => km.kappa0(),
            _ => km.kappa1(),
        })
    }
}

/// Full pipeline at depth `h`.
pub fn kato_at(h: f64) -> Result<KatoMatrix> {
    let ctx = DepthContext::new(h)?;
    let tables = ExpansionTables::from_context(&ctx);
    assemble_matrix_coeffs(&ctx, &tables)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanRow {
    pub h: f64,
    pub value: std::result::Result<f64, Error>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanTable {
    pub quantity: ScanQuantity,
    pub rows: Vec<ScanRow>,
}

impl ScanTable {
    /// Midpoints of consecutive successful rows whose values differ in sign.
    pub fn sign_changes(&self) -> Vec<(f64, f64)> {
        let ok: Vec<(f64, f64)> = self.rows.iter().filter_map(|r| r.value.as_ref().ok().map(|v| (r.h, *v))).collect();
        ok.windows(2).filter(|w| w[0].1 * w[1].1 < 0.0).map(|w| (w[0].0, w[1].0)).collect()
    }

    pub fn failures(&self) -> usize {
        self.rows.iter().filter(|r| r.value.is_err()).count()
    }
}

/// 200 logarithmically spaced depths on `[0.1, 10]` plus the endpoints 0.05 and 100.
pub fn default_grid() -> Vec<f64> {
    let n = 200;
    let (lo, hi) = (0.1f64.ln(), 10f64.ln());
    let mut g = vec![0.05];
    g.extend((0..n).map(|i| (lo + (hi - lo) * i as f64 / (n - 1) as f64).exp()));
    g.push(100.0);
    g
}

/// Evaluates `quantity` on every depth of `grid`, then refines each sign change
/// with `refine` interior points. Failures are kept per row.
pub fn scan_h(grid: &[f64], quantity: ScanQuantity, refine: usize) -> Result<ScanTable> {
    if let Some(h) = grid.iter().find(|h| !(0.05..=100.0).contains(*h)) {
        return Err(Error::Domain(format!("scan depth {h} outside [0.05, 100]")));
    }
    let eval = |hs: &[f64]| -> Vec<ScanRow> { hs.par_iter().map(|&h| ScanRow { h, value: quantity.evaluate(h) }).collect() };
    let mut table = ScanTable { quantity, rows: eval(grid) };
    if refine > 0 {
        let extra: Vec<f64> = table
            .sign_changes()
            .into_iter()
            .flat_map(|(a, b)| (1..=refine).map(move |i| a + (b - a) * i as f64 / (refine + 1) as f64))
            .collect();
        table.rows.extend(eval(&extra));
        table.rows.sort_by(|x, y| x.h.total_cmp(&y.h));
    }
    Ok(table)
}

/// Bisection on `h ↦ b₃₀(h)`; returns the final bracket of width at most `tol`.
pub fn bisect_h_crit(bracket: (f64, f64), tol: f64) -> Result<(f64, f64)> {
    let (mut lo, mut hi) = bracket;
    if !(lo > 0.0 && hi > lo && tol > 0.0) {
        return Err(Error::Domain(format!("invalid bracket ({lo}, {hi}) or tolerance {tol}")));
    }
    let b = |h: f64| kato_at(h).map(|k| k.b30);
    let mut f_lo = b(lo)?;
    let f_hi = b(hi)?;
    if f_lo * f_hi > 0.0 {
        return Err(Error::Bracket { lo, hi });
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        let f_mid = b(mid)?;
        if f_mid == 0.0 {
            return Ok((mid, mid));
        }
        if f_lo * f_mid < 0.0 {
            hi = mid;
        } else {
            lo = mid;
            f_lo = f_mid;
        }
    }
    Ok((lo, hi))
}

/// Depth where `b₃₀` changes sign inside `bracket`, to within `tol`.
pub fn find_h_crit(bracket: (f64, f64), tol: f64) -> Result<f64> {
    let (lo, hi) = bisect_h_crit(bracket, tol)?;
    Ok(0.5 * (lo + hi))
}
