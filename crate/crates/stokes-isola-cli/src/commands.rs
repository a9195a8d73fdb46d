//! Command implementations and their invariant suites.

use anyhow::{bail, Context, Result};
use serde_json::{json, Value};
use stokes_isola::dispersion::{
    beta_star_deep_asymptote, beta_star_infinite, beta_star_shallow_asymptote, resonance_residual, solve_beta_star, DepthContext,
};
use stokes_isola::dno::oracle::oracle_rows_with;
use stokes_isola::dno::{r0_coeff, r1_coeffs, MultiplierCoeffs, MultiplierTable};
use stokes_isola::isola::{self, asymptotic_eigenvalues, characteristic, detuning, eigenvalues, isola_curve, kato_at, ScanQuantity};
use stokes_isola::kato::{assemble_with, check_invariants, ContourSpec, KatoMatrix};
use stokes_isola::modealg::{HamiltonianExpansion, DEFAULT_CUTOFF};
use stokes_isola::stokes::ExpansionTables;
use stokes_isola::validator::{self, build_operator, hamiltonian_symmetry_defect, spectrum, theta_grid, GSource};

use crate::config::{Format, RunConfig};
use crate::output::{json as to_json, num, svg, write, Csv, Mark, Series};

/// Text produced by a command: files written under the output directory plus a
/// summary for stdout in the configured format.
pub struct Emitted {
    pub csv: Option<(String, Csv)>,
    pub json: Option<(String, Value)>,
    pub svg: Option<(String, String)>,
}

impl Emitted {
    pub fn write_all(&self, cfg: &RunConfig) -> Result<String> {
        if let Some((name, c)) = &self.csv {
            write(&cfg.out_dir, name, c.as_str())?;
        }
        if let Some((name, v)) = &self.json {
            write(&cfg.out_dir, name, &to_json(v))?;
        }
        if let Some((name, s)) = &self.svg {
            write(&cfg.out_dir, name, s)?;
        }
        Ok(match cfg.format {
            Format::Csv => self.csv.as_ref().map(|(_, c)| c.as_str().to_string()),
            Format::Json => self.json.as_ref().map(|(_, v)| to_json(v)),
            Format::Svg => self.svg.as_ref().map(|(_, s)| s.clone()),
        }
        .or_else(|| self.json.as_ref().map(|(_, v)| to_json(v)))
        .unwrap_or_default())
    }
}

pub fn log_grid(lo: f64, hi: f64, n: usize) -> Result<Vec<f64>> {
    if !(lo > 0.0 && hi > lo && n >= 2) {
        bail!("need 0 < h-min < h-max and at least two points");
    }
    let (a, b) = (lo.ln(), hi.ln());
    Ok((0..n).map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp()).collect())
}

pub fn resonance_single(h: f64, tol: f64) -> Result<Emitted> {
    let beta = solve_beta_star(h, tol.min(1e-12))?;
    let residual = resonance_residual(beta, h)?;
    let v = json!({
        "h": h,
        "beta_star": beta,
        "residual": residual.abs(),
        "deep_asymptote": beta_star_deep_asymptote(h),
        "shallow_asymptote": beta_star_shallow_asymptote(h),
    });
    Ok(Emitted { csv: None, json: Some(("resonance.json".into(), v)), svg: None })
}

pub fn resonance_range(grid: &[f64]) -> Result<Emitted> {
    let table = isola::scan_h(grid, ScanQuantity::BetaStar, 0)?;
    let mut csv = Csv::new(&["h", "value", "failure"]);
    let mut curve = Vec::new();
    for r in &table.rows {
        match &r.value {
            Ok(v) => {
                csv.row(&[num(r.h), num(*v), String::new()]);
                curve.push((r.h.log10(), *v));
            }
            Err(e) => csv.row(&[num(r.h), String::new(), quote(&e.to_string())]),
        }
    }
    let deep: Vec<(f64, f64)> = grid.iter().filter(|h| **h >= 0.5).map(|h| (h.log10(), beta_star_deep_asymptote(*h))).collect();
    let shallow: Vec<(f64, f64)> =
        grid.iter().filter(|h| beta_star_shallow_asymptote(**h) <= 1.2 * beta_star_infinite()).map(|h| (h.log10(), beta_star_shallow_asymptote(*h))).collect();
    let plot = svg(
        "resonant transverse wavenumber",
        "log10 h",
        "beta*",
        &[
            Series { points: curve, mark: Mark::Line, color: "black" },
            Series { points: deep, mark: Mark::Line, color: "steelblue" },
            Series { points: shallow, mark: Mark::Line, color: "darkorange" },
        ],
    );
    Ok(Emitted { csv: Some(("resonance.csv".into(), csv)), json: None, svg: Some(("resonance.svg".into(), plot)) })
}

pub fn coefficients(cfg: &RunConfig) -> Result<KatoMatrix> {
    let ctx = DepthContext::new(cfg.h)?;
    let tables = ExpansionTables::from_context(&ctx);
    let ham = HamiltonianExpansion::build(&ctx, &tables, DEFAULT_CUTOFF)?;
    let spec = ContourSpec::new(&ctx, ctx.spectrum_gap(DEFAULT_CUTOFF) / 2.0, cfg.contour_nodes, DEFAULT_CUTOFF)?;
    Ok(assemble_with(&ctx, &ham, &spec)?)
}

pub fn coeffs(cfg: &RunConfig) -> Result<Emitted> {
    let km = coefficients(cfg)?;
    let d = &km.diagnostics;
    let mut v = serde_json::to_value(&km)?;
    let obj = v.as_object_mut().context("coefficients serialise to an object")?;
    obj.insert("kappa0".into(), json!(km.kappa0()));
    obj.insert("kappa1".into(), json!(km.kappa1()));
    obj.insert(
        "diagnostics".into(),
        json!({
            "real_residue": d.real_residue,
            "antisymmetry": d.antisymmetry,
            "symplectic": d.symplectic,
            "b_low_order": d.b_low_order,
            "conditioning": d.conditioning,
        }),
    );
    let mut csv = Csv::new(&["name", "value"]);
    for (k, val) in obj.iter() {
        if let Some(x) = val.as_f64() {
            csv.row(&[k.clone(), num(x)]);
        }
    }
    Ok(Emitted { csv: Some(("coeffs.csv".into(), csv)), json: Some(("coeffs.json".into(), v)), svg: None })
}

pub fn dno_dump(cfg: &RunConfig, kmin: i32, kmax: i32, beta: Option<f64>, oracle: bool) -> Result<Emitted> {
    if kmin > kmax {
        bail!("kmin must not exceed kmax");
    }
    let ctx = DepthContext::new(cfg.h)?;
    let tables = ExpansionTables::from_context(&ctx);
    let beta = beta.unwrap_or(ctx.beta_star);
    let rows: Vec<MultiplierCoeffs> = if oracle {
        oracle_rows_with(kmin, kmax, beta, cfg.h, &tables, cfg.nx, cfg.nz)?
    } else {
        MultiplierTable::build(beta, cfg.h, &tables, kmin, kmax)?.rows
    };
    let mut csv = Csv::new(&MultiplierCoeffs::COLUMNS);
    for r in &rows {
        let mut f = vec![r.k.to_string()];
        f.extend(r.values().iter().map(|x| num(*x)));
        csv.row(&f);
    }
    Ok(Emitted { csv: Some(("dno.csv".into(), csv)), json: None, svg: None })
}

pub fn isola_cmd(cfg: &RunConfig, samples: usize) -> Result<Emitted> {
    let km = coefficients(cfg)?;
    let curve = isola_curve(&km, cfg.eps, samples)?;
    let g = curve.geometry;
    let mut csv = Csv::new(&["theta", "re_lambda", "im_lambda", "branch"]);
    for s in &curve.samples {
        csv.row(&[num(s.theta), num(s.plus.re), num(s.plus.im), "plus".into()]);
    }
    for s in &curve.samples {
        csv.row(&[num(s.theta), num(s.minus.re), num(s.minus.im), "minus".into()]);
    }
    let ellipse: Vec<(f64, f64)> = (0..=256)
        .map(|i| {
            let z = g.point(std::f64::consts::TAU * i as f64 / 256.0);
            (z.re, z.im - g.center_imag)
        })
        .collect();
    let dots: Vec<(f64, f64)> =
        curve.samples.iter().flat_map(|s| [(s.plus.re, s.plus.im - g.center_imag), (s.minus.re, s.minus.im - g.center_imag)]).collect();
    let plot = svg(
        &format!("isola, h = {}, eps = {}", cfg.h, cfg.eps),
        "Re λ",
        "Im λ − center",
        &[Series { points: ellipse, mark: Mark::Line, color: "darkorange" }, Series { points: dots, mark: Mark::Dots, color: "steelblue" }],
    );
    let v = json!({
        "h": cfg.h,
        "eps": cfg.eps,
        "center_imag": g.center_imag,
        "semi_axis_real": g.semi_axis_real,
        "semi_axis_imag": g.semi_axis_imag,
        "kappa0": g.kappa0,
        "kappa1": g.kappa1,
        "b30": km.b30,
        "sigma": km.sigma,
    });
    Ok(Emitted { csv: Some(("isola.csv".into(), csv)), json: Some(("isola.json".into(), v)), svg: Some(("isola.svg".into(), plot)) })
}

pub fn scan(grid: &[f64], quantity: ScanQuantity, refine: usize) -> Result<Emitted> {
    let table = isola::scan_h(grid, quantity, refine)?;
    let mut csv = Csv::new(&["h", "value", "failure"]);
    let mut pts = Vec::new();
    for r in &table.rows {
        match &r.value {
            Ok(v) => {
                csv.row(&[num(r.h), num(*v), String::new()]);
                pts.push((r.h.log10(), *v));
            }
            Err(e) => csv.row(&[num(r.h), String::new(), quote(&e.to_string())]),
        }
    }
    let plot = svg(&format!("{} against depth", quantity.name()), "log10 h", quantity.name(), &[Series { points: pts, mark: Mark::Line, color: "black" }]);
    let summary = json!({
        "quantity": quantity.name(),
        "points": table.rows.len(),
        "failures": table.failures(),
        "sign_changes": table.sign_changes().iter().map(|(a, b)| json!([a, b])).collect::<Vec<_>>(),
    });
    Ok(Emitted { csv: Some(("scan.csv".into(), csv)), json: Some(("scan.json".into(), summary)), svg: Some(("scan.svg".into(), plot)) })
}

pub fn validate(cfg: &RunConfig, thetas: usize) -> Result<Emitted> {
    let ctx = DepthContext::new(cfg.h)?;
    let km = kato_at(cfg.h)?;
    let grid = theta_grid(km.kappa1(), thetas);
    let full = validator::compare_with(&ctx, &km, cfg.eps, &grid, cfg.k, GSource::Series)?;
    let half = validator::compare_with(&ctx, &km, 0.5 * cfg.eps, &grid, cfg.k, GSource::Series)?;
    let mut csv = Csv::new(&["theta", "pred_re", "pred_im", "num_re", "num_im", "dist"]);
    for r in &full.rows {
        for b in 0..2 {
            csv.row(&[num(r.theta), num(r.predicted[b].re), num(r.predicted[b].im), num(r.numerical[b].re), num(r.numerical[b].im), num(r.distance)]);
        }
    }
    let g = isola::IsolaGeometry::new(&km, cfg.eps);
    let ellipse: Vec<(f64, f64)> = (0..=256)
        .map(|i| {
            let z = g.point(std::f64::consts::TAU * i as f64 / 256.0);
            (z.re, z.im - g.center_imag)
        })
        .collect();
    let dots: Vec<(f64, f64)> = full.rows.iter().filter(|r| r.unstable).flat_map(|r| r.numerical.map(|z| (z.re, z.im - g.center_imag))).collect();
    let plot = svg(
        &format!("computed eigenvalues against the isola, h = {}, eps = {}", cfg.h, cfg.eps),
        "Re λ",
        "Im λ − center",
        &[Series { points: ellipse, mark: Mark::Line, color: "darkorange" }, Series { points: dots, mark: Mark::Dots, color: "steelblue" }],
    );
    let v = json!({
        "h": cfg.h,
        "eps": cfg.eps,
        "K": cfg.k,
        "thetas": thetas,
        "max_distance": full.max_distance,
        "max_distance_half_eps": half.max_distance,
        "eps_ratio": full.max_distance / half.max_distance,
        "max_pointwise": full.max_pointwise,
        "eps4": cfg.eps.powi(4),
    });
    Ok(Emitted { csv: Some(("validate.csv".into(), csv)), json: Some(("validate.json".into(), v)), svg: Some(("validate.svg".into(), plot)) })
}

pub fn hcrit(lo: f64, hi: f64, tol: f64) -> Result<Emitted> {
    let (a, b) = isola::bisect_h_crit((lo, hi), tol)?;
    let v = json!({ "h_crit": 0.5 * (a + b), "lo": a, "hi": b, "tol": tol });
    Ok(Emitted { csv: None, json: Some(("hcrit.json".into(), v)), svg: None })
}

fn quote(s: &str) -> String {
    format!("\"{}\"", s.replace('"', "'"))
}

/// Pass/fail tally of an invariant suite.
#[derive(Default)]
pub struct Tally {
    pub lines: Vec<String>,
    pub passed: usize,
    pub failed: usize,
}

impl Tally {
    fn check(&mut self, name: &str, outcome: Result<bool>) {
        let ok = matches!(outcome, Ok(true));
        let detail = match outcome {
            Err(e) => format!(" ({e})"),
            _ => String::new(),
        };
        self.lines.push(format!("{} {name}{detail}", if ok { "PASS" } else { "FAIL" }));
        if ok {
            self.passed += 1;
        } else {
            self.failed += 1;
        }
    }
}

pub fn seed_check(command: &str, cfg: &RunConfig) -> Tally {
    let mut t = Tally::default();
    let h = cfg.h;
    match command {
        "resonance" | "scan" => {
            t.check("residual vanishes at the root", (|| Ok(resonance_residual(solve_beta_star(h, 1e-14)?, h)?.abs() < 1e-12))());
            t.check("deep limit", (|| Ok((solve_beta_star(50.0, 1e-14)? - 2.7275).abs() < 5e-4))());
            t.check("shallow limit", (|| Ok((solve_beta_star(0.01, 1e-16)? / beta_star_shallow_asymptote(0.01) - 1.0).abs() < 0.05))());
            t.check(
                "monotone in depth",
                (|| {
                    let v: Vec<f64> = [0.1, 0.5, 1.0, 5.0].iter().map(|h| solve_beta_star(*h, 1e-14)).collect::<Result<_, _>>()?;
                    Ok(v.windows(2).all(|w| w[0] < w[1]))
                })(),
            );
        }
        "dno-dump" => {
            let run = || -> Result<(DepthContext, MultiplierTable)> {
                let ctx = DepthContext::new(h)?;
                let tables = ExpansionTables::from_context(&ctx);
                let table = MultiplierTable::build(ctx.beta_star, h, &tables, -6, 6)?;
                Ok((ctx, table))
            };
            match run() {
                Ok((ctx, table)) => {
                    t.check(
                        "zeroth order matches the symbol",
                        Ok(table.rows.iter().all(|r| (r.a0 - r0_coeff(r.k, ctx.beta_star, h)).abs() < 1e-12)),
                    );
                    t.check(
                        "first order matches the closed form",
                        Ok(table.rows.iter().all(|r| {
                            let (m, p) = r1_coeffs(r.k, ctx.beta_star, h);
                            (r.bm1 - m).abs() < 1e-10 && (r.bp1 - p).abs() < 1e-10
                        })),
                    );
                    t.check(
                        "reflection symmetry",
                        Ok(table.rows.iter().all(|r| {
                            let m = table.row(-r.k).expect("symmetric range");
                            (0..=3).all(|j| [-3, -2, -1, 0, 1, 2, 3].iter().all(|&s| (r.coeff(j, s) - m.coeff(j, -s)).abs() < 1e-9))
                        })),
                    );
                    t.check(
                        "self-adjoint pairs",
                        Ok(table.rows.iter().all(|r| {
                            (2..=3).all(|j| {
                                [-3, -2, -1, 0, 1, 2, 3].iter().all(|&s| match table.row(r.k + s) {
                                    Some(o) => (r.coeff(j, s) - o.coeff(j, -s)).abs() < 1e-8,
                                    None => true,
                                })
                            })
                        })),
                    );
                }
                Err(e) => t.check("multiplier table builds", Err(e)),
            }
        }
        "coeffs" | "hcrit" => match coefficients(cfg) {
            Ok(km) => {
                let ctx = DepthContext::new(h).expect("depth accepted above");
                t.check("structural invariants", Ok(check_invariants(&km).is_ok()));
                t.check("L purely imaginary", Ok(km.diagnostics.real_residue < 1e-9));
                t.check("L12 = -L21", Ok(km.diagnostics.antisymmetry < 1e-10));
                t.check("a01 closed form", Ok((km.a01 + ctx.tau1 / (2.0 * ctx.gamma1)).abs() < 1e-9));
                t.check("c01 closed form", Ok((km.c01 - ctx.tau2 / (2.0 * ctx.gamma2)).abs() < 1e-9));
                t.check("a01 < 0 < c01", Ok(km.a01 < 0.0 && km.c01 > 0.0));
            }
            Err(e) => t.check("coefficients assemble", Err(e)),
        },
        "isola" => match coefficients(cfg) {
            Ok(km) => {
                let e = cfg.eps.max(1e-3);
                let delta = detuning(&km, e, 0.0);
                let (p, m) = eigenvalues(&km, e, delta);
                let (a, _, c) = km.abc(e, delta);
                t.check("trace identity", Ok((p + m).im - (2.0 * km.sigma + a + c) < 1e-14 && (p + m).re.abs() < 1e-14));
                t.check("characteristic polynomial", Ok(characteristic(&km, e, delta, p).norm() < 1e-12 && characteristic(&km, e, delta, m).norm() < 1e-12));
                let re = |x: f64| eigenvalues(&km, x, detuning(&km, x, 0.0)).0.re;
                t.check("cubic growth", Ok((re(0.01) / re(0.005) / 8.0 - 1.0).abs() < 0.15));
                let (pa, _) = asymptotic_eigenvalues(&km, e, 0.0);
                t.check("expansion consistent", Ok((pa - p).norm() < 50.0 * e.powi(4)));
            }
            Err(e) => t.check("coefficients assemble", Err(e)),
        },
        "validate" => {
            let run = || -> Result<(f64, f64)> {
                let ctx = DepthContext::new(h)?;
                let op0 = build_operator(0.0, ctx.beta_star, h, cfg.k, GSource::Series)?;
                let mut ev = spectrum(&op0)?;
                let mut expected = validator::unperturbed_spectrum(ctx.beta_star, h, cfg.k)?;
                ev.sort_by(|a, b| a.im.total_cmp(&b.im));
                expected.sort_by(|a, b| a.im.total_cmp(&b.im));
                let flat = ev.iter().zip(&expected).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
                let km = kato_at(h)?;
                let op = build_operator(cfg.eps, ctx.beta_star + detuning(&km, cfg.eps, 0.0), h, cfg.k, GSource::Series)?;
                Ok((flat, hamiltonian_symmetry_defect(&spectrum(&op)?)))
            };
            match run() {
                Ok((flat, sym)) => {
                    t.check("flat spectrum matches dispersion", Ok(flat < 1e-9));
                    t.check("spectrum symmetric under λ → −conj(λ)", Ok(sym < 1e-9));
                }
                Err(e) => t.check("operator builds", Err(e)),
            }
        }
        _ => t.check("known command", Ok(false)),
    }
    t
}
