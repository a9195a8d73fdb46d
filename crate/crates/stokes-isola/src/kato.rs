//! Kato reduction of `L_{ε,β*+δ}` near the double eigenvalue `iσ`.
//!
//! The spectral projector `P = −(1/2πi)∮ (L − λ)^{−1} dλ` is expanded in `(ε, δ)`
//! through the Neumann series of the resolvent around `S_λ = (L_{0,β*} − λ)^{−1}`.
//! With `Q = P − P₀` the perturbed basis is `U^{εδ} = (1 − Q²)^{−1/2} P U`, and the
//! reduced matrix follows from the inner products `(H V_j^{εδ}, V_k^{εδ})`.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::sync::atomic::{AtomicU64, Ordering};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dispersion::DepthContext;
use crate::error::{Error, Result};
use crate::modealg::{eigen_basis, HamiltonianExpansion, ModeVector, DEFAULT_CUTOFF};
use crate::stokes::ExpansionTables;

/// Bivariate order `(m, n)` for `ε^m δ^n`.
pub type Order = (usize, usize);

/// Every nonzero order of total degree at most three.
pub const ORDERS: [Order; 9] = [(1, 0), (0, 1), (2, 0), (1, 1), (0, 2), (3, 0), (2, 1), (1, 2), (0, 3)];

const ROUNDOFF_FLOOR: f64 = 1e-13;
const QUAD_TOL: f64 = 1e-11;
const QUAD_FAIL: f64 = 1e-9;
const MAX_NODES: usize = 1024;

fn degree(a: Order) -> usize {
    a.0 + a.1
}

fn sub(a: Order, b: Order) -> Option<Order> {
    (a.0 >= b.0 && a.1 >= b.1).then(|| (a.0 - b.0, a.1 - b.1))
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|i| i as f64).product()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContourSpec {
    pub center: Complex64,
    pub radius: f64,
    pub nodes: usize,
}

impl ContourSpec {
    /// Circle around `iσ` with half the spectral gap as radius and 64 nodes.
    pub fn for_context(ctx: &DepthContext, cutoff: i32) -> Result<Self> {
        Self::new(ctx, ctx.spectrum_gap(cutoff) / 2.0, 64, cutoff)
    }

    pub fn new(ctx: &DepthContext, radius: f64, nodes: usize, cutoff: i32) -> Result<Self> {
        let gap = ctx.spectrum_gap(cutoff);
        if !(radius > 0.0 && radius < gap) {
            return Err(Error::Domain(format!("contour radius {radius} outside (0, {gap})")));
        }
        if nodes < 32 || nodes % 2 != 0 {
            return Err(Error::Domain(format!("contour needs an even node count ≥ 32, got {nodes}")));
        }
        Ok(Self { center: Complex64::new(0.0, ctx.sigma), radius, nodes })
    }

    fn points(&self, n: usize) -> impl Iterator<Item = (Complex64, Complex64)> + '_ {
        (0..n).map(move |i| {
            let w = Complex64::from_polar(self.radius, 2.0 * PI * i as f64 / n as f64);
            (self.center + w, w / n as f64)
        })
    }
}

/// `(L_{0,β*} − λ)^{−1} v`, solved mode by mode.
pub fn resolvent_apply(lambda: Complex64, v: &ModeVector, ctx: &DepthContext, a0: &impl Fn(i32) -> f64) -> Result<ModeVector> {
    let mut out = ModeVector::new();
    for (&k, x) in &v.entries {
        let d = Complex64::new(0.0, ctx.c0 * k as f64) - lambda;
        let a = a0(k);
        // [[d, a], [−1, d]]
        let det = d * d + a;
        if det.norm() < 1e-14 * (1.0 + a.abs()) {
            return Err(Error::Pole { k });
        }
        out.entries.insert(k, [(d * x[0] - a * x[1]) / det, (x[0] + d * x[1]) / det]);
    }
    Ok(out)
}

/// Unperturbed symbol accessor and the expansion of `L = J H`.
pub struct KatoContext<'a> {
    pub ctx: &'a DepthContext,
    pub ham: &'a HamiltonianExpansion,
    conditioning: AtomicU64,
}

impl<'a> KatoContext<'a> {
    pub fn new(ctx: &'a DepthContext, ham: &'a HamiltonianExpansion) -> Self {
        Self { ctx, ham, conditioning: AtomicU64::new(0f64.to_bits()) }
    }

    /// Largest ratio `Σ|w||W_a| / (1 + |P_a v|)` met so far; roundoff in the
    /// contour sums is about machine epsilon times this.
    pub fn conditioning(&self) -> f64 {
        f64::from_bits(self.conditioning.load(Ordering::Relaxed))
    }

    fn record_conditioning(&self, c: f64) {
        if c > self.conditioning() {
            self.conditioning.store(c.to_bits(), Ordering::Relaxed);
        }
    }

    fn a0(&self, k: i32) -> f64 {
        crate::dno::r0_coeff(k, self.ctx.beta_star, self.ctx.h)
    }

    fn l_apply(&self, a: Order, v: &ModeVector) -> ModeVector {
        match self.ham.get(a.0, a.1) {
            Some(op) => op.apply(v).apply_j(),
            None => ModeVector::new(),
        }
    }

    /// Taylor coefficients `P_a v` of the projector for every order in [`ORDERS`],
    /// evaluated with `n` trapezoid nodes, together with `Σ |w| |W_a|` per order.
    fn project_all_n(&self, v: &ModeVector, spec: &ContourSpec, n: usize) -> Result<(BTreeMap<Order, ModeVector>, BTreeMap<Order, f64>)> {
        let a0 = |k: i32| self.a0(k);
        let partial: Vec<BTreeMap<Order, ModeVector>> = spec
            .points(n)
            .collect::<Vec<_>>()
            .into_par_iter()
            .map(|(lam, w)| {
                // W_0 = S v, W_a = −Σ_{0<b≤a} S L^b W_{a−b}.
                let mut wmap: BTreeMap<Order, ModeVector> = BTreeMap::new();
                wmap.insert((0, 0), resolvent_apply(lam, v, self.ctx, &a0)?);
                for &a in &ORDERS {
                    let mut acc = ModeVector::new();
                    for &b in &ORDERS {
                        if let Some(rest) = sub(a, b) {
                            if let Some(wr) = wmap.get(&rest) {
                                acc.axpy(Complex64::new(1.0, 0.0), &self.l_apply(b, wr));
                            }
                        }
                    }
                    let s = resolvent_apply(lam, &acc, self.ctx, &a0)?;
                    wmap.insert(a, s.scale(Complex64::new(-1.0, 0.0)));
                }
                // P_a v = −(1/2πi)∮ W_a dλ; dλ/(2πi) = w.
                Ok(ORDERS.iter().map(|a| (*a, wmap[a].scale(-w))).collect())
            })
            .collect::<Result<_>>()?;
        let mut out: BTreeMap<Order, ModeVector> = ORDERS.iter().map(|a| (*a, ModeVector::new())).collect();
        let mut mag: BTreeMap<Order, f64> = ORDERS.iter().map(|a| (*a, 0.0)).collect();
        for p in partial {
            for (a, x) in p {
                *mag.get_mut(&a).unwrap() += x.max_abs();
                out.get_mut(&a).unwrap().axpy(Complex64::new(1.0, 0.0), &x);
            }
        }
        Ok((out, mag))
    }

    /// Taylor coefficients of `P v`, with node doubling until successive results agree.
    pub fn project_all(&self, v: &ModeVector, spec: &ContourSpec) -> Result<BTreeMap<Order, ModeVector>> {
        let mut n = spec.nodes;
        let (mut prev, _) = self.project_all_n(v, spec, n)?;
        loop {
            let (next, mag) = self.project_all_n(v, spec, 2 * n)?;
            // Relative change per order, with the cancellation floor of the sum discounted.
            let change = ORDERS
                .iter()
                .map(|a| {
                    let d = next[a].sub(&prev[a]).max_abs();
                    (d - ROUNDOFF_FLOOR * mag[a]).max(0.0) / (1.0 + next[a].max_abs())
                })
                .fold(0.0, f64::max);
            n *= 2;
            self.record_conditioning(ORDERS.iter().map(|a| mag[a] / (1.0 + next[a].max_abs())).fold(0.0, f64::max));
            if change < QUAD_TOL {
                return Ok(next);
            }
            if n >= MAX_NODES {
                if change < QUAD_FAIL {
                    return Ok(next);
                }
                return Err(Error::Quadrature { nodes: n, change });
            }
            prev = next;
        }
    }
}

/// `P^{m,n} U_j = ∂_ε^m ∂_δ^n P U_j` at the origin (`j ∈ {1, 2}`).
pub fn contour_p(mn: Order, j: usize, kc: &KatoContext, spec: &ContourSpec) -> Result<ModeVector> {
    if !ORDERS.contains(&mn) {
        return Err(Error::Domain(format!("order {mn:?} not in the third-order table")));
    }
    let u = basis_vector(kc.ctx, j)?;
    let all = kc.project_all(&u, spec)?;
    Ok(all[&mn].scale(Complex64::new(factorial(mn.0) * factorial(mn.1), 0.0)))
}

fn basis_vector(ctx: &DepthContext, j: usize) -> Result<ModeVector> {
    let (u1, u2) = eigen_basis(ctx);
    match j {
        1 => Ok(u1),
        2 => Ok(u2),
        _ => Err(Error::Domain(format!("basis index {j} not in {{1, 2}}"))),
    }
}

/// Taylor coefficients `U_j^{(m,n)}` of the Kato basis, with `(0,0) ↦ U_j`.
pub fn perturbed_basis_all(j: usize, kc: &KatoContext, spec: &ContourSpec) -> Result<BTreeMap<Order, ModeVector>> {
    let u = basis_vector(kc.ctx, j)?;
    let q1 = kc.project_all(&u, spec)?;
    // Q_b Q_c U for all b, c.
    let q2: BTreeMap<Order, BTreeMap<Order, ModeVector>> =
        ORDERS.iter().filter(|c| degree(**c) <= 2).map(|c| Ok((*c, kc.project_all(&q1[c], spec)?))).collect::<Result<_>>()?;
    let first: [Order; 2] = [(1, 0), (0, 1)];
    let mut q3: BTreeMap<(Order, Order), BTreeMap<Order, ModeVector>> = BTreeMap::new();
    for c in first {
        for d in first {
            q3.insert((c, d), kc.project_all(&q2[&d][&c], spec)?);
        }
    }
    let half = Complex64::new(0.5, 0.0);
    let mut out = BTreeMap::from([((0, 0), u)]);
    for &a in &ORDERS {
        let mut v = q1[&a].clone();
        for (&c, row) in &q2 {
            if let Some(b) = sub(a, c) {
                if let Some(x) = row.get(&b) {
                    v.axpy(half, x);
                }
            }
        }
        for (&(c, d), row) in &q3 {
            if let Some(b) = sub(a, c).and_then(|r| sub(r, d)) {
                if let Some(x) = row.get(&b) {
                    v.axpy(half, x);
                }
            }
        }
        out.insert(a, v);
    }
    Ok(out)
}

/// `U_j^{(m,n)}` for a single order; see [`perturbed_basis_all`].
pub fn perturbed_basis(mn: Order, j: usize, kc: &KatoContext, spec: &ContourSpec) -> Result<ModeVector> {
    let all = perturbed_basis_all(j, kc, spec)?;
    all.get(&mn).cloned().ok_or_else(|| Error::Domain(format!("order {mn:?} not in the third-order table")))
}

/// Taylor table `Σ c_{m,n} ε^m δ^n` of one real entry.
pub type CoefficientTable = BTreeMap<Order, f64>;

fn eval_table(t: &CoefficientTable, eps: f64, delta: f64) -> f64 {
    t.iter().map(|(&(m, n), v)| v * eps.powi(m as i32) * delta.powi(n as i32)).sum()
}

/// Reduced 2×2 matrix `L = iσ I + i[[A, B], [−B, C]]` in Taylor form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KatoMatrix {
    pub h: f64,
    pub beta_star: f64,
    pub sigma: f64,
    pub a01: f64,
    pub a20: f64,
    pub a02: f64,
    pub a21: f64,
    pub a03: f64,
    pub c01: f64,
    pub c20: f64,
    pub c02: f64,
    pub c21: f64,
    pub c03: f64,
    pub b30: f64,
    #[serde(skip)]
    pub a: CoefficientTable,
    #[serde(skip)]
    pub b: CoefficientTable,
    #[serde(skip)]
    pub c: CoefficientTable,
    #[serde(skip)]
    pub diagnostics: KatoDiagnostics,
}

/// Residues of the structural identities, recorded during assembly. The `_rel`
/// fields divide by the summed magnitude of the terms entering each coefficient.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct KatoDiagnostics {
    /// Largest real part of any Taylor coefficient of `L − iσ I`.
    pub real_residue: f64,
    /// Largest `|L₁₂ + L₂₁|` over the Taylor coefficients.
    pub antisymmetry: f64,
    /// Largest deviation of `(J U_j^{εδ}, U_k^{εδ})` from its value at the origin.
    pub symplectic: f64,
    /// Largest off-diagonal coefficient that must vanish (`b_{1,0}, b_{2,0}, b_{0,1}, b_{1,1}, b_{2,1}`).
    pub b_low_order: f64,
    pub real_residue_rel: f64,
    pub antisymmetry_rel: f64,
    pub symplectic_rel: f64,
    pub b_low_order_rel: f64,
    /// Roundoff amplification of the contour sums, see [`KatoContext::conditioning`].
    pub conditioning: f64,
}

impl KatoMatrix {
    /// `(A, B, C)` at `(ε, δ)` from the Taylor tables.
    pub fn abc(&self, eps: f64, delta: f64) -> (f64, f64, f64) {
        (eval_table(&self.a, eps, delta), eval_table(&self.b, eps, delta), eval_table(&self.c, eps, delta))
    }

    /// `iσ I + i[[A, B], [−B, C]]`.
    pub fn matrix(&self, eps: f64, delta: f64) -> [[Complex64; 2]; 2] {
        let (a, b, c) = self.abc(eps, delta);
        let i = Complex64::new(0.0, 1.0);
        [[i * (self.sigma + a), i * b], [-i * b, i * (self.sigma + c)]]
    }

    /// Detuning rate with `A − C = O(ε³)` along `δ = κ₀ε²`.
    pub fn kappa0(&self) -> f64 {
        (self.c20 - self.a20) / (self.a01 - self.c01)
    }

    pub fn kappa1(&self) -> f64 {
        2.0 * self.b30.abs() / (self.a01 - self.c01).abs()
    }
}

/// Inner products `(H V_j^{εδ}, V_k^{εδ})` as Taylor tables, plus symplectic pairings.
struct Ledger {
    hvv: BTreeMap<(usize, usize), BTreeMap<Order, Complex64>>,
    jvv: BTreeMap<(usize, usize), BTreeMap<Order, Complex64>>,
    hmag: BTreeMap<(usize, usize), BTreeMap<Order, f64>>,
    jmag: BTreeMap<(usize, usize), BTreeMap<Order, f64>>,
}

fn all_orders() -> Vec<Order> {
    std::iter::once((0, 0)).chain(ORDERS).collect()
}

fn ledger(kc: &KatoContext, v: &[BTreeMap<Order, ModeVector>; 2]) -> Ledger {
    let mut hvv = BTreeMap::new();
    let mut jvv = BTreeMap::new();
    let mut hmag = BTreeMap::new();
    let mut jmag = BTreeMap::new();
    for j in 0..2 {
        for k in 0..2 {
            let mut hm = BTreeMap::new();
            let mut jm = BTreeMap::new();
            let mut hg = BTreeMap::new();
            let mut jg = BTreeMap::new();
            for a in all_orders() {
                let mut hs = Complex64::new(0.0, 0.0);
                let mut js = Complex64::new(0.0, 0.0);
                let (mut ha, mut ja) = (0.0, 0.0);
                for b in all_orders() {
                    let Some(rest) = sub(a, b) else { continue };
                    for c in all_orders() {
                        let Some(d) = sub(rest, c) else { continue };
                        if let Some(op) = kc.ham.get(b.0, b.1) {
                            let t = op.apply(&v[j][&c]).inner(&v[k][&d]);
                            hs += t;
                            ha += t.norm();
                        }
                    }
                    if let Some(vb) = v[j].get(&b) {
                        let t = vb.apply_j().inner(&v[k][&rest]);
                        js += t;
                        ja += t.norm();
                    }
                }
                hm.insert(a, hs);
                jm.insert(a, js);
                hg.insert(a, ha);
                jg.insert(a, ja);
            }
            hvv.insert((j, k), hm);
            jvv.insert((j, k), jm);
            hmag.insert((j, k), hg);
            jmag.insert((j, k), jg);
        }
    }
    Ledger { hvv, jvv, hmag, jmag }
}

/// Builds the Hamiltonian expansion and assembles every Taylor coefficient of the reduced matrix.
pub fn assemble_matrix_coeffs(ctx: &DepthContext, tables: &ExpansionTables) -> Result<KatoMatrix> {
    let ham = HamiltonianExpansion::build(ctx, tables, DEFAULT_CUTOFF)?;
    let spec = ContourSpec::for_context(ctx, DEFAULT_CUTOFF)?;
    assemble_with(ctx, &ham, &spec)
}

pub fn assemble_with(ctx: &DepthContext, ham: &HamiltonianExpansion, spec: &ContourSpec) -> Result<KatoMatrix> {
    let km = assemble_unchecked(ctx, ham, spec)?;
    check_invariants(&km)?;
    Ok(km)
}

/// Assembly without the structural checks; the residues are left in `diagnostics`.
pub fn assemble_unchecked(ctx: &DepthContext, ham: &HamiltonianExpansion, spec: &ContourSpec) -> Result<KatoMatrix> {
    let kc = KatoContext::new(ctx, ham);
    let norm = |j: usize, g: f64| -> Result<BTreeMap<Order, ModeVector>> {
        Ok(perturbed_basis_all(j, &kc, spec)?
            .into_iter()
            .map(|(a, u)| (a, u.scale(Complex64::new(1.0 / g.sqrt(), 0.0))))
            .collect())
    };
    let v = [norm(1, ctx.gamma1)?, norm(2, ctx.gamma2)?];
    let led = ledger(&kc, &v);
    let i = Complex64::new(0.0, 1.0);
    let w = 1.0 / (4.0 * PI);
    let mut diag = KatoDiagnostics { conditioning: kc.conditioning(), ..Default::default() };
    let (mut ta, mut tb, mut tc) = (CoefficientTable::new(), CoefficientTable::new(), CoefficientTable::new());
    let rel = |x: f64, m: f64| x / m.max(1.0);
    for a in all_orders() {
        let l11 = -i * w * led.hvv[&(0, 0)][&a];
        let l12 = i * w * led.hvv[&(0, 1)][&a];
        let l21 = -i * w * led.hvv[&(1, 0)][&a];
        let l22 = i * w * led.hvv[&(1, 1)][&a];
        let sig = if a == (0, 0) { ctx.sigma } else { 0.0 };
        for (key, l) in [((0, 0), l11), ((0, 1), l12), ((1, 0), l21), ((1, 1), l22)] {
            diag.real_residue = diag.real_residue.max(l.re.abs());
            diag.real_residue_rel = diag.real_residue_rel.max(rel(l.re.abs(), w * led.hmag[&key][&a]));
        }
        let anti = (l12 + l21).norm();
        diag.antisymmetry = diag.antisymmetry.max(anti);
        diag.antisymmetry_rel = diag.antisymmetry_rel.max(rel(anti, w * (led.hmag[&(0, 1)][&a] + led.hmag[&(1, 0)][&a])));
        ta.insert(a, l11.im - sig);
        tb.insert(a, l12.im);
        tc.insert(a, l22.im - sig);
        for key in [(0, 0), (1, 1), (0, 1), (1, 0)] {
            let target = match (a, key) {
                ((0, 0), (0, 0)) => -i * 4.0 * PI,
                ((0, 0), (1, 1)) => i * 4.0 * PI,
                _ => Complex64::new(0.0, 0.0),
            };
            let d = (led.jvv[&key][&a] - target).norm();
            diag.symplectic = diag.symplectic.max(d);
            diag.symplectic_rel = diag.symplectic_rel.max(rel(d, led.jmag[&key][&a]));
        }
    }
    for o in [(1, 0), (2, 0), (0, 1), (1, 1), (2, 1)] {
        diag.b_low_order = diag.b_low_order.max(tb[&o].abs());
        diag.b_low_order_rel = diag.b_low_order_rel.max(rel(tb[&o].abs(), w * led.hmag[&(0, 1)][&o]));
    }

    let km = KatoMatrix {
        h: ctx.h,
        beta_star: ctx.beta_star,
        sigma: ctx.sigma,
        a01: ta[&(0, 1)],
        a20: ta[&(2, 0)],
        a02: ta[&(0, 2)],
        a21: ta[&(2, 1)],
        a03: ta[&(0, 3)],
        c01: tc[&(0, 1)],
        c20: tc[&(2, 0)],
        c02: tc[&(0, 2)],
        c21: tc[&(2, 1)],
        c03: tc[&(0, 3)],
        b30: tb[&(3, 0)],
        a: ta,
        b: tb,
        c: tc,
        diagnostics: diag,
    };
    Ok(km)
}

/// Fails with the first violated structural identity.
pub fn check_invariants(km: &KatoMatrix) -> Result<()> {
    let d = &km.diagnostics;
    if d.real_residue_rel > 1e-9 {
        return Err(Error::Invariant(format!("L not purely imaginary: real residue {:e}", d.real_residue)));
    }
    if d.antisymmetry_rel > 1e-10 {
        return Err(Error::Invariant(format!("L12 ≠ −L21: defect {:e}", d.antisymmetry)));
    }
    if d.symplectic_rel > 1e-9f64.max(1e-15 * d.conditioning) {
        return Err(Error::Invariant(format!("symplectic pairing drifts by {:e}", d.symplectic)));
    }
    if d.b_low_order_rel > 1e-9 {
        return Err(Error::Invariant(format!("low-order off-diagonal coefficient {:e}", d.b_low_order)));
    }
    if !(km.a01 < 0.0 && km.c01 > 0.0) {
        return Err(Error::Invariant(format!("a01 = {} and c01 = {} violate a01 < 0 < c01", km.a01, km.c01)));
    }
    Ok(())
}

/// `b₃₀` at depth `h`.
pub fn b30(h: f64) -> Result<f64> {
    let ctx = DepthContext::new(h)?;
    let t = ExpansionTables::from_context(&ctx);
    Ok(assemble_matrix_coeffs(&ctx, &t)?.b30)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn setup(h: f64) -> (DepthContext, HamiltonianExpansion, ContourSpec) {
        let ctx = DepthContext::new(h).unwrap();
        let t = ExpansionTables::from_context(&ctx);
        let ham = HamiltonianExpansion::build(&ctx, &t, DEFAULT_CUTOFF).unwrap();
        let spec = ContourSpec::for_context(&ctx, DEFAULT_CUTOFF).unwrap();
        (ctx, ham, spec)
    }

    #[test]
    fn resolvent_inverts_unperturbed_block() {
        let (ctx, _, _) = setup(1.0);
        let (u1, _) = eigen_basis(&ctx);
        let lam = Complex64::new(0.1, ctx.sigma);
        let a0 = |k| crate::dno::r0_coeff(k, ctx.beta_star, 1.0);
        let x = resolvent_apply(lam, &u1, &ctx, &a0).unwrap();
        let [x0, x1] = x.get(1);
        let d = Complex64::new(0.0, ctx.c0) - lam;
        let back = [d * x0 + a0(1) * x1, -x0 + d * x1];
        assert!((back[0] - u1.get(1)[0]).norm() < 1e-11 && (back[1] - u1.get(1)[1]).norm() < 1e-11);
        let v = ModeVector::single(5, [Complex64::new(1.0, 0.0), Complex64::new(0.0, 2.0)]);
        assert_eq!(resolvent_apply(lam, &v, &ctx, &a0).unwrap().support(0.0), vec![5]);
    }

    #[test]
    fn order_zero_projector_is_identity_on_the_eigenspace() {
        let (ctx, _, spec) = setup(1.0);
        let (u1, u2) = eigen_basis(&ctx);
        let a0 = |k| crate::dno::r0_coeff(k, ctx.beta_star, 1.0);
        let v = u1.scale(Complex64::new(0.3, -0.2)).add(&u2.scale(Complex64::new(-1.1, 0.4)));
        let p = |x: &ModeVector| {
            let mut acc = ModeVector::new();
            for (lam, w) in spec.points(64) {
                acc.axpy(-w, &resolvent_apply(lam, x, &ctx, &a0).unwrap());
            }
            acc
        };
        let once = p(&v);
        let twice = p(&once);
        assert!(once.sub(&v).max_abs() < 1e-10);
        assert!(twice.sub(&v).max_abs() < 1e-10);
    }

    #[test]
    fn contour_supports_and_quadrature() {
        let (ctx, ham, spec) = setup(1.0);
        let kc = KatoContext::new(&ctx, &ham);
        assert_eq!(contour_p((0, 1), 1, &kc, &spec).unwrap().support(1e-12), vec![1]);
        assert_eq!(contour_p((1, 0), 2, &kc, &spec).unwrap().support(1e-12), vec![-3, -1]);
        let u = eigen_basis(&ctx).0;
        let a = kc.project_all_n(&u, &spec, 64).unwrap().0;
        let b = kc.project_all_n(&u, &spec, 128).unwrap().0;
        for o in ORDERS {
            assert!(a[&o].sub(&b[&o]).max_abs() < 1e-11, "{o:?}");
        }
    }

    #[test]
    fn perturbed_basis_supports() {
        let (ctx, ham, spec) = setup(1.0);
        let kc = KatoContext::new(&ctx, &ham);
        let v1 = perturbed_basis_all(1, &kc, &spec).unwrap();
        let v2 = perturbed_basis_all(2, &kc, &spec).unwrap();
        let expect1: [(Order, Vec<i32>); 5] =
            [((1, 0), vec![0, 2]), ((0, 1), vec![1]), ((2, 0), vec![-1, 1, 3]), ((3, 0), vec![-2, 0, 2, 4]), ((1, 2), vec![0, 2])];
        for (o, s) in expect1 {
            assert_eq!(v1[&o].support(1e-12), s, "{o:?}");
        }
        assert_eq!(v2[&(3, 0)].support(1e-12), vec![-5, -3, -1, 1]);
        assert_eq!(v2[&(2, 1)].support(1e-12), vec![-4, -2, 0]);
        assert_eq!(v2[&(0, 3)].support(1e-12), vec![-2]);
    }

    #[test]
    fn closed_form_first_order_coefficients() {
        for h in [0.3, 1.0, 3.0] {
            let ctx = DepthContext::new(h).unwrap();
            let t = ExpansionTables::from_context(&ctx);
            let km = assemble_matrix_coeffs(&ctx, &t).unwrap();
            assert!((km.a01 + ctx.tau1 / (2.0 * ctx.gamma1)).abs() < 1e-9, "h={h}");
            assert!((km.c01 - ctx.tau2 / (2.0 * ctx.gamma2)).abs() < 1e-9, "h={h}");
        }
    }

    #[test]
    fn deep_water_b30() {
        let b = b30(50.0).unwrap();
        assert!((b + 0.49476).abs() < 1e-3, "{b}");
    }
}
