//! Fourier-mode linear algebra for the linearized water-wave operator.
//!
//! A [`ModeVector`] stores the two components of a state on each wavenumber.
//! A [`ModeOperator`] is a banded action `(Tv)_k = Σ_s T(k, s) v_{k+s}` with
//! 2×2 blocks. The Hamiltonian expands as `H = Σ ε^j δ^ℓ H^{j,ℓ}` with
//! `β = β* + δ`, and the linearized operator is `L = J H` with `J = [[0, 1], [−1, 0]]`.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;

use crate::dispersion::DepthContext;
use crate::dno::MultiplierTable;
use crate::error::{Error, Result};
use crate::stokes::ExpansionTables;

pub use crate::dno::beta_derivative;

pub type Block = [[Complex64; 2]; 2];

/// Cutoff that contains every wavenumber reachable from `{1, −2}` at third order.
pub const DEFAULT_CUTOFF: i32 = 12;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

fn ic(im: f64) -> Complex64 {
    Complex64::new(0.0, im)
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ModeVector {
    pub entries: BTreeMap<i32, [Complex64; 2]>,
}

impl ModeVector {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn single(k: i32, v: [Complex64; 2]) -> Self {
        Self { entries: BTreeMap::from([(k, v)]) }
    }

    pub fn get(&self, k: i32) -> [Complex64; 2] {
        self.entries.get(&k).copied().unwrap_or([ZERO; 2])
    }

    pub fn add_at(&mut self, k: i32, v: [Complex64; 2]) {
        let e = self.entries.entry(k).or_insert([ZERO; 2]);
        e[0] += v[0];
        e[1] += v[1];
    }

    pub fn axpy(&mut self, a: Complex64, x: &ModeVector) {
        for (&k, v) in &x.entries {
            self.add_at(k, [a * v[0], a * v[1]]);
        }
    }

    pub fn add(&self, o: &ModeVector) -> ModeVector {
        let mut r = self.clone();
        r.axpy(c(1.0), o);
        r
    }

    pub fn sub(&self, o: &ModeVector) -> ModeVector {
        let mut r = self.clone();
        r.axpy(c(-1.0), o);
        r
    }

    pub fn scale(&self, a: Complex64) -> ModeVector {
        Self { entries: self.entries.iter().map(|(&k, v)| (k, [a * v[0], a * v[1]])).collect() }
    }

    /// `(U, V) = 2π Σ_k ⟨U_k, V_k⟩`, linear in the first slot.
    pub fn inner(&self, o: &ModeVector) -> Complex64 {
        let s: Complex64 = self
            .entries
            .iter()
            .map(|(k, u)| {
                let v = o.get(*k);
                u[0] * v[0].conj() + u[1] * v[1].conj()
            })
            .sum();
        s * 2.0 * PI
    }

    /// `J v` with `J = [[0, 1], [−1, 0]]`.
    pub fn apply_j(&self) -> ModeVector {
        Self { entries: self.entries.iter().map(|(&k, v)| (k, [v[1], -v[0]])).collect() }
    }

    pub fn max_abs(&self) -> f64 {
        self.entries.values().flat_map(|v| v.iter().map(|z| z.norm())).fold(0.0, f64::max)
    }

    /// Wavenumbers carrying an entry above `tol`.
    pub fn support(&self, tol: f64) -> Vec<i32> {
        self.entries.iter().filter(|(_, v)| v[0].norm() > tol || v[1].norm() > tol).map(|(&k, _)| k).collect()
    }
}

/// Banded operator with blocks indexed by output wavenumber and shift.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ModeOperator {
    pub cutoff: i32,
    /// `(k_out, s) → T(k_out, s)`, acting on the input mode `k_out + s`.
    pub blocks: BTreeMap<(i32, i32), Block>,
    pub order: (usize, usize),
}

impl ModeOperator {
    pub fn zero(cutoff: i32, order: (usize, usize)) -> Self {
        Self { cutoff, blocks: BTreeMap::new(), order }
    }

    fn add_entry(&mut self, k_out: i32, s: i32, row: usize, col: usize, v: Complex64) {
        if k_out.abs() > self.cutoff || (k_out + s).abs() > self.cutoff || v == ZERO {
            return;
        }
        self.blocks.entry((k_out, s)).or_insert([[ZERO; 2]; 2])[row][col] += v;
    }

    pub fn apply(&self, v: &ModeVector) -> ModeVector {
        let mut out = ModeVector::new();
        for (&(k, s), b) in &self.blocks {
            if let Some(x) = v.entries.get(&(k + s)) {
                out.add_at(k, [b[0][0] * x[0] + b[0][1] * x[1], b[1][0] * x[0] + b[1][1] * x[1]]);
            }
        }
        out
    }

    /// Shifts carrying a nonzero block.
    pub fn shifts(&self) -> Vec<i32> {
        let mut s: Vec<i32> = self.blocks.keys().map(|&(_, s)| s).collect();
        s.sort_unstable();
        s.dedup();
        s
    }

    /// Largest deviation from the L²-adjoint symmetry `T(k, s) = T(k+s, −s)^*`.
    pub fn adjoint_defect(&self) -> f64 {
        let mut d: f64 = 0.0;
        for (&(k, s), b) in &self.blocks {
            let t = self.blocks.get(&(k + s, -s)).copied().unwrap_or([[ZERO; 2]; 2]);
            for r in 0..2 {
                for col in 0..2 {
                    d = d.max((b[r][col] - t[col][r].conj()).norm());
                }
            }
        }
        d
    }
}

/// Cosine coefficients `(m, amplitude)` of order `j` in `(1+q)/ζ'` and `p`.
fn cosine_series(j: usize, t: &ExpansionTables) -> (Vec<(i32, f64)>, Vec<(i32, f64)>) {
    match j {
        0 => (vec![(0, 1.0)], vec![(0, t.c0)]),
        1 => (vec![(1, t.r11)], vec![(1, t.p11)]),
        2 => (vec![(0, t.r20), (2, t.r22)], vec![(0, t.p20), (2, t.p22)]),
        3 => (vec![(1, t.r31), (3, t.r33)], vec![(1, t.p31), (3, t.p33)]),
        _ => (vec![], vec![]),
    }
}

/// `H^{j,ℓ}` given the `ℓ`-th β-Taylor coefficients of the multipliers at `β*`.
pub fn build_h(j: usize, ell: usize, tables: &ExpansionTables, multipliers: &MultiplierTable, cutoff: i32) -> Result<ModeOperator> {
    if j > 3 || ell > 3 {
        return Err(Error::Domain(format!("H^({j},{ell}) outside the third-order expansion")));
    }
    if multipliers.kmin > -cutoff || multipliers.kmax < cutoff {
        return Err(Error::Domain("multiplier table does not cover the cutoff".into()));
    }
    let mut op = ModeOperator::zero(cutoff, (j, ell));
    if ell == 0 {
        let (r, p) = cosine_series(j, tables);
        for k_in in -cutoff..=cutoff {
            let kf = k_in as f64;
            for &(m, a) in &r {
                for sgn in if m == 0 { vec![0] } else { vec![-1, 1] } {
                    let w = if m == 0 { a } else { 0.5 * a };
                    op.add_entry(k_in + sgn * m, -sgn * m, 0, 0, c(w));
                }
            }
            for &(m, a) in &p {
                for sgn in if m == 0 { vec![0] } else { vec![-1, 1] } {
                    let w = if m == 0 { a } else { 0.5 * a };
                    let k_out = k_in + sgn * m;
                    op.add_entry(k_out, -sgn * m, 0, 1, ic(-w * kf));
                    op.add_entry(k_out, -sgn * m, 1, 0, ic(w * k_out as f64));
                }
            }
        }
    }
    for k in -cutoff..=cutoff {
        let row = multipliers.row(k).expect("covered");
        for &s in crate::dno::shifts(j) {
            op.add_entry(k, s, 1, 1, c(row.coeff(j, s)));
        }
    }
    Ok(op)
}

/// Every `H^{j,ℓ}` with `j + ℓ ≤ 3`, at `β = β*`.
#[derive(Debug, Clone)]
pub struct HamiltonianExpansion {
    pub cutoff: i32,
    pub blocks: BTreeMap<(usize, usize), ModeOperator>,
}

impl HamiltonianExpansion {
    pub fn build(ctx: &DepthContext, tables: &ExpansionTables, cutoff: i32) -> Result<Self> {
        let mut blocks = BTreeMap::new();
        for ell in 0..=3 {
            let m = MultiplierTable::taylor(ell, ctx.beta_star, ctx.h, tables, -cutoff, cutoff)?;
            for j in 0..=(3 - ell) {
                blocks.insert((j, ell), build_h(j, ell, tables, &m, cutoff)?);
            }
        }
        Ok(Self { cutoff, blocks })
    }

    pub fn get(&self, j: usize, ell: usize) -> Option<&ModeOperator> {
        self.blocks.get(&(j, ell))
    }
}

/// The unperturbed eigenvectors `U₁ ∝ e^{ix}` and `U₂ ∝ e^{−2ix}`.
pub fn eigen_basis(ctx: &DepthContext) -> (ModeVector, ModeVector) {
    (
        ModeVector::single(1, [ic(ctx.gamma1), c(1.0)]),
        ModeVector::single(-2, [ic(-ctx.gamma2), c(1.0)]),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn setup(h: f64) -> (DepthContext, ExpansionTables, HamiltonianExpansion) {
        let ctx = DepthContext::new(h).unwrap();
        let t = ExpansionTables::from_context(&ctx);
        let hx = HamiltonianExpansion::build(&ctx, &t, DEFAULT_CUTOFF).unwrap();
        (ctx, t, hx)
    }

    #[test]
    fn eigen_relation_at_order_zero() {
        let (ctx, _, hx) = setup(1.0);
        let (u1, u2) = eigen_basis(&ctx);
        for u in [u1, u2] {
            let lu = hx.get(0, 0).unwrap().apply(&u).apply_j();
            let d = lu.sub(&u.scale(ic(ctx.sigma)));
            assert!(d.max_abs() < 1e-10);
        }
    }

    #[test]
    fn first_order_shifts() {
        let (_, _, hx) = setup(1.0);
        assert_eq!(hx.get(1, 0).unwrap().shifts(), vec![-1, 1]);
        assert_eq!(hx.get(2, 0).unwrap().shifts(), vec![-2, 0, 2]);
        assert_eq!(hx.get(0, 2).unwrap().shifts(), vec![0]);
    }

    #[test]
    fn delta_derivative_of_symbol() {
        let (ctx, _, hx) = setup(1.0);
        let b = hx.get(0, 1).unwrap().blocks[&(1, 0)][1][1];
        assert!((b.re - ctx.tau1).abs() < 1e-12);
        // ∂_β A⁰_1 = τ₁ = −2γ₁ a₀₁.
        assert!((b.re + 2.0 * ctx.gamma1 * (-ctx.tau1 / (2.0 * ctx.gamma1))).abs() < 1e-12);
    }

    #[test]
    fn symplectic_pairings() {
        let (ctx, _, _) = setup(1.3);
        let (u1, u2) = eigen_basis(&ctx);
        let four_pi = 4.0 * PI;
        assert!((u1.apply_j().inner(&u1) - ic(-four_pi * ctx.gamma1)).norm() < 1e-12);
        assert!((u2.apply_j().inner(&u2) - ic(four_pi * ctx.gamma2)).norm() < 1e-12);
        assert!(u1.apply_j().inner(&u2).norm() < 1e-15);
    }

    #[test]
    fn support_table() {
        let (ctx, _, hx) = setup(1.0);
        let (u1, u2) = eigen_basis(&ctx);
        let h1 = hx.get(1, 0).unwrap();
        let h2 = hx.get(2, 0).unwrap();
        assert_eq!(h1.apply(&u1).support(1e-14), vec![0, 2]);
        assert_eq!(h1.apply(&h1.apply(&u2)).support(1e-14), vec![-4, -2, 0]);
        assert_eq!(h2.apply(&h1.apply(&u2)).support(1e-14), vec![-5, -3, -1, 1]);
    }

    fn vector_strategy() -> impl Strategy<Value = ModeVector> {
        proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0, -1.0f64..1.0, -1.0f64..1.0), 11).prop_map(|v| ModeVector {
            entries: v
                .into_iter()
                .enumerate()
                .map(|(i, (a, b, c2, d))| (i as i32 - 5, [Complex64::new(a, b), Complex64::new(c2, d)]))
                .collect(),
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn hamiltonian_blocks_are_self_adjoint(u in vector_strategy(), v in vector_strategy()) {
            let hx = HX.with(|h| h.clone());
            for j in 0..=3 {
                let op = hx.get(j, 0).unwrap();
                let l = op.apply(&u).inner(&v);
                let r = u.inner(&op.apply(&v));
                prop_assert!((l - r).norm() < 1e-10 * (1.0 + l.norm()));
            }
        }
    }

    thread_local! {
        static HX: HamiltonianExpansion = setup(1.0).2;
    }

    #[test]
    fn adjoint_defect_vanishes() {
        let (_, _, hx) = setup(0.7);
        for op in hx.blocks.values() {
            assert!(op.adjoint_defect() < 1e-10, "{:?} {}", op.order, op.adjoint_defect());
        }
    }
}
