//! Order-by-order solution of the flattened Helmholtz problem for a unit mode.
//!
//! With `Θ = Σ ε^j Θ^j` and `J = Σ ε^n J_n`, each order solves
//! `Θ^j_zz − (k²+β)Θ^j = β Σ_{n=1..j} (J_n Θ^{j−n})_k` on `(−h, 0)` with
//! `Θ^j(0) = 0` and `Θ^j_z(−h) = h₂ Θ^{j−2}_zz(−h)`. Then `R_j e^{ik₀x}` has
//! Fourier coefficients `Θ^j_z(k, 0)`.

use std::collections::BTreeMap;

use super::jacobian::JacobianSeries;
use super::profile::{solve_bvp, ExpPoly, VerticalProfile};
use crate::error::Result;

/// All orders `0..=3` of the response to the input mode `e^{i k_in x}`.
#[derive(Debug, Clone)]
pub struct Cascade {
    pub k_in: i32,
    pub beta: f64,
    pub h: f64,
    /// `orders[j][k]` is `Θ̂^j(k, ·)`.
    pub orders: Vec<BTreeMap<i32, VerticalProfile>>,
}

impl Cascade {
    pub fn solve(k_in: i32, beta: f64, h2: f64, jac: &JacobianSeries, max_order: usize) -> Result<Self> {
        let h = jac.h;
        let kappa = |k: i32| ((k as f64).powi(2) + beta).sqrt();
        let mut orders: Vec<BTreeMap<i32, VerticalProfile>> = Vec::with_capacity(max_order + 1);
        let base = solve_bvp(&ExpPoly::zero(h), kappa(k_in), 1.0, 0.0, k_in, 0)?;
        orders.push(BTreeMap::from([(k_in, base)]));
        for j in 1..=max_order {
            let mut forcing: BTreeMap<i32, ExpPoly> = BTreeMap::new();
            for n in 1..=j {
                for (&k_prev, prof) in &orders[j - n] {
                    for m in -3..=3 {
                        if let Some(jm) = jac.terms.get(&(n, m)) {
                            let f = forcing.entry(k_prev + m).or_insert_with(|| ExpPoly::zero(h));
                            f.add_assign(&jm.mul(&prof.solution).scale(beta));
                        }
                    }
                }
            }
            let mut level = BTreeMap::new();
            for (k, f) in forcing {
                let f = f.canonical();
                let neumann = if j >= 2 {
                    orders[j - 2]
                        .get(&k)
                        .map(|p| h2 * p.solution.derivative().derivative().eval(-h))
                        .unwrap_or(0.0)
                } else {
                    0.0
                };
                if f.terms.is_empty() && neumann == 0.0 {
                    continue;
                }
                level.insert(k, solve_bvp(&f, kappa(k), 0.0, neumann, k, j)?);
            }
            orders.push(level);
        }
        Ok(Self { k_in, beta, h, orders })
    }

    /// `∂_z Θ̂^j(k_out, 0)`, the coefficient of `e^{i k_out x}` in `R_j e^{i k_in x}`.
    pub fn trace(&self, j: usize, k_out: i32) -> f64 {
        self.orders.get(j).and_then(|l| l.get(&k_out)).map(|p| p.trace()).unwrap_or(0.0)
    }

    pub fn profile(&self, j: usize, k_out: i32) -> Option<&VerticalProfile> {
        self.orders.get(j).and_then(|l| l.get(&k_out))
    }
}
