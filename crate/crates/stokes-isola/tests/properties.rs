use std::sync::OnceLock;

use num_complex::Complex64;
use proptest::prelude::*;
use stokes_isola::dispersion::solve_beta_star;
use stokes_isola::isola::{asymptotic_eigenvalues, characteristic, eigenvalues, kato_at, IsolaGeometry};
use stokes_isola::kato::KatoMatrix;

fn km(h: f64) -> &'static KatoMatrix {
    static CACHE: OnceLock<Vec<(f64, KatoMatrix)>> = OnceLock::new();
    let all = CACHE.get_or_init(|| [0.6, 1.0, 2.0].iter().map(|&h| (h, kato_at(h).unwrap())).collect());
    &all.iter().find(|(x, _)| *x == h).expect("cached depth").1
}

fn depth() -> impl Strategy<Value = f64> {
    prop::sample::select(vec![0.6, 1.0, 2.0])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn reduced_eigenvalues_are_roots(h in depth(), eps in 0.0..0.05f64, delta in -0.05..0.05f64) {
        let km = km(h);
        let (p, m) = eigenvalues(km, eps, delta);
        let scale = 1.0 + p.norm();
        prop_assert!(characteristic(km, eps, delta, p).norm() < 1e-12 * scale);
        prop_assert!(characteristic(km, eps, delta, m).norm() < 1e-12 * scale);
    }

    #[test]
    fn reduced_pair_is_hamiltonian(h in depth(), eps in 0.0..0.05f64, delta in -0.05..0.05f64) {
        let (p, m) = eigenvalues(km(h), eps, delta);
        prop_assert!((p + m.conj()).re.abs() < 1e-15);
        prop_assert!((p.im - m.im).abs() < 1e-15 || (p.re.abs() < 1e-15 && m.re.abs() < 1e-15));
    }

    #[test]
    fn truncated_isola_lies_on_the_ellipse(h in depth(), eps in 1e-3..0.05f64, frac in -0.999..0.999f64) {
        let km = km(h);
        let g = IsolaGeometry::new(km, eps);
        let (p, m) = asymptotic_eigenvalues(km, eps, frac * g.kappa1);
        prop_assert!(g.residual(p).abs() < 1e-6);
        prop_assert!(g.residual(m).abs() < 1e-6);
        prop_assert!(p.re > 0.0 && (p.re + m.re).abs() < 1e-18);
    }

    #[test]
    fn truncated_pair_is_neutral_outside_the_band(h in depth(), eps in 1e-3..0.05f64, factor in 1.001..10.0f64) {
        let km = km(h);
        let (p, m) = asymptotic_eigenvalues(km, eps, factor * km.kappa1());
        prop_assert_eq!(p.re, 0.0);
        prop_assert_eq!(m.re, 0.0);
    }

    #[test]
    fn resonant_wavenumber_is_monotone_in_depth(h in 0.02..20.0f64, dh in 1e-3..1.0f64) {
        let a = solve_beta_star(h, 1e-13).unwrap();
        let b = solve_beta_star(h + dh, 1e-13).unwrap();
        prop_assert!(b >= a);
    }
}

#[test]
fn unperturbed_reduced_pair_is_the_resonant_eigenvalue() {
    for h in [0.6, 1.0, 2.0] {
        let km = km(h);
        let (p, m) = eigenvalues(km, 0.0, 0.0);
        let target = Complex64::new(0.0, km.sigma);
        assert!((p - target).norm() < 1e-14 && (m - target).norm() < 1e-14);
    }
}
