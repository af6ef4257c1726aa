//! Invariants over random quasi-Hermitian families `H(λ) = S Hₕ(λ) S⁻¹`, with `Hₕ` Hermitian
//! and `S` a random invertible similarity, so every spectrum is real.

use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;
use ptqgt_core::biortho::cross_overlap;
use ptqgt_core::family::Regauged;
use ptqgt_core::geometry::{fidelity, qgt, variance_metric};
use ptqgt_core::linalg::{c, inverse, max_abs};
use ptqgt_core::{biortho_eig, build_w, gauge_transform, CMatrix, FnFamily, HamiltonianFamily};

const DIM: usize = 3;

fn complex_matrix(entries: &[(f64, f64)]) -> CMatrix {
    CMatrix::from_iterator(DIM, DIM, entries.iter().map(|&(a, b)| c(a, b)))
}

fn hermitian(entries: &[(f64, f64)]) -> CMatrix {
    let m = complex_matrix(entries);
    (&m + m.adjoint()).scale(0.5)
}

#[derive(Debug, Clone)]
struct Draw {
    h0: Vec<(f64, f64)>,
    h1: Vec<(f64, f64)>,
    h2: Vec<(f64, f64)>,
    s: Vec<(f64, f64)>,
}

fn entries() -> impl Strategy<Value = Vec<(f64, f64)>> {
    prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), DIM * DIM)
}

fn draws() -> impl Strategy<Value = Draw> {
    (entries(), entries(), entries(), entries()).prop_map(|(h0, h1, h2, s)| Draw { h0, h1, h2, s })
}

/// Spreads the diagonal of `H₀` so levels stay separated over the sampled region.
fn family(sp: &Draw) -> FnFamily {
    let mut h0 = hermitian(&sp.h0);
    for i in 0..DIM {
        h0[(i, i)] += c(2.0 * i as f64, 0.0);
    }
    let (h1, h2) = (hermitian(&sp.h1).scale(0.3), hermitian(&sp.h2).scale(0.3));
    let s = CMatrix::identity(DIM, DIM) + complex_matrix(&sp.s).scale(0.25);
    let s_inv = inverse(&s).expect("near-identity similarity is invertible");
    let (d1, d2) = (&s * &h1 * &s_inv, &s * &h2 * &s_inv);
    FnFamily::new(DIM, 2, move |l| &s * (&h0 + h1.scale(l[0]) + h2.scale(l[1])) * &s_inv)
        .with_derivative(move |_, mu| if mu == 0 { d1.clone() } else { d2.clone() })
}

fn worst(m: &DMatrix<f64>) -> f64 {
    m.abs().max()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn eigensystem_is_biorthonormal_and_w_intertwines(sp in draws(), x in -0.5..0.5f64, y in -0.5..0.5f64) {
        let f = family(&sp);
        let h = f.evaluate(&[x, y]);
        let eig = biortho_eig(&h, Default::default()).unwrap();
        prop_assert!(eig.unbroken);
        let scale = 1.0 + max_abs(&h);
        prop_assert!(eig.residual(&h) < 1e-10 * scale);
        prop_assert!(eig.biorthonormality_residual() < 1e-10);
        prop_assert!(eig.completeness_residual() < 1e-9);
        let w = build_w(&eig).unwrap();
        prop_assert!(w.intertwining_residual(&h) < 1e-9 * scale * (1.0 + max_abs(&w.matrix)));
    }

    #[test]
    fn qgt_is_hermitian_and_split_consistently(sp in draws(), x in -0.5..0.5f64, y in -0.5..0.5f64, n in 0..DIM) {
        let q = qgt(&family(&sp), &[x, y], n, 1e-5).unwrap();
        let scale = 1.0 + q.q.iter().map(|z| z.norm()).fold(0.0, f64::max);
        prop_assert!(q.hermiticity_residual() < 1e-9 * scale);
        let (omega, g) = (q.curvature(), q.metric());
        prop_assert!(worst(&(&omega + omega.transpose())) < 1e-9 * scale);
        prop_assert!(worst(&(&g - g.transpose())) < 1e-9 * scale);
    }

    #[test]
    fn qgt_is_gauge_invariant(sp in draws(), x in -0.5..0.5f64, y in -0.5..0.5f64,
                              a in prop::collection::vec((-3.0..3.0f64, 0.3..3.0f64), DIM)) {
        let f = family(&sp);
        let plain = qgt(&f, &[x, y], 0, 1e-5).unwrap();
        // Smooth, parameter-dependent complex rescalings of every level.
        let gauge = |l: &[f64]| -> Vec<Complex64> {
            a.iter().map(|&(ph, m)| Complex64::from_polar(m * (1.0 + 0.2 * l[0]), ph * (l[0] - 2.0 * l[1]))).collect()
        };
        let twisted = qgt(&Regauged { family: &f, gauge }, &[x, y], 0, 1e-5).unwrap();
        let err = (&plain.q - &twisted.q).iter().map(|z| z.norm()).fold(0.0, f64::max);
        prop_assert!(err < 1e-7 * (1.0 + plain.q.iter().map(|z| z.norm()).fold(0.0, f64::max)), "{err:e}");
    }

    #[test]
    fn gauge_transform_round_trips(sp in draws(), fs in prop::collection::vec((0.1..4.0f64, -3.0..3.0f64), DIM)) {
        let eig = biortho_eig(&family(&sp).evaluate(&[0.1, -0.2]), Default::default()).unwrap();
        let f: Vec<Complex64> = fs.iter().map(|&(m, ph)| Complex64::from_polar(m, ph)).collect();
        let inv: Vec<Complex64> = f.iter().map(|z| 1.0 / z).collect();
        let t = gauge_transform(&eig, &f).unwrap();
        prop_assert!(t.biorthonormality_residual() < 1e-10);
        let back = gauge_transform(&t, &inv).unwrap();
        prop_assert!(max_abs(&(&back.right - &eig.right)) < 1e-12 * (1.0 + max_abs(&eig.right)));
        prop_assert!(max_abs(&(&back.left - &eig.left)) < 1e-12 * (1.0 + max_abs(&eig.left)));
        for n in 0..DIM {
            prop_assert!((cross_overlap(&t, n, &t, n) - 1.0).norm() < 1e-12);
        }
    }

    #[test]
    fn fidelity_is_symmetric_and_second_order(sp in draws(), x in -0.4..0.4f64, y in -0.4..0.4f64,
                                              dir in (-1.0..1.0f64, -1.0..1.0f64)) {
        prop_assume!(dir.0.hypot(dir.1) > 0.2);
        let f = family(&sp);
        let e0 = biortho_eig(&f.evaluate(&[x, y]), Default::default()).unwrap();
        prop_assert!((fidelity(&e0, &e0, 0).unwrap() - 1.0).abs() < 1e-12);
        let g = qgt(&f, &[x, y], 0, 1e-5).unwrap().metric();
        let quad = g[(0, 0)] * dir.0 * dir.0 + 2.0 * g[(0, 1)] * dir.0 * dir.1 + g[(1, 1)] * dir.1 * dir.1;
        let remainder = |d: f64| {
            let e = biortho_eig(&f.evaluate(&[x + d * dir.0, y + d * dir.1]), Default::default()).unwrap();
            prop_assert!((fidelity(&e0, &e, 0).unwrap() - fidelity(&e, &e0, 0).unwrap()).abs() < 1e-14);
            Ok(2.0 * (1.0 - fidelity(&e0, &e, 0).unwrap()) - quad * d * d)
        };
        let (r1, r2) = (remainder(2e-3)?, remainder(1e-3)?);
        // The remainder is at least third order: halving δ shrinks it by 8 or more, up to
        // round-off of order 1e-13 in 1 − F.
        prop_assert!(r2.abs() <= r1.abs() / 6.0 + 1e-12, "{r1:e} {r2:e}");
    }

    #[test]
    fn finite_differences_are_step_consistent(sp in draws(), x in -0.5..0.5f64, y in -0.5..0.5f64) {
        let f = family(&sp);
        let coarse = qgt(&f, &[x, y], 1, 2e-4).unwrap();
        let fine = qgt(&f, &[x, y], 1, 1e-4).unwrap();
        let finer = qgt(&f, &[x, y], 1, 5e-5).unwrap();
        let d1 = (&coarse.q - &fine.q).iter().map(|z| z.norm()).fold(0.0, f64::max);
        let d2 = (&fine.q - &finer.q).iter().map(|z| z.norm()).fold(0.0, f64::max);
        // O(h²) truncation: successive differences shrink by about 4.
        prop_assert!(d2 <= d1 / 2.5 + 1e-9, "{d1:e} {d2:e}");
    }

    #[test]
    fn variance_form_matches_qgt_metric(sp in draws(), x in -0.5..0.5f64, y in -0.5..0.5f64) {
        let f = family(&sp);
        let g = qgt(&f, &[x, y], 0, 1e-5).unwrap().metric();
        let v = variance_metric(&f, &[x, y], 1e-5).unwrap();
        prop_assert!(worst(&(&g - &v)) <= 1e-8 * (1.0 + worst(&g)));
    }
}
