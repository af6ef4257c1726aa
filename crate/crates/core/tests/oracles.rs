//! Library results against independent references: closed forms, a Hermitian eigensolver with
//! sum-over-states, Simpson quadrature, and finite-size momentum sums.

use std::f64::consts::{FRAC_PI_2, PI};

use nalgebra::DMatrix;
use num_complex::Complex64;
use ptqgt_core::geometry::{berry_phase_loop, curvature_flux, qgt, LoopSpec, Rectangle};
use ptqgt_core::models::{SpinHalf, SpinHalfSphere};
use ptqgt_core::xy_chain::{
    block_metric, dispersion, dk_derivative, dk_matrix, metric_intensity, unbroken_at, FieldPoint, IntensityOptions,
    MetricRoute, XYParams,
};
use ptqgt_core::{biortho_eig, CMatrix, HamiltonianFamily};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Standard Hermitian QGT `Σ_{m≠n} ⟨n|∂_μH|m⟩⟨m|∂_νH|n⟩ / (E_n − E_m)²` from a Hermitian solver.
fn hermitian_qgt(h: &CMatrix, dh: &[CMatrix], n: usize) -> CMatrix {
    let se = h.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..h.nrows()).collect();
    order.sort_by(|&a, &b| se.eigenvalues[a].total_cmp(&se.eigenvalues[b]));
    let u = &se.eigenvectors;
    let v: Vec<CMatrix> = dh.iter().map(|d| u.adjoint() * d * u).collect();
    let nn = order[n];
    CMatrix::from_fn(dh.len(), dh.len(), |mu, nu| {
        let mut acc = Complex64::new(0.0, 0.0);
        for m in (0..h.nrows()).filter(|&m| m != nn) {
            let de = se.eigenvalues[nn] - se.eigenvalues[m];
            acc += v[mu][(nn, m)] * v[nu][(m, nn)] / (de * de);
        }
        acc
    })
}

#[test]
fn spin_half_qgt_matches_hermitian_sum_over_states() {
    let p = [0.1, 0.2, 0.5];
    let h = SpinHalf.evaluate(&p);
    let dh: Vec<CMatrix> = (0..3).map(|mu| SpinHalf.derivative(&p, mu).unwrap()).collect();
    for n in 0..2 {
        let q = qgt(&SpinHalf, &p, n, 1e-5).unwrap();
        let oracle = hermitian_qgt(&h, &dh, n);
        let err = (&q.q - &oracle).iter().map(|z| z.norm()).fold(0.0, f64::max);
        assert!(err < 1e-8, "level {n}: {err:e}");
    }
}

#[test]
fn spin_half_metric_matches_closed_form() {
    // g_ij = (δ_ij − n_i n_j) / (4|B|²) for either level of B·σ.
    let b = [0.3, -0.4, 0.7];
    let b2: f64 = b.iter().map(|x| x * x).sum();
    let nhat: Vec<f64> = b.iter().map(|x| x / b2.sqrt()).collect();
    let g = qgt(&SpinHalf, &b, 0, 1e-5).unwrap().metric();
    for i in 0..3 {
        for j in 0..3 {
            let delta = if i == j { 1.0 } else { 0.0 };
            let expect = (delta - nhat[i] * nhat[j]) / (4.0 * b2);
            assert!((g[(i, j)] - expect).abs() < 1e-8, "({i},{j})");
        }
    }
}

fn latitude_loop(theta: f64, m: usize, level: usize) -> LoopSpec {
    let v = (0..m).map(|i| vec![theta, 2.0 * PI * i as f64 / m as f64]).collect();
    LoopSpec::closed(v, level)
}

#[test]
fn latitude_loop_phase_is_half_the_solid_angle() {
    for theta in [0.4, 1.0, 2.2] {
        let half_solid = PI * (1.0 - f64::cos(theta));
        let wrap = |x: f64| (x + PI).rem_euclid(2.0 * PI) - PI;
        let g0 = berry_phase_loop(&SpinHalfSphere, &latitude_loop(theta, 400, 0)).unwrap();
        let g1 = berry_phase_loop(&SpinHalfSphere, &latitude_loop(theta, 400, 1)).unwrap();
        // The anti-aligned level picks up +Ω/2, the aligned one −Ω/2.
        assert!(wrap(g0 - half_solid).abs() < 1e-4, "theta {theta}: {g0}");
        assert!(wrap(g1 + half_solid).abs() < 1e-4, "theta {theta}: {g1}");
    }
}

#[test]
fn sphere_stokes_and_monopole_flux() {
    let rect = Rectangle { base: vec![0.0, 0.0], plane: (0, 1), lo: [0.5, 0.0], hi: [1.3, 1.5], resolution: 48 };
    let flux = curvature_flux(&SpinHalfSphere, &rect, 0, None).unwrap();
    // Ground-level curvature 2Ω_θφ = −sin θ / 2 integrates to −(cos 0.5 − cos 1.3)·1.5/2.
    let expect = -(f64::cos(0.5) - f64::cos(1.3)) * 1.5 / 2.0;
    assert!((flux - expect).abs() < 1e-4, "{flux} vs {expect}");
    let gamma = berry_phase_loop(&SpinHalfSphere, &rect.boundary_loop(0)).unwrap();
    assert!((gamma + flux).abs() < 1e-3, "{gamma} + {flux}");
}

/// Per-mode ground-state metric at η = 0 from a Hermitian solver. The `h` direction is
/// Hermitian; the `η` direction is anti-Hermitian, so its products carry their own sign.
fn hermitian_block_metric(p: &XYParams, h: f64, k: f64) -> [f64; 3] {
    let d = dk_matrix(p, FieldPoint::new(h, 0.0), k).unwrap();
    let dh = [dk_derivative(0), dk_derivative(1)];
    let se = d.clone().symmetric_eigen();
    let u = &se.eigenvectors;
    let v: Vec<CMatrix> = dh.iter().map(|x| u.adjoint() * x * u).collect();
    let mut g = [0.0; 3];
    for n in (0..4).filter(|&n| se.eigenvalues[n] < 0.0) {
        for m in (0..4).filter(|&m| m != n) {
            let de = se.eigenvalues[n] - se.eigenvalues[m];
            let term =
                |a: usize, b: usize| (v[a][(n, m)] * v[b][(m, n)] + v[a][(m, n)] * v[b][(n, m)]).re / (2.0 * de * de);
            g[0] += term(0, 0);
            g[1] += term(0, 1);
            g[2] += term(1, 1);
        }
    }
    g
}

fn simpson(f: impl Fn(f64) -> [f64; 3], a: f64, b: f64, intervals: usize) -> [f64; 3] {
    let hstep = (b - a) / intervals as f64;
    let mut acc = [0.0; 3];
    for i in 0..=intervals {
        let w = if i == 0 || i == intervals {
            1.0
        } else if i % 2 == 1 {
            4.0
        } else {
            2.0
        };
        let v = f(a + i as f64 * hstep);
        for (s, x) in acc.iter_mut().zip(v) {
            *s += w * x;
        }
    }
    acc.map(|s| s * hstep / 3.0)
}

#[test]
fn hermitian_line_intensity_matches_simpson_oracle() {
    let p = XYParams::anisotropic_reference();
    let opts = IntensityOptions { n_quad: 129, ..Default::default() };
    for h in [0.3, 1.2, 2.5] {
        let g = metric_intensity(&p, FieldPoint::new(h, 0.0), &opts).unwrap();
        // Simpson touches the endpoints; nudge them inside the open interval.
        let oracle =
            simpson(|k| hermitian_block_metric(&p, h, k.clamp(1e-12, FRAC_PI_2 - 1e-12)), 0.0, FRAC_PI_2, 2000)
                .map(|x| x / (2.0 * PI));
        let got = [g[(0, 0)], g[(0, 1)], g[(1, 1)]];
        for (a, b) in got.iter().zip(oracle) {
            assert!((a - b).abs() < 1e-7 * (1.0 + b.abs()), "h {h}: {got:?} vs {oracle:?}");
        }
        assert!(g[(1, 1)] < 0.0, "anti-Hermitian direction gives a negative metric");
    }
}

#[test]
fn finite_size_sums_converge_to_intensity() {
    let p = XYParams::anisotropic_reference();
    let f = FieldPoint::new(1.2, 0.4);
    let exact = metric_intensity(&p, f, &IntensityOptions { n_quad: 129, ..Default::default() }).unwrap();
    let finite = |l: usize| {
        let mut acc = DMatrix::<f64>::zeros(2, 2);
        for m in 1.. {
            let k = 2.0 * PI * m as f64 / l as f64;
            if k >= FRAC_PI_2 {
                break;
            }
            acc += block_metric(&p, f, k, 1e-5, MetricRoute::Perturbative).unwrap();
        }
        acc / l as f64
    };
    let errs: Vec<f64> = [200, 800, 3200].iter().map(|&l| (finite(l) - &exact).abs().max()).collect();
    assert!(errs[2] < 1e-3 * exact.abs().max(), "{errs:?}");
    assert!(errs[1] < errs[0] && errs[2] < errs[1], "{errs:?}");
}

#[test]
fn dispersion_matches_dense_spectrum_at_random_points() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for p in [XYParams::anisotropic_reference(), XYParams::pseudo_isotropic_reference()] {
        let mut done = 0;
        while done < 20 {
            let f = FieldPoint::new(rng.gen_range(0.0..3.0), rng.gen_range(-0.99..0.99));
            if !unbroken_at(&p, f).unwrap().analytic {
                continue;
            }
            done += 1;
            for i in 0..64 {
                let k = FRAC_PI_2 * (i as f64 + 0.5) / 64.0;
                let disp = dispersion(&p, f, k).unwrap();
                let eig = biortho_eig(&dk_matrix(&p, f, k).unwrap(), Default::default()).unwrap();
                let (lp, lm) = (disp.lambda_plus.re, disp.lambda_minus.re);
                let mut expect = [-lp, -lm, lm, lp];
                expect.sort_by(f64::total_cmp);
                for (e, x) in eig.energies.iter().zip(expect) {
                    assert!((e - x).norm() < 1e-10, "k {k}: {e} vs {x}");
                }
            }
        }
    }
}
