//! Dimerized XY chain in an alternating complex field, reduced to its 4×4 momentum blocks.
//!
//! The parameter point is `λ = (h, η)`. Every block `D_k`, `0 < k < π/2`, anticommutes with
//! `I₂⊗σ_x`, so its spectrum is `{±Λ_+(k), ±Λ_−(k)}`. The ground state fills the two negative
//! levels of every block, and the metric intensity is the `k`-integral of their metrics.

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;
use rayon::prelude::*;

use crate::biortho::{BiorthoEigensystem, EigTolerances};
use crate::error::{Error, Result};
use crate::family::{EigenSource, HamiltonianFamily};
use crate::geometry::{metric_perturbative_level, param_derivatives, qgt_from_derivatives, RMatrix};
use crate::linalg::{c, re, CMatrix};
use crate::quadrature::Rule;

/// Relative tolerance for the equalities `JΓ = J_sΓ_s` and `JΓ_s = J_sΓ`.
const CASE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct XYParams {
    pub j: f64,
    pub js: f64,
    pub gamma: f64,
    pub gammas: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Case {
    Anisotropic,
    PseudoIsotropic,
}

impl Case {
    pub fn name(self) -> &'static str {
        match self {
            Case::Anisotropic => "anisotropic",
            Case::PseudoIsotropic => "pseudo_isotropic",
        }
    }
}

fn nearly_equal(a: f64, b: f64) -> bool {
    (a - b).abs() <= CASE_TOL * a.abs().max(b.abs())
}

impl XYParams {
    pub fn new(j: f64, js: f64, gamma: f64, gammas: f64) -> Result<Self> {
        let p = Self { j, js, gamma, gammas };
        if [j, js, gamma, gammas].iter().any(|x| !(x.is_finite() && *x > 0.0)) {
            return Err(Error::InvalidInput(format!("XY couplings must be positive and finite, got {p:?}")));
        }
        Ok(p)
    }

    /// `(J, J_s, Γ, Γ_s) = (1, ½, ⅓, ⅙)`.
    pub fn anisotropic_reference() -> Self {
        Self { j: 1.0, js: 0.5, gamma: 1.0 / 3.0, gammas: 1.0 / 6.0 }
    }

    /// `(J, J_s, Γ, Γ_s) = (1, ½, ¼, ½)`.
    pub fn pseudo_isotropic_reference() -> Self {
        Self { j: 1.0, js: 0.5, gamma: 0.25, gammas: 0.5 }
    }

    /// Pseudo-isotropic iff `JΓ = J_sΓ_s`; anisotropic iff not, and then `JΓ_s = J_sΓ` is
    /// required. Both cases also need `J > Γ_s` and `J_s > Γ`.
    pub fn case(&self) -> Result<Case> {
        if !(self.j > self.gammas && self.js > self.gamma) {
            return Err(Error::CaseUnsupported(format!(
                "need J > Γs and Js > Γ, got J = {}, Γs = {}, Js = {}, Γ = {}",
                self.j, self.gammas, self.js, self.gamma
            )));
        }
        if nearly_equal(self.j * self.gamma, self.js * self.gammas) {
            Ok(Case::PseudoIsotropic)
        } else if nearly_equal(self.j * self.gammas, self.js * self.gamma) {
            Ok(Case::Anisotropic)
        } else {
            Err(Error::CaseUnsupported(format!(
                "anisotropic couplings need JΓs = JsΓ, got {} vs {}",
                self.j * self.gammas,
                self.js * self.gamma
            )))
        }
    }

    /// `η_c = min{2J, 2J_s}`.
    pub fn eta_c(&self) -> f64 {
        (2.0 * self.j).min(2.0 * self.js)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldPoint {
    pub h: f64,
    pub eta: f64,
}

impl FieldPoint {
    pub fn new(h: f64, eta: f64) -> Self {
        Self { h, eta }
    }

    pub fn r(&self) -> f64 {
        self.h.hypot(self.eta)
    }
}

/// Quantum-phase-transition locus in the `(h, η)` plane, in terms of `r = √(h² + η²)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum QptLocus {
    /// `r = r_c1` and `r = r_c2`.
    Circles { r1: f64, r2: f64 },
    /// `min ≤ r ≤ max`.
    Annulus { min: f64, max: f64 },
}

impl QptLocus {
    pub fn describe(&self) -> String {
        match *self {
            QptLocus::Circles { r1, r2 } => format!("circles r = {r1} and r = {r2}"),
            QptLocus::Annulus { min, max } => format!("annulus {min} <= r <= {max}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CriticalSet {
    pub r_c1: f64,
    pub r_c2: f64,
    pub eta_c: f64,
    pub case: Case,
    pub qpt: QptLocus,
}

/// `r_c1 = 2√(J² − Γ_s²)`, `r_c2 = 2√(J_s² − Γ²)`, `η_c = min{2J, 2J_s}`.
pub fn critical_set(p: &XYParams) -> Result<CriticalSet> {
    let case = p.case()?;
    let r_c1 = 2.0 * (p.j * p.j - p.gammas * p.gammas).sqrt();
    let r_c2 = 2.0 * (p.js * p.js - p.gamma * p.gamma).sqrt();
    let qpt = match case {
        Case::Anisotropic => QptLocus::Circles { r1: r_c1, r2: r_c2 },
        Case::PseudoIsotropic => QptLocus::Annulus { min: r_c1.min(r_c2), max: r_c1.max(r_c2) },
    };
    Ok(CriticalSet { r_c1, r_c2, eta_c: p.eta_c(), case, qpt })
}

fn check_k(k: f64) -> Result<()> {
    if !(k > 0.0 && k < FRAC_PI_2) {
        return Err(Error::InvalidInput(format!("momentum k = {k} outside (0, π/2)")));
    }
    Ok(())
}

fn dk_unchecked(p: &XYParams, f: FieldPoint, k: f64) -> CMatrix {
    let (s, co) = k.sin_cos();
    let a = 2.0 * p.j * co;
    let g = 2.0 * p.gamma * s;
    let gs = 2.0 * p.gammas * co;
    let js = 2.0 * p.js * s;
    let (h, eta) = (f.h, f.eta);
    #[rustfmt::skip]
    let entries = [
        re(a + h),         c(0.0, g),         re(-gs),           c(0.0, -js - eta),
        c(0.0, -g),        re(-a - h),        c(0.0, js + eta),  re(gs),
        re(-gs),           c(0.0, -js + eta), re(a - h),         c(0.0, g),
        c(0.0, js - eta),  re(gs),            c(0.0, -g),        re(-a + h),
    ];
    CMatrix::from_row_slice(4, 4, &entries)
}

/// The momentum block `D_k`.
pub fn dk_matrix(p: &XYParams, f: FieldPoint, k: f64) -> Result<CMatrix> {
    check_k(k)?;
    Ok(dk_unchecked(p, f, k))
}

/// `∂_h D_k` (`mu = 0`) and `∂_η D_k` (`mu = 1`); both independent of the point.
pub fn dk_derivative(mu: usize) -> CMatrix {
    let z = re(0.0);
    let (one, i) = (re(1.0), c(0.0, 1.0));
    let entries = if mu == 0 {
        [one, z, z, z, z, -one, z, z, z, z, -one, z, z, z, z, one]
    } else {
        [z, z, z, -i, z, z, i, z, z, i, z, z, -i, z, z, z]
    };
    CMatrix::from_row_slice(4, 4, &entries)
}

/// `λ = (h, η) ↦ D_k` at fixed momentum.
#[derive(Debug, Clone, Copy)]
pub struct DkFamily {
    pub params: XYParams,
    pub k: f64,
}

impl HamiltonianFamily for DkFamily {
    fn dim_hilbert(&self) -> usize {
        4
    }
    fn dim_param(&self) -> usize {
        2
    }
    fn evaluate(&self, l: &[f64]) -> CMatrix {
        dk_unchecked(&self.params, FieldPoint::new(l[0], l[1]), self.k)
    }
    fn derivative(&self, _l: &[f64], mu: usize) -> Option<CMatrix> {
        Some(dk_derivative(mu))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dispersion {
    pub lambda_plus: Complex64,
    pub lambda_minus: Complex64,
    pub c2: f64,
    pub c4: f64,
}

impl Dispersion {
    /// True when both `Λ±` are real (`c₂² − c₄ ≥ 0` and `c₂ ≥ 0`).
    pub fn is_real(&self) -> bool {
        self.c2 * self.c2 - self.c4 >= 0.0 && self.c2 >= 0.0
    }
}

fn c2_c4(p: &XYParams, f: FieldPoint, k: f64) -> (f64, f64) {
    let (s, co) = k.sin_cos();
    let (s2, co2) = (s * s, co * co);
    let (h2, e2) = (f.h * f.h, f.eta * f.eta);
    let (j2, js2, g2, gs2) = (p.j * p.j, p.js * p.js, p.gamma * p.gamma, p.gammas * p.gammas);
    let c2 = h2 - e2 + 4.0 * (j2 + gs2) * co2 + 4.0 * (js2 + g2) * s2;
    let first = h2 + e2 - 4.0 * (j2 - gs2) * co2 - 4.0 * (js2 - g2) * s2;
    let mix = p.j * p.gamma - p.js * p.gammas;
    let sin2k = (2.0 * k).sin();
    let c4 = first * first + 16.0 * mix * mix * sin2k * sin2k;
    (c2, c4)
}

/// `Λ± = [c₂ ± √(c₂² − c₄)]^{1/2}` with principal roots.
pub fn dispersion(p: &XYParams, f: FieldPoint, k: f64) -> Result<Dispersion> {
    check_k(k)?;
    Ok(dispersion_unchecked(p, f, k))
}

fn dispersion_unchecked(p: &XYParams, f: FieldPoint, k: f64) -> Dispersion {
    let (c2, c4) = c2_c4(p, f, k);
    let root = Complex64::new(c2 * c2 - c4, 0.0).sqrt();
    let mut plus = c2 + root;
    let mut minus = c2 - root;
    // Λ₊²Λ₋² = c₄; recover the smaller square from the larger one to avoid cancellation.
    if plus.norm() >= minus.norm() {
        if plus.norm() > 0.0 {
            minus = c4 / plus;
        }
    } else {
        plus = c4 / minus;
    }
    Dispersion { lambda_plus: plus.sqrt(), lambda_minus: minus.sqrt(), c2, c4 }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct UnbrokenVerdict {
    pub analytic: bool,
    pub numeric: bool,
}

/// Number of momenta in the numeric reality check.
pub const UNBROKEN_GRID: usize = 256;

/// Analytic `|η| < η_c` and numeric reality of `Λ±` on a closed 256-point grid over
/// `[0, π/2]` (the extremes of the reality condition sit at the endpoints).
pub fn unbroken_at(p: &XYParams, f: FieldPoint) -> Result<UnbrokenVerdict> {
    p.case()?;
    let analytic = f.eta.abs() < p.eta_c();
    let numeric = (0..UNBROKEN_GRID).all(|i| {
        let k = FRAC_PI_2 * i as f64 / (UNBROKEN_GRID - 1) as f64;
        let (c2, c4) = c2_c4(p, f, k);
        c2 * c2 - c4 > 0.0 && c2 > 0.0
    });
    Ok(UnbrokenVerdict { analytic, numeric })
}

/// Relative size below which an eigenvalue of `D_k` counts as zero.
pub const GAPLESS_TOL: f64 = 1e-9;

/// Indices (in ascending energy order) of the negative levels of a block. Fails with
/// `GaplessPoint` if a level is numerically zero or the split is not half/half.
pub fn occupied_levels(eig: &BiorthoEigensystem, k: f64) -> Result<Vec<usize>> {
    if !eig.unbroken {
        return Err(Error::Broken);
    }
    let scale = eig.spectral_radius().max(f64::MIN_POSITIVE);
    if let Some(e) = eig.energies.iter().find(|e| e.norm() <= GAPLESS_TOL * scale) {
        return Err(Error::GaplessPoint { k, energy: e.norm() });
    }
    let occ: Vec<usize> = (0..eig.dim()).filter(|&n| eig.energies[n].re < 0.0).collect();
    if 2 * occ.len() != eig.dim() {
        let energy = eig.energies.iter().map(|e| e.norm()).fold(f64::INFINITY, f64::min);
        return Err(Error::GaplessPoint { k, energy });
    }
    Ok(occ)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MetricRoute {
    /// Extended QGT by central differences of the eigenvectors.
    FiniteDifference,
    /// Sum over states with the analytic `∂D_k`.
    Perturbative,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntensityOptions {
    pub n_quad: usize,
    pub step: f64,
    pub route: MetricRoute,
    /// Recompute with `2·n_quad` nodes and fail on a relative change above `1e-4`.
    pub check_convergence: bool,
}

impl Default for IntensityOptions {
    fn default() -> Self {
        Self { n_quad: 129, step: 1e-5, route: MetricRoute::FiniteDifference, check_convergence: false }
    }
}

pub const CONVERGENCE_TOL: f64 = 1e-4;

/// Metric of the filled negative levels of one block: `Σ_occ Re Q_n(k)`.
pub fn block_metric(p: &XYParams, f: FieldPoint, k: f64, step: f64, route: MetricRoute) -> Result<RMatrix> {
    let fam = DkFamily { params: *p, k };
    let point = [f.h, f.eta];
    let tol = EigTolerances::default().degenerate;
    let mut g = RMatrix::zeros(2, 2);
    match route {
        MetricRoute::FiniteDifference => {
            let der = param_derivatives(&fam, &point, step)?;
            for n in occupied_levels(&der.center, k)? {
                g += qgt_from_derivatives(&der, n, tol)?.metric();
            }
        }
        MetricRoute::Perturbative => {
            let eig = fam.eigensystem(&point)?;
            let dh = [dk_derivative(0), dk_derivative(1)];
            for n in occupied_levels(&eig, k)? {
                g += metric_perturbative_level(&eig, &dh, n, tol)?;
            }
        }
    }
    Ok(g)
}

fn intensity_with(p: &XYParams, f: FieldPoint, n_quad: usize, opts: &IntensityOptions) -> Result<RMatrix> {
    let rule = Rule::gauss_legendre(n_quad, 0.0, FRAC_PI_2)?;
    let blocks: Vec<RMatrix> =
        rule.nodes.par_iter().map(|&k| block_metric(p, f, k, opts.step, opts.route)).collect::<Result<_>>()?;
    // Fixed node order keeps the sum independent of scheduling.
    let mut g = RMatrix::zeros(2, 2);
    for (b, w) in blocks.iter().zip(&rule.weights) {
        g += b * *w;
    }
    // ḡ = (1/4π) Σ_occ ∫ 2 Re Q_n dk.
    g *= 2.0 / (4.0 * PI);
    let off = 0.5 * (g[(0, 1)] + g[(1, 0)]);
    g[(0, 1)] = off;
    g[(1, 0)] = off;
    Ok(g)
}

/// Metric intensity `ḡ_μν` of the ground state, `μ, ν ∈ {h, η}`.
pub fn metric_intensity(p: &XYParams, f: FieldPoint, opts: &IntensityOptions) -> Result<RMatrix> {
    p.case()?;
    if opts.n_quad < 2 {
        return Err(Error::InvalidInput(format!("n_quad must be at least 2, got {}", opts.n_quad)));
    }
    let g = intensity_with(p, f, opts.n_quad, opts)?;
    if opts.check_convergence {
        let fine = intensity_with(p, f, 2 * opts.n_quad, opts)?;
        let scale = g.abs().max().max(f64::MIN_POSITIVE);
        let change = (&fine - &g).abs().max() / scale;
        if change > CONVERGENCE_TOL {
            return Err(Error::QuadratureUnconverged(change));
        }
    }
    Ok(g)
}
