//! Reference families used by the tests, the CLI and the verification suite.

use crate::family::HamiltonianFamily;
use crate::linalg::{pauli_x, pauli_y, pauli_z, CMatrix, I};

/// `H(λ) = λ¹σ_x + λ²σ_y + λ³σ_z`, a spin-½ in a field.
#[derive(Debug, Clone, Copy, Default)]
pub struct SpinHalf;

impl HamiltonianFamily for SpinHalf {
    fn dim_hilbert(&self) -> usize {
        2
    }
    fn dim_param(&self) -> usize {
        3
    }
    fn evaluate(&self, l: &[f64]) -> CMatrix {
        pauli_x().scale(l[0]) + pauli_y().scale(l[1]) + pauli_z().scale(l[2])
    }
    fn derivative(&self, _l: &[f64], mu: usize) -> Option<CMatrix> {
        Some([pauli_x, pauli_y, pauli_z][mu]())
    }
}

/// `H(λ) = λ¹σ_x + λ²σ_y + σ_z`: the planar slice of [`SpinHalf`] at unit `z` field.
#[derive(Debug, Clone, Copy, Default)]
pub struct SpinHalfPlanar;

impl HamiltonianFamily for SpinHalfPlanar {
    fn dim_hilbert(&self) -> usize {
        2
    }
    fn dim_param(&self) -> usize {
        2
    }
    fn evaluate(&self, l: &[f64]) -> CMatrix {
        SpinHalf.evaluate(&[l[0], l[1], 1.0])
    }
    fn derivative(&self, _l: &[f64], mu: usize) -> Option<CMatrix> {
        Some([pauli_x, pauli_y][mu]())
    }
}

/// Spin-½ in a unit field with polar angles `λ = (θ, φ)`.
#[derive(Debug, Clone, Copy, Default)]
pub struct SpinHalfSphere;

impl HamiltonianFamily for SpinHalfSphere {
    fn dim_hilbert(&self) -> usize {
        2
    }
    fn dim_param(&self) -> usize {
        2
    }
    fn evaluate(&self, l: &[f64]) -> CMatrix {
        let (st, ct) = l[0].sin_cos();
        let (sp, cp) = l[1].sin_cos();
        SpinHalf.evaluate(&[st * cp, st * sp, ct])
    }
}

/// `H(a, s) = [[i a, s], [s, −i a]]`, real spectrum `±√(s² − a²)` for `|a| < |s|`.
#[derive(Debug, Clone, Copy, Default)]
pub struct PtDimer;

impl HamiltonianFamily for PtDimer {
    fn dim_hilbert(&self) -> usize {
        2
    }
    fn dim_param(&self) -> usize {
        2
    }
    fn evaluate(&self, l: &[f64]) -> CMatrix {
        pauli_x().scale(l[1]) + pauli_z() * (I * l[0])
    }
    fn derivative(&self, _l: &[f64], mu: usize) -> Option<CMatrix> {
        Some(if mu == 0 { pauli_z() * I } else { pauli_x() })
    }
}

/// `H(a, s, θ, φ) = s n̂·σ + i a m̂·σ` with `n̂ = (sin θ cos φ, sin θ sin φ, cos θ)` and
/// `m̂ = (−cos θ cos φ, −cos θ sin φ, sin θ)`.
///
/// `m̂ ⊥ n̂`, so `H² = (s² − a²)·I` and the spectrum is `±√(s² − a²)` everywhere. At
/// `θ = π/2, φ = 0` this is [`PtDimer`]. Unlike that slice, the `(θ, φ)` plane carries Berry
/// curvature.
#[derive(Debug, Clone, Copy, Default)]
pub struct PtTwoLevel;

impl PtTwoLevel {
    fn axes(theta: f64, phi: f64) -> ([f64; 3], [f64; 3]) {
        let (st, ct) = theta.sin_cos();
        let (sp, cp) = phi.sin_cos();
        ([st * cp, st * sp, ct], [-ct * cp, -ct * sp, st])
    }

    fn dot_sigma(v: [f64; 3]) -> CMatrix {
        pauli_x().scale(v[0]) + pauli_y().scale(v[1]) + pauli_z().scale(v[2])
    }
}

impl HamiltonianFamily for PtTwoLevel {
    fn dim_hilbert(&self) -> usize {
        2
    }
    fn dim_param(&self) -> usize {
        4
    }
    fn evaluate(&self, l: &[f64]) -> CMatrix {
        let (n, m) = Self::axes(l[2], l[3]);
        Self::dot_sigma(n).scale(l[1]) + Self::dot_sigma(m) * (I * l[0])
    }
    fn derivative(&self, l: &[f64], mu: usize) -> Option<CMatrix> {
        let (a, s, theta, phi) = (l[0], l[1], l[2], l[3]);
        let (st, ct) = theta.sin_cos();
        let (sp, cp) = phi.sin_cos();
        let (n, m) = Self::axes(theta, phi);
        Some(match mu {
            0 => Self::dot_sigma(m) * I,
            1 => Self::dot_sigma(n),
            2 => {
                let dn = [ct * cp, ct * sp, -st];
                let dm = [st * cp, st * sp, ct];
                Self::dot_sigma(dn).scale(s) + Self::dot_sigma(dm) * (I * a)
            }
            _ => {
                let dn = [-st * sp, st * cp, 0.0];
                let dm = [ct * sp, -ct * cp, 0.0];
                Self::dot_sigma(dn).scale(s) + Self::dot_sigma(dm) * (I * a)
            }
        })
    }
}

/// `(θ, φ)` slice of [`PtTwoLevel`] at fixed `(a, s)`.
#[derive(Debug, Clone, Copy)]
pub struct PtTwoLevelAngles {
    pub a: f64,
    pub s: f64,
}

impl HamiltonianFamily for PtTwoLevelAngles {
    fn dim_hilbert(&self) -> usize {
        2
    }
    fn dim_param(&self) -> usize {
        2
    }
    fn evaluate(&self, l: &[f64]) -> CMatrix {
        PtTwoLevel.evaluate(&[self.a, self.s, l[0], l[1]])
    }
    fn derivative(&self, l: &[f64], mu: usize) -> Option<CMatrix> {
        PtTwoLevel.derivative(&[self.a, self.s, l[0], l[1]], mu + 2)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::family::central_difference;
    use crate::linalg::max_abs;

    fn check_derivatives<F: HamiltonianFamily>(f: &F, p: &[f64]) {
        for mu in 0..f.dim_param() {
            let an = f.derivative(p, mu).unwrap();
            let fd = central_difference(f, p, mu, 1e-5);
            assert!(max_abs(&(an - fd)) < 1e-9, "direction {mu}");
        }
    }

    #[test]
    fn analytic_derivatives_match_differences() {
        check_derivatives(&SpinHalf, &[0.3, -0.1, 0.8]);
        check_derivatives(&SpinHalfPlanar, &[0.3, -0.1]);
        check_derivatives(&PtDimer, &[0.3, 1.1]);
        check_derivatives(&PtTwoLevel, &[0.4, 1.0, 0.9, 0.3]);
        check_derivatives(&PtTwoLevelAngles { a: 0.4, s: 1.0 }, &[0.9, 0.3]);
    }

    #[test]
    fn pt_two_level_reduces_to_dimer_and_squares_to_scalar() {
        let h = PtTwoLevel.evaluate(&[0.4, 1.0, std::f64::consts::FRAC_PI_2, 0.0]);
        assert!(max_abs(&(&h - PtDimer.evaluate(&[0.4, 1.0]))) < 1e-15);
        let h = PtTwoLevel.evaluate(&[0.4, 1.0, 1.1, -0.7]);
        let expect = CMatrix::identity(2, 2).scale(1.0 - 0.16);
        assert!(max_abs(&(&h * &h - expect)) < 1e-14);
    }
}
