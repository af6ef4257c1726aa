//! Parameterized Hamiltonian families `λ ↦ H(λ)`.

use num_complex::Complex64;

use crate::biortho::{biortho_eig, gauge_transform, BiorthoEigensystem, EigTolerances};
use crate::error::Result;
use crate::linalg::CMatrix;

/// A smooth map from a real parameter vector to a complex square matrix.
pub trait HamiltonianFamily: Sync {
    fn dim_hilbert(&self) -> usize;

    fn dim_param(&self) -> usize;

    fn evaluate(&self, point: &[f64]) -> CMatrix;

    /// Analytic `∂_μ H(λ)` when the family knows it. The default says "unknown" and
    /// callers fall back to central differences.
    fn derivative(&self, _point: &[f64], _mu: usize) -> Option<CMatrix> {
        None
    }
}

impl<F: HamiltonianFamily + ?Sized> HamiltonianFamily for &F {
    fn dim_hilbert(&self) -> usize {
        (**self).dim_hilbert()
    }
    fn dim_param(&self) -> usize {
        (**self).dim_param()
    }
    fn evaluate(&self, point: &[f64]) -> CMatrix {
        (**self).evaluate(point)
    }
    fn derivative(&self, point: &[f64], mu: usize) -> Option<CMatrix> {
        (**self).derivative(point, mu)
    }
}

type MatrixFn = dyn Fn(&[f64]) -> CMatrix + Send + Sync;
type DerivFn = dyn Fn(&[f64], usize) -> CMatrix + Send + Sync;

/// Closure-backed family, convenient for tests and ad-hoc models.
pub struct FnFamily {
    dim_hilbert: usize,
    dim_param: usize,
    eval: Box<MatrixFn>,
    deriv: Option<Box<DerivFn>>,
}

impl FnFamily {
    pub fn new(dim_hilbert: usize, dim_param: usize, eval: impl Fn(&[f64]) -> CMatrix + Send + Sync + 'static) -> Self {
        Self { dim_hilbert, dim_param, eval: Box::new(eval), deriv: None }
    }

    pub fn with_derivative(mut self, deriv: impl Fn(&[f64], usize) -> CMatrix + Send + Sync + 'static) -> Self {
        self.deriv = Some(Box::new(deriv));
        self
    }

    /// `H(λ) = H₀` for every λ.
    pub fn constant(h0: CMatrix, dim_param: usize) -> Self {
        let n = h0.nrows();
        Self::new(n, dim_param, move |_| h0.clone()).with_derivative(move |_, _| CMatrix::zeros(n, n))
    }
}

impl HamiltonianFamily for FnFamily {
    fn dim_hilbert(&self) -> usize {
        self.dim_hilbert
    }
    fn dim_param(&self) -> usize {
        self.dim_param
    }
    fn evaluate(&self, point: &[f64]) -> CMatrix {
        (self.eval)(point)
    }
    fn derivative(&self, point: &[f64], mu: usize) -> Option<CMatrix> {
        self.deriv.as_ref().map(|d| d(point, mu))
    }
}

/// Central difference `[H(λ+h e_μ) − H(λ−h e_μ)]/(2h)`.
pub fn central_difference<F: HamiltonianFamily + ?Sized>(family: &F, point: &[f64], mu: usize, step: f64) -> CMatrix {
    let mut plus = point.to_vec();
    let mut minus = point.to_vec();
    plus[mu] += step;
    minus[mu] -= step;
    (family.evaluate(&plus) - family.evaluate(&minus)).unscale(2.0 * step)
}

/// `∂_μH`, analytic when available.
pub fn hamiltonian_derivative<F: HamiltonianFamily + ?Sized>(
    family: &F,
    point: &[f64],
    mu: usize,
    step: f64,
) -> CMatrix {
    family.derivative(point, mu).unwrap_or_else(|| central_difference(family, point, mu, step))
}

/// Anything that can hand out `H(λ)`, `∂_μH(λ)` and a biorthonormal eigensystem at `λ`.
///
/// Every [`HamiltonianFamily`] is a source with default tolerances and the eigensolver's
/// phase convention. [`Regauged`] and [`WithTolerances`] adapt that behaviour.
pub trait EigenSource: Sync {
    fn dim_hilbert(&self) -> usize;
    fn dim_param(&self) -> usize;
    fn hamiltonian(&self, point: &[f64]) -> CMatrix;
    fn hamiltonian_derivative(&self, point: &[f64], mu: usize, step: f64) -> CMatrix;
    fn tolerances(&self) -> EigTolerances;
    fn eigensystem(&self, point: &[f64]) -> Result<BiorthoEigensystem>;
}

impl<F: HamiltonianFamily + ?Sized> EigenSource for F {
    fn dim_hilbert(&self) -> usize {
        HamiltonianFamily::dim_hilbert(self)
    }
    fn dim_param(&self) -> usize {
        HamiltonianFamily::dim_param(self)
    }
    fn hamiltonian(&self, point: &[f64]) -> CMatrix {
        self.evaluate(point)
    }
    fn hamiltonian_derivative(&self, point: &[f64], mu: usize, step: f64) -> CMatrix {
        hamiltonian_derivative(self, point, mu, step)
    }
    fn tolerances(&self) -> EigTolerances {
        EigTolerances::default()
    }
    fn eigensystem(&self, point: &[f64]) -> Result<BiorthoEigensystem> {
        biortho_eig(&self.evaluate(point), EigTolerances::default())
    }
}

/// Family whose eigensystems are passed through a parameter-dependent gauge transformation
/// `Ψ_n → f_n(λ) Ψ_n`, `Φ_n → Φ_n / f_n(λ)*`.
pub struct Regauged<'a, F: ?Sized, G> {
    pub family: &'a F,
    pub gauge: G,
}

impl<'a, F, G> EigenSource for Regauged<'a, F, G>
where
    F: HamiltonianFamily + ?Sized,
    G: Fn(&[f64]) -> Vec<Complex64> + Sync,
{
    fn dim_hilbert(&self) -> usize {
        self.family.dim_hilbert()
    }
    fn dim_param(&self) -> usize {
        self.family.dim_param()
    }
    fn hamiltonian(&self, point: &[f64]) -> CMatrix {
        self.family.evaluate(point)
    }
    fn hamiltonian_derivative(&self, point: &[f64], mu: usize, step: f64) -> CMatrix {
        hamiltonian_derivative(self.family, point, mu, step)
    }
    fn tolerances(&self) -> EigTolerances {
        EigTolerances::default()
    }
    fn eigensystem(&self, point: &[f64]) -> Result<BiorthoEigensystem> {
        let eig = biortho_eig(&self.family.evaluate(point), EigTolerances::default())?;
        gauge_transform(&eig, &(self.gauge)(point))
    }
}

/// Family evaluated with non-default eigensolver tolerances.
pub struct WithTolerances<'a, F: ?Sized> {
    pub family: &'a F,
    pub tol: EigTolerances,
}

impl<'a, F: HamiltonianFamily + ?Sized> EigenSource for WithTolerances<'a, F> {
    fn dim_hilbert(&self) -> usize {
        self.family.dim_hilbert()
    }
    fn dim_param(&self) -> usize {
        self.family.dim_param()
    }
    fn hamiltonian(&self, point: &[f64]) -> CMatrix {
        self.family.evaluate(point)
    }
    fn hamiltonian_derivative(&self, point: &[f64], mu: usize, step: f64) -> CMatrix {
        hamiltonian_derivative(self.family, point, mu, step)
    }
    fn tolerances(&self) -> EigTolerances {
        self.tol
    }
    fn eigensystem(&self, point: &[f64]) -> Result<BiorthoEigensystem> {
        biortho_eig(&self.family.evaluate(point), self.tol)
    }
}
