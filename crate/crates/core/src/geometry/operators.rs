use num_complex::Complex64;

use super::derivatives::{param_derivatives, ParamDerivatives};
use super::tensor::RMatrix;
use crate::biortho::BiorthoEigensystem;
use crate::error::{Error, Result};
use crate::family::EigenSource;
use crate::linalg::{CMatrix, I};

/// `O_μ = O_{A,μ} + i O_{B,μ}` for every parameter direction.
#[derive(Debug, Clone)]
pub struct OperatorPair {
    pub o_full: Vec<CMatrix>,
    pub o_a: Vec<CMatrix>,
    pub o_b: Vec<CMatrix>,
}

/// Physical adjoint `X‡ = W⁻¹ X† W`.
pub fn physical_adjoint(x: &CMatrix, w: &CMatrix, w_inv: &CMatrix) -> CMatrix {
    w_inv * x.adjoint() * w
}

/// Split `X = X_A + i X_B` into physically Hermitian parts `X_A = (X + X‡)/2`,
/// `X_B = (X − X‡)/(2i)`.
pub fn physical_parts(x: &CMatrix, w: &CMatrix, w_inv: &CMatrix) -> (CMatrix, CMatrix) {
    let xd = physical_adjoint(x, w, w_inv);
    let a = (x + &xd).scale(0.5);
    let b = (x - &xd) / (I * 2.0);
    (a, b)
}

/// `O_μ = i Σ_n |∂_μΨ_n⟩⟨Φ_n|`, `O_{B,μ} = −½ W⁻¹ ∂_μW`, `O_{A,μ} = O_μ − i O_{B,μ}`.
pub fn o_operators<S: EigenSource + ?Sized>(source: &S, point: &[f64], step: f64) -> Result<OperatorPair> {
    o_operators_from_derivatives(&param_derivatives(source, point, step)?)
}

pub fn o_operators_from_derivatives(der: &ParamDerivatives) -> Result<OperatorPair> {
    let w_inv = der.w.inverse()?;
    let l_adj = der.center.left.adjoint();
    let o_full: Vec<CMatrix> = der.d_right.iter().map(|dr| (dr * &l_adj) * I).collect();
    let o_b: Vec<CMatrix> = der.d_w.iter().map(|dw| (&w_inv * dw).scale(-0.5)).collect();
    let o_a = o_full.iter().zip(&o_b).map(|(o, b)| o - b * I).collect();
    Ok(OperatorPair { o_full, o_a, o_b })
}

fn expectation(eig: &BiorthoEigensystem, x: &CMatrix) -> Complex64 {
    let xpsi = x * eig.psi(0);
    eig.phi(0).dotc(&xpsi)
}

fn centered(eig: &BiorthoEigensystem, x: &CMatrix) -> CMatrix {
    let mean = expectation(eig, x);
    x - CMatrix::identity(x.nrows(), x.ncols()) * mean
}

/// `g_{0,μν} = ½ Re(⟨{Ō_{A,μ}, Ō_{A,ν}}⟩ − ⟨{Ō_{B,μ}, Ō_{B,ν}}⟩)` with `⟨X⟩ = ⟨Φ₀|X|Ψ₀⟩`.
pub fn variance_metric<S: EigenSource + ?Sized>(source: &S, point: &[f64], step: f64) -> Result<RMatrix> {
    let der = param_derivatives(source, point, step)?;
    der.center.ensure_nondegenerate(0, source.tolerances().degenerate)?;
    let ops = o_operators_from_derivatives(&der)?;
    Ok(variance_metric_from_operators(&der.center, &ops))
}

pub fn variance_metric_from_operators(eig: &BiorthoEigensystem, ops: &OperatorPair) -> RMatrix {
    let d = ops.o_a.len();
    let a: Vec<CMatrix> = ops.o_a.iter().map(|x| centered(eig, x)).collect();
    let b: Vec<CMatrix> = ops.o_b.iter().map(|x| centered(eig, x)).collect();
    let anti = |x: &CMatrix, y: &CMatrix| x * y + y * x;
    let mut g = RMatrix::zeros(d, d);
    for mu in 0..d {
        for nu in mu..d {
            let v = expectation(eig, &anti(&a[mu], &a[nu])) - expectation(eig, &anti(&b[mu], &b[nu]));
            g[(mu, nu)] = 0.5 * v.re;
            g[(nu, mu)] = 0.5 * v.re;
        }
    }
    g
}

/// Interval type of a displacement under a possibly indefinite metric.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IntervalClass {
    Spacelike,
    Lightlike,
    Timelike,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub ds2: f64,
    pub class: IntervalClass,
}

/// `ds² = g_μν dλ^μ dλ^ν`; values within `1e-12·‖g‖·‖dλ‖²` of zero are lightlike.
pub fn classify_interval(g: &RMatrix, dl: &[f64]) -> Result<Interval> {
    let d = dl.len();
    if g.shape() != (d, d) {
        return Err(Error::DimensionMismatch { expected: g.nrows(), got: d });
    }
    if g.iter().chain(dl).any(|x| !x.is_finite()) {
        return Err(Error::NonFinite);
    }
    let v = nalgebra::DVector::from_column_slice(dl);
    let ds2 = v.dot(&(g * &v));
    let band = 1e-12 * g.norm() * v.norm_squared();
    let class = if ds2.abs() <= band {
        IntervalClass::Lightlike
    } else if ds2 > 0.0 {
        IntervalClass::Spacelike
    } else {
        IntervalClass::Timelike
    };
    Ok(Interval { ds2, class })
}
