use crate::biortho::{build_w, gauge_fix, match_levels, BiorthoEigensystem, MetricOperator};
use crate::error::{Error, Result};
use crate::family::EigenSource;
use crate::linalg::CMatrix;

/// How displaced eigensystems are aligned with the one at the centre before differencing.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GaugeMode {
    /// Reorder and remove the phase relative to the centre (parallel-transport-like). Only
    /// gauge-invariant combinations are meaningful in this mode.
    Anchored,
    /// Reorder only; keep the source's own phase convention. Needed for the connection,
    /// which is gauge dependent.
    Convention,
}

/// Default finite-difference step `1e-5·(1 + |λ|)`.
pub fn default_step(point: &[f64]) -> f64 {
    1e-5 * (1.0 + point.iter().map(|x| x * x).sum::<f64>().sqrt())
}

/// Central-difference derivatives of the eigensystem, the metric operator and `H` at a point.
#[derive(Debug, Clone)]
pub struct ParamDerivatives {
    pub point: Vec<f64>,
    pub step: f64,
    pub center: BiorthoEigensystem,
    pub w: MetricOperator,
    /// `d_right[μ]` has columns `∂_μΨ_n`.
    pub d_right: Vec<CMatrix>,
    /// `d_left[μ]` has columns `∂_μΦ_n`.
    pub d_left: Vec<CMatrix>,
    pub d_w: Vec<CMatrix>,
    pub d_h: Vec<CMatrix>,
}

impl ParamDerivatives {
    pub fn dim_param(&self) -> usize {
        self.d_right.len()
    }
}

fn unbroken_eig<S: EigenSource + ?Sized>(source: &S, point: &[f64]) -> Result<BiorthoEigensystem> {
    let eig = source.eigensystem(point)?;
    if !eig.unbroken {
        return Err(Error::Broken);
    }
    Ok(eig)
}

fn align(center: &BiorthoEigensystem, other: &BiorthoEigensystem, mode: GaugeMode) -> Result<BiorthoEigensystem> {
    match mode {
        GaugeMode::Anchored => gauge_fix(center, other),
        GaugeMode::Convention => match_levels(center, other).map(|(e, _)| e),
    }
}

pub fn param_derivatives<S: EigenSource + ?Sized>(source: &S, point: &[f64], step: f64) -> Result<ParamDerivatives> {
    param_derivatives_with(source, point, step, GaugeMode::Anchored)
}

pub fn param_derivatives_with<S: EigenSource + ?Sized>(
    source: &S,
    point: &[f64],
    step: f64,
    mode: GaugeMode,
) -> Result<ParamDerivatives> {
    let d = source.dim_param();
    if point.len() != d {
        return Err(Error::DimensionMismatch { expected: d, got: point.len() });
    }
    if !(step > 0.0 && step.is_finite()) {
        return Err(Error::InvalidInput(format!("step must be positive, got {step}")));
    }
    let center = unbroken_eig(source, point)?;
    let w = build_w(&center)?;
    let mut d_right = Vec::with_capacity(d);
    let mut d_left = Vec::with_capacity(d);
    let mut d_w = Vec::with_capacity(d);
    let mut d_h = Vec::with_capacity(d);
    for mu in 0..d {
        let mut plus = point.to_vec();
        let mut minus = point.to_vec();
        plus[mu] += step;
        minus[mu] -= step;
        let ep = align(&center, &unbroken_eig(source, &plus)?, mode)?;
        let em = align(&center, &unbroken_eig(source, &minus)?, mode)?;
        let two_h = 2.0 * step;
        d_right.push((&ep.right - &em.right).unscale(two_h));
        d_left.push((&ep.left - &em.left).unscale(two_h));
        let wp = &ep.left * ep.left.adjoint();
        let wm = &em.left * em.left.adjoint();
        d_w.push((wp - wm).unscale(two_h));
        d_h.push(source.hamiltonian_derivative(point, mu, step));
    }
    Ok(ParamDerivatives { point: point.to_vec(), step, center, w, d_right, d_left, d_w, d_h })
}
