use num_complex::Complex64;
use rayon::prelude::*;

use super::derivatives::param_derivatives;
use super::tensor::qgt_from_derivatives;
use crate::biortho::{cross_overlap, BiorthoEigensystem};
use crate::error::{Error, Result};
use crate::family::EigenSource;
use crate::linalg::col_inner;

/// Closed polygon in parameter space; the first and last vertices must coincide.
#[derive(Debug, Clone)]
pub struct LoopSpec {
    pub vertices: Vec<Vec<f64>>,
    pub level: usize,
}

const CLOSURE_TOL: f64 = 1e-12;

impl LoopSpec {
    pub fn new(vertices: Vec<Vec<f64>>, level: usize) -> Self {
        Self { vertices, level }
    }

    /// Append the first vertex if the polygon is not already closed.
    pub fn closed(mut vertices: Vec<Vec<f64>>, level: usize) -> Self {
        if let (Some(first), Some(last)) = (vertices.first(), vertices.last()) {
            if distance(first, last) > CLOSURE_TOL {
                let first = first.clone();
                vertices.push(first);
            }
        }
        Self { vertices, level }
    }

    pub fn reversed(&self) -> Self {
        let mut vertices = self.vertices.clone();
        vertices.reverse();
        Self { vertices, level: self.level }
    }

    pub fn validate(&self, dim_param: usize) -> Result<()> {
        if self.vertices.len() < 4 {
            return Err(Error::InvalidLoop(format!("need at least 4 vertices, got {}", self.vertices.len())));
        }
        if let Some(v) = self.vertices.iter().find(|v| v.len() != dim_param) {
            return Err(Error::DimensionMismatch { expected: dim_param, got: v.len() });
        }
        if self.vertices.iter().flatten().any(|x| !x.is_finite()) {
            return Err(Error::InvalidLoop("non-finite vertex".into()));
        }
        let gap = distance(&self.vertices[0], self.vertices.last().expect("non-empty"));
        if gap > CLOSURE_TOL * (1.0 + norm(&self.vertices[0])) {
            return Err(Error::OpenLoop(gap));
        }
        Ok(())
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Eigensystems at every vertex except the closing one, each checked for reality and a gap at
/// `level`.
pub(crate) fn loop_eigensystems<S: EigenSource + ?Sized>(source: &S, lp: &LoopSpec) -> Result<Vec<BiorthoEigensystem>> {
    lp.validate(source.dim_param())?;
    let tol = source.tolerances().degenerate;
    let m = lp.vertices.len() - 1;
    lp.vertices[..m]
        .par_iter()
        .map(|v| {
            let eig = source.eigensystem(v)?;
            if !eig.unbroken {
                return Err(Error::Broken);
            }
            if lp.level >= eig.dim() {
                return Err(Error::InvalidInput(format!("level {} out of range", lp.level)));
            }
            eig.ensure_nondegenerate(lp.level, tol)?;
            Ok(eig)
        })
        .collect()
}

/// Discrete Berry phase of a closed chain of eigensystems (vertex 0 closes the chain).
///
/// `P = Π_i ⟨Φ_n(λ_i)|Ψ_n(λ_{i+1})⟩` and its mirror `P̃ = Π_i ⟨Ψ_n(λ_i)|Φ_n(λ_{i+1})⟩` are both
/// invariant under per-vertex gauge changes and carry the same phase `∮A` to first order.
/// Off the Hermitian line each has an `O(δλ)` bias from `Im⟨∂Φ|∂Ψ⟩`, with opposite signs, so
/// `γ = −½(arg P + arg P̃)` is second-order accurate.
pub(crate) fn loop_phase(eigs: &[BiorthoEigensystem], n: usize) -> Result<f64> {
    let m = eigs.len();
    let mut p = Complex64::new(1.0, 0.0);
    let mut mirror = Complex64::new(1.0, 0.0);
    for i in 0..m {
        let (a, b) = (&eigs[i], &eigs[(i + 1) % m]);
        p *= cross_overlap(a, n, b, n);
        mirror *= col_inner(&a.right, n, &b.left, n);
        // Keep the running products of order one; only their phases matter.
        p /= p.norm().max(f64::MIN_POSITIVE);
        mirror /= mirror.norm().max(f64::MIN_POSITIVE);
    }
    if !(p.norm() > 0.0 && mirror.norm() > 0.0 && p.is_finite() && mirror.is_finite()) {
        return Err(Error::Degenerate { level: n, gap: 0.0 });
    }
    // The two phases differ only by the small bias; average across the branch cut safely.
    let base = p.arg();
    let half_gap = 0.5 * (mirror * p.conj()).arg();
    Ok(crate::linalg::wrap_phase(-(base + half_gap)))
}

/// `γ_n = −∮ A_n ∈ (−π, π]` from overlaps between consecutive vertices.
pub fn berry_phase_loop<S: EigenSource + ?Sized>(source: &S, lp: &LoopSpec) -> Result<f64> {
    let eigs = loop_eigensystems(source, lp)?;
    loop_phase(&eigs, lp.level)
}

/// Axis-aligned rectangle in the `(μ, ν)` coordinate plane through `base`.
#[derive(Debug, Clone)]
pub struct Rectangle {
    pub base: Vec<f64>,
    pub plane: (usize, usize),
    pub lo: [f64; 2],
    pub hi: [f64; 2],
    /// Cells (and boundary segments) per side.
    pub resolution: usize,
}

impl Rectangle {
    fn at(&self, x: f64, y: f64) -> Vec<f64> {
        let mut p = self.base.clone();
        p[self.plane.0] = x;
        p[self.plane.1] = y;
        p
    }

    fn validate(&self, dim_param: usize) -> Result<()> {
        let (mu, nu) = self.plane;
        if self.base.len() != dim_param {
            return Err(Error::DimensionMismatch { expected: dim_param, got: self.base.len() });
        }
        if mu >= dim_param || nu >= dim_param || mu == nu {
            return Err(Error::InvalidInput(format!("invalid plane ({mu}, {nu})")));
        }
        if self.resolution == 0 || !(self.hi[0] > self.lo[0] && self.hi[1] > self.lo[1]) {
            return Err(Error::InvalidInput("empty rectangle".into()));
        }
        Ok(())
    }

    /// Counterclockwise boundary in the `(μ, ν)` orientation, `resolution` segments per side.
    pub fn boundary_loop(&self, level: usize) -> LoopSpec {
        let r = self.resolution;
        let [x0, y0] = self.lo;
        let [x1, y1] = self.hi;
        let lerp = |a: f64, b: f64, i: usize| a + (b - a) * i as f64 / r as f64;
        let mut v = Vec::with_capacity(4 * r + 1);
        v.extend((0..r).map(|i| self.at(lerp(x0, x1, i), y0)));
        v.extend((0..r).map(|i| self.at(x1, lerp(y0, y1, i))));
        v.extend((0..r).map(|i| self.at(lerp(x1, x0, i), y1)));
        v.extend((0..r).map(|i| self.at(x0, lerp(y1, y0, i))));
        v.push(self.at(x0, y0));
        LoopSpec::new(v, level)
    }
}

/// `∫_S Ω_n = ∫∫ 2 Ω_{n,μν} dλ^μ dλ^ν` over the rectangle by the midpoint rule. With the
/// boundary from [`Rectangle::boundary_loop`], `γ_loop + flux → 0`.
pub fn curvature_flux<S: EigenSource + ?Sized>(
    source: &S,
    rect: &Rectangle,
    n: usize,
    step: Option<f64>,
) -> Result<f64> {
    rect.validate(source.dim_param())?;
    let r = rect.resolution;
    let dx = (rect.hi[0] - rect.lo[0]) / r as f64;
    let dy = (rect.hi[1] - rect.lo[1]) / r as f64;
    let (mu, nu) = rect.plane;
    let tol = source.tolerances().degenerate;
    let cells: Vec<f64> = (0..r * r)
        .into_par_iter()
        .map(|idx| {
            let (i, j) = (idx % r, idx / r);
            let p = rect.at(rect.lo[0] + (i as f64 + 0.5) * dx, rect.lo[1] + (j as f64 + 0.5) * dy);
            let h = step.unwrap_or_else(|| super::derivatives::default_step(&p));
            let der = param_derivatives(source, &p, h)?;
            let q = qgt_from_derivatives(&der, n, tol)?;
            Ok(2.0 * q.q[(mu, nu)].im)
        })
        .collect::<Result<_>>()?;
    // Summed in index order so the result does not depend on scheduling.
    Ok(cells.iter().sum::<f64>() * dx * dy)
}
