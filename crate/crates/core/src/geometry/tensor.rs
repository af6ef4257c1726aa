use nalgebra::DMatrix;
use num_complex::Complex64;

use super::derivatives::{param_derivatives, param_derivatives_with, GaugeMode, ParamDerivatives};
use crate::biortho::BiorthoEigensystem;
use crate::error::{Error, Result};
use crate::family::EigenSource;
use crate::linalg::{inner, CMatrix};

pub type RMatrix = DMatrix<f64>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    FiniteDifference,
    /// Sum over states; only the real part (the metric) is available, `Im q` is zero.
    Perturbative,
}

/// Extended quantum geometric tensor `Q_{n,μν}` of one level at one point.
#[derive(Debug, Clone)]
pub struct GeomTensor {
    pub level: usize,
    pub point: Vec<f64>,
    pub q: CMatrix,
    pub scheme: Scheme,
}

impl GeomTensor {
    pub fn from_metric(level: usize, point: &[f64], g: &RMatrix) -> Self {
        let q = g.map(|x| Complex64::new(x, 0.0));
        Self { level, point: point.to_vec(), q, scheme: Scheme::Perturbative }
    }

    pub fn curvature(&self) -> RMatrix {
        berry_curvature(self)
    }

    pub fn metric(&self) -> RMatrix {
        metric_tensor(self)
    }

    /// `max |Q_μν − Q_νμ*|`.
    pub fn hermiticity_residual(&self) -> f64 {
        let q = &self.q;
        (q - q.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

/// Berry connection `A_{n,μ} = Im⟨Φ_n|∂_μΨ_n⟩`. Gauge dependent.
#[derive(Debug, Clone)]
pub struct Connection {
    pub level: usize,
    pub point: Vec<f64>,
    pub a: Vec<f64>,
}

fn check_level(eig: &BiorthoEigensystem, n: usize, tol: f64) -> Result<()> {
    if n >= eig.dim() {
        return Err(Error::InvalidInput(format!("level {n} out of range for dimension {}", eig.dim())));
    }
    eig.ensure_nondegenerate(n, tol)
}

pub fn qgt<S: EigenSource + ?Sized>(source: &S, point: &[f64], n: usize, step: f64) -> Result<GeomTensor> {
    let der = param_derivatives(source, point, step)?;
    qgt_from_derivatives(&der, n, source.tolerances().degenerate)
}

/// `Q_μν = ½[⟨∂_μΦ|∂_νΨ⟩ − ⟨∂_μΦ|Ψ⟩⟨Φ|∂_νΨ⟩ + ⟨∂_μΨ|∂_νΦ⟩ − ⟨∂_μΨ|Φ⟩⟨Ψ|∂_νΦ⟩]`.
pub fn qgt_from_derivatives(der: &ParamDerivatives, n: usize, tol_degenerate: f64) -> Result<GeomTensor> {
    check_level(&der.center, n, tol_degenerate)?;
    let d = der.dim_param();
    let psi = der.center.psi(n);
    let phi = der.center.phi(n);
    let dpsi: Vec<_> = der.d_right.iter().map(|m| m.column(n)).collect();
    let dphi: Vec<_> = der.d_left.iter().map(|m| m.column(n)).collect();
    let q = CMatrix::from_fn(d, d, |mu, nu| {
        let t1 = inner(dphi[mu].iter(), dpsi[nu].iter())
            - inner(dphi[mu].iter(), psi.iter()) * inner(phi.iter(), dpsi[nu].iter());
        let t2 = inner(dpsi[mu].iter(), dphi[nu].iter())
            - inner(dpsi[mu].iter(), phi.iter()) * inner(psi.iter(), dphi[nu].iter());
        (t1 + t2) * 0.5
    });
    Ok(GeomTensor { level: n, point: der.point.clone(), q, scheme: Scheme::FiniteDifference })
}

/// `Ω = Im Q`.
pub fn berry_curvature(q: &GeomTensor) -> RMatrix {
    q.q.map(|z| z.im)
}

/// `g = Re Q`.
pub fn metric_tensor(q: &GeomTensor) -> RMatrix {
    q.q.map(|z| z.re)
}

/// Sum-over-states metric of the ground level (level 0).
pub fn metric_perturbative(eig: &BiorthoEigensystem, dh: &[CMatrix]) -> Result<RMatrix> {
    metric_perturbative_level(eig, dh, 0, crate::biortho::EigTolerances::default().degenerate)
}

/// `g_{n,μν} = Re Σ_{m≠n} [⟨Φ_n|∂_μH|Ψ_m⟩⟨Φ_m|∂_νH|Ψ_n⟩ + ⟨Φ_m|∂_μH|Ψ_n⟩⟨Φ_n|∂_νH|Ψ_m⟩] / (2(E_n − E_m)²)`.
pub fn metric_perturbative_level(
    eig: &BiorthoEigensystem,
    dh: &[CMatrix],
    n: usize,
    tol_degenerate: f64,
) -> Result<RMatrix> {
    if !eig.unbroken {
        return Err(Error::Broken);
    }
    check_level(eig, n, tol_degenerate)?;
    // V_μ = L† ∂_μH R holds every matrix element ⟨Φ_a|∂_μH|Ψ_b⟩.
    let v: Vec<CMatrix> = dh.iter().map(|h| eig.left.adjoint() * h * &eig.right).collect();
    let d = dh.len();
    let en = eig.energies[n].re;
    let mut g = RMatrix::zeros(d, d);
    for mu in 0..d {
        for nu in mu..d {
            let mut acc = Complex64::new(0.0, 0.0);
            for m in (0..eig.dim()).filter(|&m| m != n) {
                let de = en - eig.energies[m].re;
                acc += (v[mu][(n, m)] * v[nu][(m, n)] + v[mu][(m, n)] * v[nu][(n, m)]) / (2.0 * de * de);
            }
            g[(mu, nu)] = acc.re;
            g[(nu, mu)] = acc.re;
        }
    }
    Ok(g)
}

/// Connection in the source's own phase convention.
pub fn connection_at<S: EigenSource + ?Sized>(source: &S, point: &[f64], n: usize, step: f64) -> Result<Connection> {
    let der = param_derivatives_with(source, point, step, GaugeMode::Convention)?;
    check_level(&der.center, n, source.tolerances().degenerate)?;
    let phi = der.center.phi(n);
    let a = der.d_right.iter().map(|dr| inner(phi.iter(), dr.column(n).iter()).im).collect();
    Ok(Connection { level: n, point: point.to_vec(), a })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::family::FnFamily;
    use crate::geometry::derivatives::default_step;
    use crate::linalg::{pauli_x, pauli_y, pauli_z, re};

    fn spin_family() -> FnFamily {
        FnFamily::new(2, 2, |l| pauli_x().scale(l[0]) + pauli_y().scale(l[1]) + pauli_z())
    }

    #[test]
    fn spin_half_ground_metric_at_pole() {
        let f = spin_family();
        let q = qgt(&f, &[0.0, 0.0], 0, 1e-5).unwrap();
        let g = q.metric();
        assert!((g[(0, 0)] - 0.25).abs() < 1e-8);
        assert!((g[(1, 1)] - 0.25).abs() < 1e-8);
        assert!(g[(0, 1)].abs() < 1e-8);
        // Ground state of σ_z-dominated field: Ω_12 = −1/4 at the pole.
        assert!((q.curvature()[(0, 1)] + 0.25).abs() < 1e-8);
    }

    #[test]
    fn constant_family_has_zero_tensor() {
        let h0 = CMatrix::from_row_slice(2, 2, &[re(1.0), re(0.5), re(0.2), re(-1.0)]);
        let f = FnFamily::constant(h0, 2);
        let q = qgt(&f, &[0.3, 0.1], 1, 1e-5).unwrap();
        assert!(q.q.iter().all(|z| z.norm() < 1e-10));
        let c = connection_at(&f, &[0.3, 0.1], 0, 1e-5).unwrap();
        assert!(c.a.iter().all(|x| x.abs() < 1e-10));
    }

    #[test]
    fn one_parameter_curvature_vanishes() {
        let f = FnFamily::new(2, 1, |l| pauli_x().scale(l[0].cos()) + pauli_z().scale(l[0].sin()));
        let q = qgt(&f, &[0.4], 0, default_step(&[0.4])).unwrap();
        assert_eq!(q.q.shape(), (1, 1));
        assert!(q.curvature()[(0, 0)].abs() < 1e-12);
        assert!((q.metric()[(0, 0)] - 0.25).abs() < 1e-8);
    }

    #[test]
    fn perturbative_matches_finite_difference_for_spin() {
        let f = spin_family();
        let p = [0.3, -0.2];
        let der = param_derivatives(&f, &p, 1e-5).unwrap();
        let g_fd = qgt_from_derivatives(&der, 0, 1e-8).unwrap().metric();
        let g_pt = metric_perturbative(&der.center, &der.d_h).unwrap();
        assert!((g_fd - g_pt).abs().max() < 1e-8);
    }

    #[test]
    fn degenerate_level_is_reported() {
        let f = FnFamily::new(2, 1, |l| pauli_z().scale(l[0]));
        let err = qgt(&f, &[0.0], 0, 1e-3).unwrap_err();
        assert!(matches!(err, Error::Degenerate { .. } | Error::AmbiguousMatching(_)), "{err:?}");
    }

    #[test]
    fn zero_derivatives_give_zero_perturbative_metric() {
        let eig = crate::biortho::biortho_eig(&pauli_z(), Default::default()).unwrap();
        let g = metric_perturbative(&eig, &[CMatrix::zeros(2, 2), CMatrix::zeros(2, 2)]).unwrap();
        assert_eq!(g.abs().max(), 0.0);
    }
}
