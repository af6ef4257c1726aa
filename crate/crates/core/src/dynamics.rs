//! Metric-compatible evolution `i ψ' = (H + iK) ψ` with `K = −½ W⁻¹ ∂_t W`.
//!
//! `K` makes the generator anti-Hermitian with respect to `⟨·|W(λ_t)|·⟩`, so `⟨ψ|W|ψ⟩` is
//! conserved exactly by the flow and only the integrator introduces drift.

use std::f64::consts::TAU;
use std::sync::Arc;

use num_complex::Complex64;

use crate::biortho::{build_w, BiorthoEigensystem};
use crate::error::{Error, Result};
use crate::family::EigenSource;
use crate::geometry::{loop_phase, Rectangle};
use crate::linalg::{wrap_phase, CMatrix, CVector, I};

/// Largest tolerated `max_t |⟨ψ|W|ψ⟩ − ⟨ψ₀|W|ψ₀⟩|` before `StepTooLarge`.
pub const MAX_NORM_DRIFT: f64 = 1e-6;
/// Adiabaticity monitor: smallest admissible `|⟨Φ_n(λ_t)|ψ(t)⟩|`.
pub const MIN_ADIABATIC_OVERLAP: f64 = 0.99;

type CurveFn = dyn Fn(f64) -> Vec<f64> + Send + Sync;

#[derive(Clone)]
enum Curve {
    Sampled { times: Vec<f64>, points: Vec<Vec<f64>> },
    Parametric(Arc<CurveFn>),
}

/// A parameter path `t ∈ [0, τ] ↦ λ_t`.
#[derive(Clone)]
pub struct PathSpec {
    curve: Curve,
    pub duration: f64,
    pub closed: bool,
}

impl std::fmt::Debug for PathSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let kind = match self.curve {
            Curve::Sampled { .. } => "sampled",
            Curve::Parametric(_) => "parametric",
        };
        f.debug_struct("PathSpec")
            .field("curve", &kind)
            .field("duration", &self.duration)
            .field("closed", &self.closed)
            .finish()
    }
}

fn check_duration(duration: f64) -> Result<()> {
    if !(duration > 0.0 && duration.is_finite()) {
        return Err(Error::InvalidInput(format!("duration must be positive, got {duration}")));
    }
    Ok(())
}

impl PathSpec {
    /// Piecewise-linear interpolation of `(t, λ)` samples; times must start at 0 and increase.
    pub fn sampled(samples: Vec<(f64, Vec<f64>)>, closed: bool) -> Result<Self> {
        if samples.len() < 2 {
            return Err(Error::InvalidInput("a sampled path needs at least 2 samples".into()));
        }
        let (times, points): (Vec<f64>, Vec<Vec<f64>>) = samples.into_iter().unzip();
        if times[0] != 0.0 || times.windows(2).any(|w| w[1].is_nan() || w[1] <= w[0]) {
            return Err(Error::InvalidInput("sample times must start at 0 and increase strictly".into()));
        }
        let d = points[0].len();
        if points.iter().any(|p| p.len() != d || p.iter().any(|x| !x.is_finite())) {
            return Err(Error::InvalidInput("samples must be finite points of equal dimension".into()));
        }
        let duration = *times.last().expect("non-empty");
        if closed {
            let gap: f64 = points[0].iter().zip(points.last().expect("non-empty")).map(|(a, b)| (a - b).abs()).sum();
            if gap > 1e-12 {
                return Err(Error::OpenLoop(gap));
            }
        }
        Ok(Self { curve: Curve::Sampled { times, points }, duration, closed })
    }

    pub fn parametric(
        duration: f64,
        closed: bool,
        curve: impl Fn(f64) -> Vec<f64> + Send + Sync + 'static,
    ) -> Result<Self> {
        check_duration(duration)?;
        let path = Self { curve: Curve::Parametric(Arc::new(curve)), duration, closed };
        if closed {
            let (a, b) = (path.point(0.0), path.point(duration));
            let gap: f64 = a.iter().zip(&b).map(|(x, y)| (x - y).abs()).sum();
            if gap > 1e-12 * (1.0 + a.iter().map(|x| x.abs()).sum::<f64>()) {
                return Err(Error::OpenLoop(gap));
            }
        }
        Ok(path)
    }

    /// `λ_t = λ₀` for all `t`.
    pub fn stationary(point: Vec<f64>, duration: f64) -> Result<Self> {
        Self::parametric(duration, true, move |_| point.clone())
    }

    /// Counterclockwise circle of `radius` about `center` in the `(μ, ν)` plane through `base`.
    /// With `smooth`, the angle follows `2π(u − sin(2πu)/2π)`, `u = t/τ`, so the path starts
    /// and ends at rest.
    pub fn circle(
        base: Vec<f64>,
        plane: (usize, usize),
        center: [f64; 2],
        radius: f64,
        duration: f64,
        smooth: bool,
    ) -> Result<Self> {
        Self::parametric(duration, true, move |t| {
            let u = t / duration;
            let u = if smooth { u - (TAU * u).sin() / TAU } else { u };
            let (s, c) = (TAU * u).sin_cos();
            let mut p = base.clone();
            p[plane.0] = center[0] + radius * c;
            p[plane.1] = center[1] + radius * s;
            p
        })
    }

    /// Counterclockwise boundary of `rect` traversed at constant speed.
    pub fn rectangle(rect: &Rectangle, duration: f64) -> Result<Self> {
        let r = rect.clone();
        let (w, h) = (r.hi[0] - r.lo[0], r.hi[1] - r.lo[1]);
        let perimeter = 2.0 * (w + h);
        Self::parametric(duration, true, move |t| {
            let s = (t / duration).clamp(0.0, 1.0) * perimeter;
            let (x, y) = if s <= w {
                (r.lo[0] + s, r.lo[1])
            } else if s <= w + h {
                (r.hi[0], r.lo[1] + (s - w))
            } else if s <= 2.0 * w + h {
                (r.hi[0] - (s - w - h), r.hi[1])
            } else {
                (r.lo[0], r.hi[1] - (s - 2.0 * w - h))
            };
            let mut p = r.base.clone();
            p[r.plane.0] = x;
            p[r.plane.1] = y;
            p
        })
    }

    pub fn point(&self, t: f64) -> Vec<f64> {
        match &self.curve {
            Curve::Parametric(f) => f(t),
            Curve::Sampled { times, points } => {
                let t = t.clamp(0.0, self.duration);
                let i = times.partition_point(|&x| x <= t).clamp(1, times.len() - 1);
                let (t0, t1) = (times[i - 1], times[i]);
                let w = (t - t0) / (t1 - t0);
                points[i - 1].iter().zip(&points[i]).map(|(a, b)| a + w * (b - a)).collect()
            }
        }
    }

    /// Whether `point` is meaningful slightly outside `[0, τ]` (closed or analytic paths).
    fn extends(&self) -> bool {
        self.closed || matches!(self.curve, Curve::Parametric(_))
    }

    fn probe_point(&self, t: f64) -> Vec<f64> {
        if self.closed && matches!(self.curve, Curve::Sampled { .. }) {
            self.point(t.rem_euclid(self.duration))
        } else {
            self.point(t)
        }
    }
}

fn metric_at<S: EigenSource + ?Sized>(source: &S, point: &[f64]) -> Result<(BiorthoEigensystem, CMatrix)> {
    let eig = source.eigensystem(point)?;
    if !eig.unbroken {
        return Err(Error::Broken);
    }
    let w = build_w(&eig)?.matrix;
    Ok((eig, w))
}

/// `∂_t W` by a central difference of width `dt_probe` (one-sided second order at the ends
/// of an open sampled path).
fn metric_rate<S: EigenSource + ?Sized>(source: &S, path: &PathSpec, t: f64, dt: f64) -> Result<CMatrix> {
    let w = |t: f64| metric_at(source, &path.probe_point(t)).map(|(_, w)| w);
    if path.extends() || (t - dt >= 0.0 && t + dt <= path.duration) {
        return Ok((w(t + dt)? - w(t - dt)?).unscale(2.0 * dt));
    }
    if t - dt < 0.0 {
        Ok((w(t)?.scale(-3.0) + w(t + dt)?.scale(4.0) - w(t + 2.0 * dt)?).unscale(2.0 * dt))
    } else {
        Ok((w(t)?.scale(3.0) - w(t - dt)?.scale(4.0) + w(t - 2.0 * dt)?).unscale(2.0 * dt))
    }
}

/// `K(t) = −½ W⁻¹(λ_t) ∂_t W(λ_t)`.
pub fn k_field<S: EigenSource + ?Sized>(source: &S, path: &PathSpec, t: f64, dt_probe: f64) -> Result<CMatrix> {
    let (_, w) = metric_at(source, &path.point(t))?;
    k_from(source, path, t, dt_probe, &w)
}

fn k_from<S: EigenSource + ?Sized>(source: &S, path: &PathSpec, t: f64, dt_probe: f64, w: &CMatrix) -> Result<CMatrix> {
    let w_inv = crate::linalg::inverse(w).ok_or(Error::MetricSingular)?;
    Ok((w_inv * metric_rate(source, path, t, dt_probe)?).scale(-0.5))
}

/// Everything known about the instantaneous Hamiltonian at one time.
struct Frame {
    eig: BiorthoEigensystem,
    w: CMatrix,
    generator: CMatrix,
}

fn frame<S: EigenSource + ?Sized>(source: &S, path: &PathSpec, t: f64, dt_probe: f64) -> Result<Frame> {
    let point = path.point(t);
    let (eig, w) = metric_at(source, &point)?;
    let k = k_from(source, path, t, dt_probe, &w)?;
    let generator = source.hamiltonian(&point) * (-I) + k;
    Ok(Frame { eig, w, generator })
}

fn w_inner(w: &CMatrix, a: &CVector, b: &CVector) -> Complex64 {
    a.dotc(&(w * b))
}

#[derive(Debug, Clone)]
pub struct EvolutionResult {
    pub times: Vec<f64>,
    pub states: Vec<CVector>,
    /// `⟨ψ(t)|W(λ_t)|ψ(t)⟩` at every recorded time.
    pub w_norms: Vec<f64>,
    /// `α(τ) − α(0)`, set by [`adiabatic_phase`].
    pub total_phase: Option<f64>,
    pub dynamical_phase: Option<f64>,
    pub geometric_phase: Option<f64>,
}

impl EvolutionResult {
    pub fn max_norm_drift(&self) -> f64 {
        let n0 = self.w_norms[0];
        self.w_norms.iter().map(|n| (n - n0).abs()).fold(0.0, f64::max)
    }
}

/// Fixed-step classical RK4 for `ψ' = (−iH + K) ψ` with step `τ/n_steps`.
pub fn evolve<S: EigenSource + ?Sized>(
    source: &S,
    path: &PathSpec,
    psi0: &CVector,
    n_steps: usize,
) -> Result<EvolutionResult> {
    evolve_observed(source, path, psi0, n_steps, |_, _, _| Ok(()))
}

/// As [`evolve`], calling `observe(t, eigensystem at λ_t, ψ(t))` at every grid time.
pub fn evolve_observed<S, O>(
    source: &S,
    path: &PathSpec,
    psi0: &CVector,
    n_steps: usize,
    mut observe: O,
) -> Result<EvolutionResult>
where
    S: EigenSource + ?Sized,
    O: FnMut(f64, &BiorthoEigensystem, &CVector) -> Result<()>,
{
    if n_steps == 0 {
        return Err(Error::InvalidInput("n_steps must be positive".into()));
    }
    if psi0.len() != source.dim_hilbert() {
        return Err(Error::DimensionMismatch { expected: source.dim_hilbert(), got: psi0.len() });
    }
    let dt = path.duration / n_steps as f64;
    let dt_probe = dt / 10.0;
    let mut cur = frame(source, path, 0.0, dt_probe)?;
    let norm0 = w_inner(&cur.w, psi0, psi0).re;
    if (norm0 - 1.0).abs() > 1e-8 {
        return Err(Error::InvalidInput(format!("initial state has W-norm {norm0}, expected 1")));
    }
    let mut psi = psi0.clone();
    let mut times = vec![0.0];
    let mut states = vec![psi.clone()];
    let mut w_norms = vec![norm0];
    observe(0.0, &cur.eig, &psi)?;
    for step in 0..n_steps {
        let t = step as f64 * dt;
        let t_next = (step + 1) as f64 * dt;
        let mid = frame(source, path, t + 0.5 * dt, dt_probe)?;
        let next = frame(source, path, t_next, dt_probe)?;
        let k1 = &cur.generator * &psi;
        let k2 = &mid.generator * (&psi + &k1 * Complex64::from(0.5 * dt));
        let k3 = &mid.generator * (&psi + &k2 * Complex64::from(0.5 * dt));
        let k4 = &next.generator * (&psi + &k3 * Complex64::from(dt));
        psi += (k1 + (k2 + k3) * Complex64::from(2.0) + k4) * Complex64::from(dt / 6.0);
        let norm = w_inner(&next.w, &psi, &psi).re;
        if (norm - norm0).abs() > MAX_NORM_DRIFT {
            return Err(Error::StepTooLarge((norm - norm0).abs()));
        }
        observe(t_next, &next.eig, &psi)?;
        times.push(t_next);
        states.push(psi.clone());
        w_norms.push(norm);
        cur = next;
    }
    Ok(EvolutionResult { times, states, w_norms, total_phase: None, dynamical_phase: None, geometric_phase: None })
}

/// RK4 step count keeping the W-norm drift of a phase rotating at `energy` below `1e-9` over
/// `duration`, and at least `10·τ·‖H‖`. RK4 contracts the norm by `(E·dt)⁶/72` per step.
pub fn recommended_steps(duration: f64, energy: f64) -> usize {
    let phase = (duration * energy.abs()).max(1.0);
    let drift_bound = (phase.powi(6) / (72.0 * 1e-9)).powf(0.2);
    drift_bound.max(10.0 * phase).ceil() as usize
}

#[derive(Debug, Clone)]
pub struct AdiabaticPhase {
    /// `arg⟨Φ_n(λ₀)|ψ(τ)⟩ − β`, wrapped to `(−π, π]`.
    pub gamma_sim: f64,
    /// Discrete loop Berry phase on the evolution grid.
    pub gamma_line: f64,
    /// `β = −∫ E_n dt`, trapezoid rule on the step grid.
    pub beta: f64,
    pub evolution: EvolutionResult,
}

/// Evolve `Ψ_n(λ₀)` around a closed path and split the final phase into dynamical and
/// geometric parts. Fails with `NotAdiabatic` if the state leaves level `n`.
pub fn adiabatic_phase<S: EigenSource + ?Sized>(
    source: &S,
    path: &PathSpec,
    n: usize,
    n_steps: usize,
) -> Result<AdiabaticPhase> {
    if !path.closed {
        return Err(Error::InvalidLoop("adiabatic phase needs a closed path".into()));
    }
    let start = source.eigensystem(&path.point(0.0))?;
    if n >= start.dim() {
        return Err(Error::InvalidInput(format!("level {n} out of range for dimension {}", start.dim())));
    }
    let tol = source.tolerances().degenerate;
    let psi0: CVector = start.psi(n).into_owned();
    let mut energies = Vec::with_capacity(n_steps + 1);
    let mut eigs = Vec::with_capacity(n_steps + 1);
    let mut evolution = evolve_observed(source, path, &psi0, n_steps, |t, eig, psi| {
        eig.ensure_nondegenerate(n, tol)?;
        let overlap = eig.phi(n).dotc(psi).norm();
        if overlap < MIN_ADIABATIC_OVERLAP {
            return Err(Error::NotAdiabatic { t, overlap });
        }
        energies.push(eig.energies[n].re);
        eigs.push(eig.clone());
        Ok(())
    })?;
    let dt = path.duration / n_steps as f64;
    let integral: f64 = energies.windows(2).map(|w| 0.5 * (w[0] + w[1]) * dt).sum();
    let beta = -integral;
    let final_state = evolution.states.last().expect("non-empty");
    let total = start.phi(n).dotc(final_state).arg();
    let gamma_sim = wrap_phase(total - beta);
    // The last grid point coincides with the first; the product closes on vertex 0.
    eigs.pop();
    let gamma_line = loop_phase(&eigs, n)?;
    evolution.total_phase = Some(total);
    evolution.dynamical_phase = Some(beta);
    evolution.geometric_phase = Some(gamma_sim);
    Ok(AdiabaticPhase { gamma_sim, gamma_line, beta, evolution })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::family::FnFamily;
    use crate::linalg::{c, max_abs, pauli_x, pauli_z, re};
    use crate::models::PtDimer;

    #[test]
    fn stationary_path_rotates_eigenstate() {
        let f = PtDimer;
        let path = PathSpec::stationary(vec![0.4, 1.0], 3.0).unwrap();
        let eig = f.eigensystem(&[0.4, 1.0]).unwrap();
        let psi0: CVector = eig.psi(1).into_owned();
        let res = evolve(&f, &path, &psi0, 600).unwrap();
        let e = eig.energies[1];
        let expect = &psi0 * (-I * e * 3.0).exp();
        assert!((res.states.last().unwrap() - expect).norm() < 1e-9);
        assert!(res.max_norm_drift() < 1e-10);
        let k = k_field(&f, &path, 1.0, 1e-3).unwrap();
        assert!(max_abs(&k) < 1e-12);
    }

    #[test]
    fn hermitian_family_has_no_gauge_field() {
        let f = FnFamily::new(2, 1, |l| pauli_x().scale(l[0]) + pauli_z());
        let path = PathSpec::parametric(2.0, false, |t| vec![0.3 * t]).unwrap();
        assert!(max_abs(&k_field(&f, &path, 1.0, 1e-3).unwrap()) < 1e-10);
    }

    #[test]
    fn k_is_physically_hermitian_along_pt_path() {
        let f = PtDimer;
        let path = PathSpec::parametric(2.0, false, |t| vec![0.2 + 0.1 * t, 1.0]).unwrap();
        let k = k_field(&f, &path, 1.0, 1e-4).unwrap();
        let (_, w) = metric_at(&f, &path.point(1.0)).unwrap();
        let resid = max_abs(&(&w * &k - k.adjoint() * &w));
        assert!(resid <= 1e-7 * max_abs(&w) * max_abs(&k).max(1e-300), "{resid}");
        assert!(max_abs(&k) > 1e-3);
    }

    #[test]
    fn sampled_path_interpolates_and_checks_closure() {
        let p = PathSpec::sampled(vec![(0.0, vec![0.0]), (1.0, vec![2.0]), (3.0, vec![0.0])], true).unwrap();
        assert_eq!(p.point(0.5), vec![1.0]);
        assert_eq!(p.point(2.0), vec![1.0]);
        assert_eq!(p.duration, 3.0);
        let open = PathSpec::sampled(vec![(0.0, vec![0.0]), (1.0, vec![2.0])], true);
        assert!(matches!(open, Err(Error::OpenLoop(_))));
    }

    #[test]
    fn unnormalized_start_is_rejected() {
        let path = PathSpec::stationary(vec![0.4, 1.0], 1.0).unwrap();
        let psi = CVector::from_vec(vec![re(2.0), c(0.0, 0.0)]);
        assert!(matches!(evolve(&PtDimer, &path, &psi, 10), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn constant_loop_has_no_geometric_phase() {
        let path = PathSpec::stationary(vec![0.4, 1.0], 5.0).unwrap();
        let r = adiabatic_phase(&PtDimer, &path, 0, 500).unwrap();
        assert!(r.gamma_sim.abs() < 1e-9, "{}", r.gamma_sim);
        assert!(r.gamma_line.abs() < 1e-12);
    }

    #[test]
    fn recommended_steps_grow_with_duration() {
        assert!(recommended_steps(200.0, 1.0) > recommended_steps(50.0, 1.0));
        assert!(recommended_steps(200.0, 1.0) >= 2000);
    }
}
