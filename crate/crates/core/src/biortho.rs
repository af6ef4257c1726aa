//! Biorthonormal eigensystems of non-Hermitian matrices and the metric operator `W`.
//!
//! Conventions used throughout the crate:
//!
//! * eigenvalues are sorted by real part, then imaginary part;
//! * every right vector `Ψ_n` has unit 2-norm and its largest-magnitude component is real
//!   positive;
//! * left vectors `Φ_n` are eigenvectors of `H†` scaled so that `⟨Φ_m|Ψ_n⟩ = δ_mn`;
//! * `W = Σ_n |Φ_n⟩⟨Φ_n|`, so that `⟨Ψ_m|W|Ψ_n⟩ = δ_mn` and `W H = H† W` on real spectra.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{self, col_inner, frobenius, max_abs, re, CMatrix};

/// Largest `N` for which a failed `H†` route falls back to inverting the right-vector matrix.
pub const INVERSION_FALLBACK_MAX_DIM: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigTolerances {
    /// Eigenvalues closer than `degenerate · spectral radius` form one cluster.
    pub degenerate: f64,
    /// Relative bound on `max |Im E_n|` for the spectrum to count as real.
    pub real: f64,
    /// Smallest admissible `|⟨Φ̂_n|Ψ̂_n⟩|` for unit vectors (reciprocal eigenvalue condition
    /// number). Below it the matrix is treated as sitting on an exceptional point.
    pub min_overlap: f64,
}

impl Default for EigTolerances {
    fn default() -> Self {
        Self { degenerate: 1e-8, real: 1e-9, min_overlap: 1e-7 }
    }
}

#[derive(Debug, Clone)]
pub struct BiorthoEigensystem {
    pub energies: Vec<Complex64>,
    /// Columns are `Ψ_n`.
    pub right: CMatrix,
    /// Columns are `Φ_n`.
    pub left: CMatrix,
    pub unbroken: bool,
    pub tol_real: f64,
}

impl BiorthoEigensystem {
    pub fn dim(&self) -> usize {
        self.energies.len()
    }

    pub fn psi(&self, n: usize) -> nalgebra::DVectorView<'_, Complex64> {
        self.right.column(n)
    }

    pub fn phi(&self, n: usize) -> nalgebra::DVectorView<'_, Complex64> {
        self.left.column(n)
    }

    /// `max_mn |⟨Φ_m|Ψ_n⟩ − δ_mn|`.
    pub fn biorthonormality_residual(&self) -> f64 {
        let s = self.left.adjoint() * &self.right;
        max_abs(&(s - CMatrix::identity(self.dim(), self.dim())))
    }

    /// `‖Σ_n |Ψ_n⟩⟨Φ_n| − I‖_F`.
    pub fn completeness_residual(&self) -> f64 {
        let p = &self.right * self.left.adjoint();
        frobenius(&(p - CMatrix::identity(self.dim(), self.dim())))
    }

    /// Largest right/left eigen-equation residual against `h`.
    pub fn residual(&self, h: &CMatrix) -> f64 {
        let hd = h.adjoint();
        (0..self.dim())
            .map(|n| {
                let e = self.energies[n];
                let r = (h * self.psi(n) - self.psi(n) * e).norm();
                let l = (&hd * self.phi(n) - self.phi(n) * e.conj()).norm();
                r.max(l)
            })
            .fold(0.0, f64::max)
    }

    /// `min_{m≠n} |E_m − E_n|`.
    pub fn gap(&self, n: usize) -> f64 {
        self.energies
            .iter()
            .enumerate()
            .filter(|&(m, _)| m != n)
            .map(|(_, e)| (e - self.energies[n]).norm())
            .fold(f64::INFINITY, f64::min)
    }

    pub fn spectral_radius(&self) -> f64 {
        self.energies.iter().map(|e| e.norm()).fold(0.0, f64::max)
    }

    /// Fails with `Degenerate` when level `n` is closer than `tol` (relative to the spectral
    /// radius) to another level.
    pub fn ensure_nondegenerate(&self, n: usize, tol: f64) -> Result<()> {
        let gap = self.gap(n);
        if gap <= tol * self.spectral_radius().max(f64::MIN_POSITIVE) {
            return Err(Error::Degenerate { level: n, gap });
        }
        Ok(())
    }

    /// Density operator `ρ_n = |Ψ_n⟩⟨Φ_n|`.
    pub fn projector(&self, n: usize) -> CMatrix {
        self.psi(n) * self.phi(n).adjoint()
    }
}

fn sort_order(values: &[Complex64], tie_tol: f64) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[a].re.total_cmp(&values[b].re));
    // Real parts that agree up to round-off are ordered by imaginary part.
    let mut start = 0;
    while start < idx.len() {
        let mut end = start + 1;
        while end < idx.len() && (values[idx[end]].re - values[idx[end - 1]].re).abs() <= tie_tol {
            end += 1;
        }
        idx[start..end].sort_by(|&a, &b| values[a].im.total_cmp(&values[b].im));
        start = end;
    }
    idx
}

/// Make the largest-magnitude component real positive (unit norm is assumed).
fn fix_phase(v: &mut CMatrix, col: usize) {
    let mut best = 0;
    let mut best_abs = -1.0;
    for (i, z) in v.column(col).iter().enumerate() {
        // strict comparison with a relative margin keeps the pick stable under round-off
        if z.norm() > best_abs * (1.0 + 1e-12) {
            best = i;
            best_abs = z.norm();
        }
    }
    if best_abs > 0.0 {
        let phase = v[(best, col)] / best_abs;
        let mut c = v.column_mut(col);
        c /= phase;
        v[(best, col)] = re(v[(best, col)].norm());
    }
}

/// Groups of consecutive (sorted) eigenvalue indices closer than `tol`.
fn clusters(values: &[Complex64], tol: f64) -> Vec<std::ops::Range<usize>> {
    let mut out = Vec::new();
    let mut start = 0;
    for i in 1..=values.len() {
        if i == values.len() || (values[i] - values[i - 1]).norm() > tol {
            out.push(start..i);
            start = i;
        }
    }
    out
}

fn smallest_singular_value(m: &CMatrix) -> f64 {
    m.clone().svd(false, false).singular_values.iter().copied().fold(f64::INFINITY, f64::min)
}

/// Rescale the left vectors block by block so that `L† R = I`.
fn biorthonormalize(
    right: &CMatrix,
    left: &mut CMatrix,
    values: &[Complex64],
    tol_abs: f64,
    min_overlap: f64,
) -> Result<()> {
    for block in clusters(values, tol_abs) {
        let r = right.columns(block.start, block.len()).into_owned();
        let mut l = left.columns(block.start, block.len()).into_owned();
        for j in 0..l.ncols() {
            let norm = l.column(j).norm();
            if !(norm > 0.0 && norm.is_finite()) {
                return Err(Error::DefectiveMatrix(format!("left vector {} vanishes", block.start + j)));
            }
            let mut col = l.column_mut(j);
            col /= re(norm);
        }
        let s = l.adjoint() * &r;
        let sigma = smallest_singular_value(&s);
        if sigma.is_nan() || sigma < min_overlap {
            return Err(Error::DefectiveMatrix(format!(
                "eigenvector overlap block at levels {:?} is singular (σ_min = {sigma:e})",
                block
            )));
        }
        let s_inv =
            linalg::inverse(&s).ok_or_else(|| Error::DefectiveMatrix(format!("singular overlap block {:?}", block)))?;
        let fixed = l * s_inv.adjoint();
        left.columns_mut(block.start, block.len()).copy_from(&fixed);
    }
    Ok(())
}

/// Left vectors from an independent eigendecomposition of `H†`, matched to the (sorted)
/// right eigenvalues by nearest conjugate.
fn left_from_adjoint(h: &CMatrix, sorted: &[Complex64]) -> Result<CMatrix> {
    let (lvals, lvecs) = linalg::eig_general(&h.adjoint())?;
    let n = sorted.len();
    let mut used = vec![false; n];
    let mut left = CMatrix::zeros(n, n);
    for (k, e) in sorted.iter().enumerate() {
        let target = e.conj();
        let m = (0..n)
            .filter(|&m| !used[m])
            .min_by(|&a, &b| (lvals[a] - target).norm().total_cmp(&(lvals[b] - target).norm()))
            .expect("one unused partner remains per level");
        used[m] = true;
        left.set_column(k, &lvecs.column(m));
    }
    Ok(left)
}

/// Left vectors as the conjugate rows of `R⁻¹`.
pub fn left_by_inversion(right: &CMatrix) -> Result<CMatrix> {
    linalg::inverse(right)
        .map(|inv| inv.adjoint())
        .ok_or_else(|| Error::DefectiveMatrix("right eigenvector matrix is singular".into()))
}

/// Biorthonormal eigendecomposition of a square complex matrix.
pub fn biortho_eig(h: &CMatrix, tol: EigTolerances) -> Result<BiorthoEigensystem> {
    let n = linalg::ensure_square(h)?;
    if !linalg::is_finite(h) {
        return Err(Error::NonFinite);
    }
    let (values, vectors) = linalg::eig_general(h)?;
    let radius = values.iter().map(|e| e.norm()).fold(0.0, f64::max);
    let tol_abs = tol.degenerate * radius;

    let order = sort_order(&values, tol_abs);
    let energies: Vec<Complex64> = order.iter().map(|&k| values[k]).collect();
    let mut right = CMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        right.set_column(dst, &vectors.column(src));
        fix_phase(&mut right, dst);
    }

    let mut left = left_from_adjoint(h, &energies)?;
    if let Err(err) = biorthonormalize(&right, &mut left, &energies, tol_abs, tol.min_overlap) {
        if n > INVERSION_FALLBACK_MAX_DIM {
            return Err(err);
        }
        log::debug!("H† route failed ({err}); falling back to inversion");
        left = left_by_inversion(&right)?;
        biorthonormalize(&right, &mut left, &energies, tol_abs, tol.min_overlap)?;
    }

    let max_im = energies.iter().map(|e| e.im.abs()).fold(0.0, f64::max);
    let unbroken = max_im <= tol.real * radius;
    Ok(BiorthoEigensystem { energies, right, left, unbroken, tol_real: tol.real })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MetricSource {
    FromEigensystem,
    UserSupplied,
}

/// Positive-definite `W` defining the inner product `⟨·|W|·⟩`.
#[derive(Debug, Clone)]
pub struct MetricOperator {
    pub matrix: CMatrix,
    pub source: MetricSource,
}

impl MetricOperator {
    /// Validate a caller-provided `W` (Hermitian to `1e-10` relative, positive definite).
    pub fn user_supplied(matrix: CMatrix) -> Result<Self> {
        linalg::ensure_square(&matrix)?;
        if linalg::hermiticity_residual(&matrix) > 1e-10 * max_abs(&matrix).max(1.0) {
            return Err(Error::InvalidInput("metric operator is not Hermitian".into()));
        }
        let lmin = linalg::min_hermitian_eigenvalue(&matrix);
        if lmin.is_nan() || lmin <= 0.0 {
            return Err(Error::NotPositiveDefinite(lmin));
        }
        Ok(Self { matrix, source: MetricSource::UserSupplied })
    }

    pub fn inverse(&self) -> Result<CMatrix> {
        linalg::inverse(&self.matrix).ok_or(Error::MetricSingular)
    }

    /// `‖W H − H† W‖_F`.
    pub fn intertwining_residual(&self, h: &CMatrix) -> f64 {
        frobenius(&(&self.matrix * h - h.adjoint() * &self.matrix))
    }

    /// `⟨a|W|b⟩`.
    pub fn inner(&self, a: &CMatrix, i: usize, b: &CMatrix, j: usize) -> Complex64 {
        let wb = &self.matrix * b.column(j);
        linalg::inner(a.column(i).iter(), wb.iter())
    }
}

/// `W = Σ_n |Φ_n⟩⟨Φ_n|`.
pub fn build_w(eig: &BiorthoEigensystem) -> Result<MetricOperator> {
    let matrix = &eig.left * eig.left.adjoint();
    let lmin = linalg::min_hermitian_eigenvalue(&matrix);
    let scale = max_abs(&matrix).max(f64::MIN_POSITIVE);
    if lmin.is_nan() || lmin <= 1e-14 * scale {
        return Err(Error::NotPositiveDefinite(lmin));
    }
    Ok(MetricOperator { matrix, source: MetricSource::FromEigensystem })
}

/// Reorder the levels of `cur` to follow `prev`: level `n` of the result is the state of `cur`
/// with the largest `|⟨Φ_n^prev|Ψ_m^cur⟩|`. Also returns the matched overlaps.
pub fn match_levels(
    prev: &BiorthoEigensystem,
    cur: &BiorthoEigensystem,
) -> Result<(BiorthoEigensystem, Vec<Complex64>)> {
    let n = prev.dim();
    if cur.dim() != n {
        return Err(Error::DimensionMismatch { expected: n, got: cur.dim() });
    }
    let overlaps: DMatrix<Complex64> = prev.left.adjoint() * &cur.right;
    let mut perm = vec![0usize; n];
    let mut claimed = vec![false; n];
    for (k, slot) in perm.iter_mut().enumerate() {
        let m = (0..n).max_by(|&a, &b| overlaps[(k, a)].norm().total_cmp(&overlaps[(k, b)].norm())).expect("non-empty");
        if claimed[m] || overlaps[(k, m)].norm() == 0.0 {
            return Err(Error::AmbiguousMatching(m));
        }
        claimed[m] = true;
        *slot = m;
    }
    let mut out = cur.clone();
    for (k, &m) in perm.iter().enumerate() {
        out.energies[k] = cur.energies[m];
        out.right.set_column(k, &cur.right.column(m));
        out.left.set_column(k, &cur.left.column(m));
    }
    let matched = perm.iter().enumerate().map(|(k, &m)| overlaps[(k, m)]).collect();
    Ok((out, matched))
}

/// Reorder `cur` to follow `prev` and remove its phase relative to `prev`, so that
/// `⟨Φ_n^prev|Ψ_n^cur⟩` is real positive for every level.
pub fn gauge_fix(prev: &BiorthoEigensystem, cur: &BiorthoEigensystem) -> Result<BiorthoEigensystem> {
    let (ordered, overlaps) = match_levels(prev, cur)?;
    let factors: Vec<Complex64> = overlaps.iter().map(|ov| ov.norm() / ov).collect();
    gauge_transform(&ordered, &factors)
}

/// `Ψ_n → f_n Ψ_n`, `Φ_n → Φ_n / f_n*`; biorthonormality is preserved.
pub fn gauge_transform(eig: &BiorthoEigensystem, f: &[Complex64]) -> Result<BiorthoEigensystem> {
    if f.len() != eig.dim() {
        return Err(Error::DimensionMismatch { expected: eig.dim(), got: f.len() });
    }
    if let Some(n) = f.iter().position(|z| z.norm() == 0.0 || !z.norm().is_finite()) {
        return Err(Error::ZeroScale(n));
    }
    let mut out = eig.clone();
    for (n, fz) in f.iter().enumerate() {
        let mut r = out.right.column_mut(n);
        r *= *fz;
        let mut l = out.left.column_mut(n);
        l /= fz.conj();
    }
    Ok(out)
}

/// `⟨Φ_m|Ψ_n⟩` from two (possibly different) eigensystems.
pub fn cross_overlap(a: &BiorthoEigensystem, m: usize, b: &BiorthoEigensystem, n: usize) -> Complex64 {
    col_inner(&a.left, m, &b.right, n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::c;

    fn diag(v: &[f64]) -> CMatrix {
        CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(v.len(), v.iter().map(|&x| re(x))))
    }

    #[test]
    fn diagonal_hermitian_case() {
        let eig = biortho_eig(&diag(&[1.0, 2.0, 3.0]), EigTolerances::default()).unwrap();
        let e: Vec<f64> = eig.energies.iter().map(|z| z.re).collect();
        assert_eq!(e, vec![1.0, 2.0, 3.0]);
        let id = CMatrix::identity(3, 3);
        assert!(max_abs(&(&eig.right - &id)) < 1e-14);
        assert!(max_abs(&(&eig.left - &id)) < 1e-14);
        assert!(eig.unbroken);
    }

    #[test]
    fn unsorted_diagonal_is_sorted_with_vectors() {
        let eig = biortho_eig(&diag(&[3.0, 1.0, 2.0]), EigTolerances::default()).unwrap();
        let e: Vec<f64> = eig.energies.iter().map(|z| z.re).collect();
        assert_eq!(e, vec![1.0, 2.0, 3.0]);
        assert!((eig.right[(1, 0)] - re(1.0)).norm() < 1e-14);
        assert!((eig.right[(2, 1)] - re(1.0)).norm() < 1e-14);
        assert!((eig.right[(0, 2)] - re(1.0)).norm() < 1e-14);
    }

    #[test]
    fn jordan_block_is_defective() {
        let h = CMatrix::from_row_slice(2, 2, &[re(1.0), re(1.0), re(0.0), re(1.0)]);
        assert!(matches!(biortho_eig(&h, EigTolerances::default()), Err(Error::DefectiveMatrix(_))));
    }

    #[test]
    fn pt_exceptional_point_is_defective() {
        let a = 0.7;
        let h = CMatrix::from_row_slice(2, 2, &[c(0.0, a), re(a), re(a), c(0.0, -a)]);
        assert!(matches!(biortho_eig(&h, EigTolerances::default()), Err(Error::DefectiveMatrix(_))));
    }

    #[test]
    fn non_finite_rejected() {
        let h = CMatrix::from_row_slice(1, 1, &[re(f64::NAN)]);
        assert_eq!(biortho_eig(&h, EigTolerances::default()).unwrap_err(), Error::NonFinite);
    }

    #[test]
    fn identity_matrix_degenerate_cluster_is_biorthonormal() {
        let eig = biortho_eig(&CMatrix::identity(4, 4), EigTolerances::default()).unwrap();
        assert!(eig.biorthonormality_residual() < 1e-12);
        assert!(eig.completeness_residual() < 1e-12);
    }

    #[test]
    fn broken_spectrum_flagged() {
        let h = CMatrix::from_row_slice(2, 2, &[c(0.0, 1.0), re(0.5), re(0.5), c(0.0, -1.0)]);
        let eig = biortho_eig(&h, EigTolerances::default()).unwrap();
        assert!(!eig.unbroken);
        // conjugate pair ordered by imaginary part
        assert!(eig.energies[0].im < eig.energies[1].im);
    }

    #[test]
    fn right_vector_phase_convention() {
        let h = CMatrix::from_row_slice(2, 2, &[c(0.0, 0.3), re(1.0), re(1.0), c(0.0, -0.3)]);
        let eig = biortho_eig(&h, EigTolerances::default()).unwrap();
        for n in 0..2 {
            let col = eig.psi(n);
            assert!((col.norm() - 1.0).abs() < 1e-14);
            // both components have equal modulus here; the first one carries the phase
            let max = col.iter().map(|z| z.norm()).fold(0.0, f64::max);
            let big = col.iter().find(|z| z.norm() >= max * (1.0 - 1e-12)).unwrap();
            assert!(big.im.abs() < 1e-15 && big.re > 0.0);
        }
    }

    #[test]
    fn inversion_and_adjoint_routes_agree() {
        let h = CMatrix::from_row_slice(
            3,
            3,
            &[re(1.0), c(0.2, 0.1), re(0.0), c(0.0, 0.3), re(-0.5), re(0.4), re(0.1), c(0.3, -0.2), re(2.0)],
        );
        let eig = biortho_eig(&h, EigTolerances::default()).unwrap();
        let by_inv = left_by_inversion(&eig.right).unwrap();
        assert!(max_abs(&(&by_inv - &eig.left)) < 1e-10);
    }

    #[test]
    fn build_w_hermitian_limit_is_identity() {
        let h = CMatrix::from_row_slice(2, 2, &[re(1.0), c(0.0, 0.5), c(0.0, -0.5), re(-1.0)]);
        let eig = biortho_eig(&h, EigTolerances::default()).unwrap();
        let w = build_w(&eig).unwrap();
        assert!(max_abs(&(w.matrix - CMatrix::identity(2, 2))) < 1e-10);
    }

    #[test]
    fn gauge_fix_removes_pure_phase() {
        let h = CMatrix::from_row_slice(2, 2, &[c(0.0, 0.3), re(1.0), re(1.0), c(0.0, -0.3)]);
        let eig = biortho_eig(&h, EigTolerances::default()).unwrap();
        let phase = Complex64::from_polar(1.0, 0.4);
        // Φ picks up the same e^{iθ}; that is f = e^{iθ}, 1/f* = e^{iθ}.
        let rotated = gauge_transform(&eig, &[phase, phase]).unwrap();
        let fixed = gauge_fix(&eig, &rotated).unwrap();
        assert!(max_abs(&(&fixed.right - &eig.right)) < 1e-12);
        assert!(max_abs(&(&fixed.left - &eig.left)) < 1e-12);
        let same = gauge_fix(&eig, &eig).unwrap();
        assert!(max_abs(&(&same.right - &eig.right)) < 1e-15);
    }

    #[test]
    fn gauge_fix_restores_order() {
        let eig = biortho_eig(&diag(&[1.0, 2.0, 3.0]), EigTolerances::default()).unwrap();
        let mut swapped = eig.clone();
        swapped.right.swap_columns(0, 2);
        swapped.left.swap_columns(0, 2);
        swapped.energies.swap(0, 2);
        let fixed = gauge_fix(&eig, &swapped).unwrap();
        assert_eq!(fixed.energies, eig.energies);
    }

    #[test]
    fn gauge_transform_rules() {
        let eig = biortho_eig(&diag(&[1.0, 2.0]), EigTolerances::default()).unwrap();
        assert_eq!(gauge_transform(&eig, &[re(1.0), re(0.0)]).unwrap_err(), Error::ZeroScale(1));
        let t = gauge_transform(&eig, &[re(2.0), re(2.0)]).unwrap();
        assert!((t.right[(0, 0)] - re(2.0)).norm() < 1e-15);
        assert!((t.left[(0, 0)] - re(0.5)).norm() < 1e-15);
        assert!(t.biorthonormality_residual() < 1e-15);
    }
}
