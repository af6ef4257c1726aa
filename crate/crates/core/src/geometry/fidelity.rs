use crate::biortho::{cross_overlap, BiorthoEigensystem};
use crate::error::{Error, Result};

/// `F = √|⟨Φ_n(b)|Ψ_n(a)⟩⟨Φ_n(a)|Ψ_n(b)⟩|`; `2(1 − F) ≈ g_μν δλ^μ δλ^ν` for nearby points.
pub fn fidelity(a: &BiorthoEigensystem, b: &BiorthoEigensystem, n: usize) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch { expected: a.dim(), got: b.dim() });
    }
    if n >= a.dim() {
        return Err(Error::InvalidInput(format!("level {n} out of range for dimension {}", a.dim())));
    }
    Ok((cross_overlap(b, n, a, n) * cross_overlap(a, n, b, n)).norm().sqrt())
}

/// `ds² = 2(1 − F)`.
pub fn distance_element(a: &BiorthoEigensystem, b: &BiorthoEigensystem, n: usize) -> Result<f64> {
    Ok(2.0 * (1.0 - fidelity(a, b, n)?))
}
