use thiserror::Error;

/// Failures raised by the eigen-machinery, the geometry layer and the model code.
///
/// Several variants (`DefectiveMatrix`, `Degenerate`, `GaplessPoint`, `AmbiguousMatching`)
/// are not bugs: they are how a critical point announces itself. Callers that scan parameter
/// space are expected to catch them and record the location.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("matrix has non-finite entries")]
    NonFinite,

    #[error("matrix is not square: {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("matrix is defective (exceptional point): {0}")]
    DefectiveMatrix(String),

    #[error("metric operator is not positive definite (smallest eigenvalue {0:e})")]
    NotPositiveDefinite(f64),

    #[error("eigenstate matching is not a permutation: state {0} claimed twice")]
    AmbiguousMatching(usize),

    #[error("gauge factor for level {0} is zero")]
    ZeroScale(usize),

    #[error("level {level} is degenerate (gap {gap:e})")]
    Degenerate { level: usize, gap: f64 },

    #[error("spectrum is not real at this point (PT symmetry broken)")]
    Broken,

    #[error("loop is not closed: first and last vertices differ by {0:e}")]
    OpenLoop(f64),

    #[error("invalid loop: {0}")]
    InvalidLoop(String),

    #[error("metric operator is numerically singular")]
    MetricSingular,

    #[error("time step too large: W-norm drift {0:e} exceeds 1e-6")]
    StepTooLarge(f64),

    #[error("evolution is not adiabatic at t = {t}: instantaneous overlap {overlap}")]
    NotAdiabatic { t: f64, overlap: f64 },

    #[error("unsupported parameter case: {0}")]
    CaseUnsupported(String),

    #[error("gapless mode at k = {k} (|E| = {energy:e})")]
    GaplessPoint { k: f64, energy: f64 },

    #[error("quadrature not converged: relative change {0:e} on doubling")]
    QuadratureUnconverged(f64),

    #[error("invalid input: {0}")]
    InvalidInput(String),
}

impl Error {
    /// True for the failures that mark a critical point rather than a malformed request.
    pub fn is_critical_signal(&self) -> bool {
        matches!(
            self,
            Error::DefectiveMatrix(_)
                | Error::Degenerate { .. }
                | Error::GaplessPoint { .. }
                | Error::AmbiguousMatching(_)
                | Error::Broken
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
