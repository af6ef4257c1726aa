//! Extended quantum geometric tensor and the quantities derived from it.
//!
//! Everything here is evaluated from biorthonormal eigensystems at a handful of nearby
//! parameter points. Derivatives of eigenvectors are central differences taken after aligning
//! the displaced eigensystems with the one at the centre.

mod berry;
mod derivatives;
mod fidelity;
mod operators;
mod tensor;

pub(crate) use berry::loop_phase;
pub use berry::{berry_phase_loop, curvature_flux, LoopSpec, Rectangle};
pub use derivatives::{default_step, param_derivatives, param_derivatives_with, GaugeMode, ParamDerivatives};
pub use fidelity::{distance_element, fidelity};
pub use operators::{
    classify_interval, o_operators, o_operators_from_derivatives, physical_adjoint, physical_parts, variance_metric,
    variance_metric_from_operators, Interval, IntervalClass, OperatorPair,
};
pub use tensor::{
    berry_curvature, connection_at, metric_perturbative, metric_perturbative_level, metric_tensor, qgt,
    qgt_from_derivatives, Connection, GeomTensor, RMatrix, Scheme,
};
