//! First and second integrals, reformulations, steady states, eigenpairs,
//! and vector fields.

mod eigen;
mod field;
mod integrals;
mod steady;

pub use eigen::{eigen_small, EigenDecomposition, CLUSTER_TOL};
pub use field::{sample_vector_field, FieldSample, Grid2, STATIONARY_TOL};
pub use integrals::{
    first_integral_residual, reformulate_projection, reformulate_state_scaled, second_integral_residual,
    AffineFunctional, ScalarField, IDENTITY_SAMPLES,
};
pub use steady::{
    analyze_steady_state, classify_stability, hardy_weinberg_limit, modified2_limit, steady_state_catalog,
    steady_state_family3, steady_state_modified3, Stability, SteadyStateRecord, STABILITY_TOL,
    STEADY_RESIDUAL_TOL,
};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AnalysisError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("unsupported dimension {0}")]
    UnsupportedDimension(usize),
    #[error("non-finite values")]
    NonFinite,
    #[error("domain error: {0}")]
    Domain(String),
    #[error("alpha(q) = {alpha} differs from g·q = {expected} at q = {witness:?}")]
    IdentityViolation {
        witness: Vec<f64>,
        alpha: f64,
        expected: f64,
    },
    #[error("{point:?} is not a steady state (‖f‖∞ = {residual:e})")]
    NotSteady { point: Vec<f64>, residual: f64 },
}
