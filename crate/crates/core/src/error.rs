use thiserror::Error;

/// Failures raised by the numerical core.
///
/// Variants are split into two families: violations of a geometric or
/// dynamical hypothesis (the input is outside the domain where a statement
/// applies) and numerical failures (the input is fine but a solver or
/// quadrature did not deliver). [`Error::is_hypothesis_failure`] tells them
/// apart; the CLI maps the two families onto distinct exit codes.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("curve failed validation: {0}")]
    InvalidCurve(String),

    #[error("phase point ({t1}, {t2}) is outside the open phase space or within {margin:e} of its boundary")]
    DegeneratePhasePoint { t1: f64, t2: f64, margin: f64 },

    #[error("chord condition has no sign change on the bracket (f at far end = {far_value:e})")]
    BracketFailure { far_value: f64 },

    #[error(
        "root finder did not converge after {iterations} iterations (last |f| = {residual:e})"
    )]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("conjugate map is not strictly increasing near alpha = {alpha}")]
    MonotonicityViolation { alpha: f64 },

    #[error("Radon hypothesis fails: defect {defect:e} exceeds tolerance {tol:e}")]
    RadonHypothesisFailed { defect: f64, tol: f64 },

    #[error("quadrature not converged: doubling nodes changed the value by {change:e} (tolerance {tol:e})")]
    NonConvergedQuadrature { change: f64, tol: f64 },

    #[error("Fourier projection tail {tail:e} exceeds tolerance {tol:e} at k_max = {k_max}")]
    ProjectionTail { tail: f64, tol: f64, k_max: usize },

    #[error("normalization did not converge after {iterations} iterations (residuals {residual_c2:e}, {residual_s2:e})")]
    NormalizationFailed {
        iterations: usize,
        residual_c2: f64,
        residual_s2: f64,
    },

    #[error("orbit step {step} failed: {source}")]
    OrbitStep {
        step: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("invalid input: {0}")]
    InvalidInput(String),
}

impl Error {
    /// True when the failure means a hypothesis of the theory does not hold
    /// for the input, as opposed to a numerical breakdown.
    pub fn is_hypothesis_failure(&self) -> bool {
        match self {
            Error::InvalidCurve(_) | Error::RadonHypothesisFailed { .. } => true,
            Error::OrbitStep { source, .. } => source.is_hypothesis_failure(),
            _ => false,
        }
    }

    /// Short machine-readable tag.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidCurve(_) => "invalid_curve",
            Error::DegeneratePhasePoint { .. } => "degenerate_phase_point",
            Error::BracketFailure { .. } => "bracket_failure",
            Error::NoConvergence { .. } => "no_convergence",
            Error::MonotonicityViolation { .. } => "monotonicity_violation",
            Error::RadonHypothesisFailed { .. } => "radon_hypothesis_failed",
            Error::NonConvergedQuadrature { .. } => "non_converged_quadrature",
            Error::ProjectionTail { .. } => "projection_tail",
            Error::NormalizationFailed { .. } => "normalization_failed",
            Error::OrbitStep { .. } => "orbit_step",
            Error::InvalidInput(_) => "invalid_input",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
