use thiserror::Error;

/// Errors raised by the numerical routines.
///
/// Every variant maps to a stable name (see [`Error::name`]) that the command
/// line driver prints on failure.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("coordinate {p} outside the profile domain [{lo}, {hi}]")]
    Domain { p: f64, lo: f64, hi: f64 },

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("{op}: no convergence after {iterations} iterations (last residual {residual:e})")]
    IterationFailure { op: &'static str, iterations: usize, residual: f64 },

    #[error("lambda {lambda} is not above the admissible floor {floor}")]
    BelowFloor { lambda: f64, floor: f64 },

    #[error("Q(lambda) has no interior minimum (g = 0)")]
    NoMinimum,

    #[error("{0} is undefined for g = 0")]
    Undefined(&'static str),

    #[error("zero-mode superposition is degenerate (|1 - u2(0)| = {0:e})")]
    SuperpositionDegenerate(f64),

    #[error("local bifurcation condition violated: no sign change of D(1, lambda) below {cap}")]
    LbViolated { cap: f64 },

    #[error("denominator form of the Rayleigh quotient is not positive definite")]
    IndefiniteForm,

    #[error("more than one resonant wavenumber n >= 2: {0:?}")]
    MultiplicityExceeded(Vec<usize>),

    #[error("root not found: {0}")]
    RootNotFound(String),

    #[error("singular linear system: {0}")]
    SingularSystem(String),

    #[error("ellipticity lost: h_p = {hp:e} at node (q {i}, p {k})")]
    EllipticityLoss { i: usize, k: usize, hp: f64 },

    #[error("Newton failed after {iterations} iterations (residual {residual:e})")]
    NewtonFailure { iterations: usize, residual: f64 },

    #[error("malformed field dump: {0}")]
    Format(String),
}

impl Error {
    /// Stable identifier used on standard error by the command line driver.
    pub fn name(&self) -> &'static str {
        match self {
            Error::Domain { .. } => "domain-error",
            Error::Invalid(_) => "validation-error",
            Error::Shape(_) => "shape-error",
            Error::IterationFailure { .. } => "iteration-failure",
            Error::BelowFloor { .. } => "domain-error",
            Error::NoMinimum => "no-minimum",
            Error::Undefined(_) => "undefined",
            Error::SuperpositionDegenerate(_) => "superposition-degenerate",
            Error::LbViolated { .. } => "lb-violated",
            Error::IndefiniteForm => "indefinite-form",
            Error::MultiplicityExceeded(_) => "multiplicity-exceeded",
            Error::RootNotFound(_) => "root-not-found",
            Error::SingularSystem(_) => "singular-system",
            Error::EllipticityLoss { .. } => "ellipticity-loss",
            Error::NewtonFailure { .. } => "newton-failure",
            Error::Format(_) => "format-error",
        }
    }

    /// True for errors caused by bad input rather than by a numerical failure.
    pub fn is_validation(&self) -> bool {
        matches!(self, Error::Invalid(_) | Error::Format(_) | Error::Shape(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
