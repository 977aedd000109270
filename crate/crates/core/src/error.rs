use thiserror::Error;

/// Errors raised by the toolkit.
///
/// Variants split into *validation* failures (the caller handed in an object
/// that violates a contract, e.g. a non-positive density) and *numerical*
/// failures (an algorithm did not reach its own accuracy target).
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("matrix is not Hermitian (defect {defect:.3e})")]
    NotHermitian { defect: f64 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("cannot normalize a zero vector")]
    ZeroVector,

    #[error("invalid density matrix: {0}")]
    InvalidDensity(String),

    #[error("invalid PVM: {0}")]
    InvalidPvm(String),

    #[error("invalid POVM: {0}")]
    InvalidPovm(String),

    #[error("map is not completely positive (min Choi eigenvalue {min_eigenvalue:.3e})")]
    NotCompletelyPositive { min_eigenvalue: f64 },

    #[error("channel is not trace preserving (defect {defect:.3e})")]
    NotTracePreserving { defect: f64 },

    #[error("conditioning on an event of probability {prob:.3e}")]
    ZeroProbability { prob: f64 },

    #[error("member {index} of the quantum code is not unitary (defect {defect:.3e})")]
    NotUnitary { index: usize, defect: f64 },

    #[error("element lies outside the algebra (projection residual {residual:.3e})")]
    OutsideSpan { residual: f64 },

    #[error("functional is not *-consistent or not representable (residual {residual:.3e})")]
    InconsistentFunctional { residual: f64 },

    #[error("measure of finite type m0 = {m0}: cannot extract {requested} recurrence steps")]
    FiniteType { m0: usize, requested: usize },

    #[error("invalid configuration: {0}")]
    Configuration(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("serialization: {0}")]
    Serde(String),
}

impl Error {
    /// `true` for contract violations by the input, `false` for internal
    /// numerical failures.
    pub fn is_validation(&self) -> bool {
        !matches!(self, Error::Numerical(_))
    }

    /// Stable snake_case name of the variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Shape(_) => "shape",
            Error::NotHermitian { .. } => "not_hermitian",
            Error::Domain(_) => "domain",
            Error::ZeroVector => "zero_vector",
            Error::InvalidDensity(_) => "invalid_density",
            Error::InvalidPvm(_) => "invalid_pvm",
            Error::InvalidPovm(_) => "invalid_povm",
            Error::NotCompletelyPositive { .. } => "not_completely_positive",
            Error::NotTracePreserving { .. } => "not_trace_preserving",
            Error::ZeroProbability { .. } => "zero_probability",
            Error::NotUnitary { .. } => "not_unitary",
            Error::OutsideSpan { .. } => "outside_span",
            Error::InconsistentFunctional { .. } => "inconsistent_functional",
            Error::FiniteType { .. } => "finite_type",
            Error::Configuration(_) => "configuration",
            Error::Numerical(_) => "numerical",
            Error::Serde(_) => "serde",
        }
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Serde(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
