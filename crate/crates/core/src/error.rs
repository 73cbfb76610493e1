use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("division by a jet with vanishing constant term")]
    DivisionBySingularJet,
    #[error("domain error: {0}")]
    Domain(String),
    #[error("requested derivative order exceeds jet order")]
    OrderExceeded,
    #[error("index {index} out of range for dimension {dim}")]
    IndexOutOfRange { index: usize, dim: usize },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("parse error at byte {offset}: {message}")]
    Parse { offset: usize, message: String },
    #[error("unknown identifier `{name}` at byte {offset}")]
    UnknownIdentifier { name: String, offset: usize },
    #[error("`{name}` at byte {offset} expects {expected} argument(s), got {got}")]
    Arity { name: String, offset: usize, expected: usize, got: usize },
    #[error("unknown flow `{0}`")]
    UnknownFlow(String),
    #[error("missing parameter `{0}`")]
    MissingParameter(String),
    #[error("unknown field `{0}`")]
    UnknownField(String),
    #[error("metric is degenerate")]
    DegenerateMetric,
    #[error("reference form has vanishing top power")]
    DegenerateReference,
    #[error("structure is singular (|fhat| below threshold)")]
    SingularStructure,
    #[error("vorticity vanishes")]
    VanishingVorticity,
    #[error("Hessian metric is degenerate")]
    DegenerateHessian,
    #[error("fold singularity: Hessian determinant below threshold")]
    FoldSingularity,
    #[error("point lies outside the sheet domain")]
    OutsideSheetDomain,
    #[error("metric is not Riemannian along the curve")]
    NonRiemannianAlongCurve,
    #[error("region touches points with f <= 0")]
    MixedSignature,
    #[error("quadrature failed: {0}")]
    QuadratureFailure(String),
    #[error("pressure field required but not supplied")]
    MissingPressure,
    #[error("lambda vanishes")]
    VanishingLambda,
    #[error("operation not available in dimension {0}")]
    Dimension(usize),
    #[error("seed lies in the span of the reference forms")]
    SeedDependent,
    #[error("iteration did not converge: {0}")]
    Convergence(String),
}

impl Error {
    /// Short stable name used in CSV flag columns.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::DivisionBySingularJet => "DivisionBySingularJet",
            Error::Domain(_) => "DomainError",
            Error::OrderExceeded => "OrderExceeded",
            Error::IndexOutOfRange { .. } => "IndexOutOfRange",
            Error::DimensionMismatch(_) => "DimensionMismatch",
            Error::Parse { .. } => "ParseError",
            Error::UnknownIdentifier { .. } => "UnknownIdentifier",
            Error::Arity { .. } => "ArityError",
            Error::UnknownFlow(_) => "UnknownFlow",
            Error::MissingParameter(_) => "MissingParameter",
            Error::UnknownField(_) => "UnknownField",
            Error::DegenerateMetric => "DegenerateMetric",
            Error::DegenerateReference => "DegenerateReference",
            Error::SingularStructure => "SingularStructure",
            Error::VanishingVorticity => "VanishingVorticity",
            Error::DegenerateHessian => "DegenerateHessian",
            Error::FoldSingularity => "FoldSingularity",
            Error::OutsideSheetDomain => "OutsideSheetDomain",
            Error::NonRiemannianAlongCurve => "NonRiemannianAlongCurve",
            Error::MixedSignature => "MixedSignature",
            Error::QuadratureFailure(_) => "QuadratureFailure",
            Error::MissingPressure => "MissingPressure",
            Error::VanishingLambda => "VanishingLambda",
            Error::Dimension(_) => "DimensionError",
            Error::SeedDependent => "SeedDependent",
            Error::Convergence(_) => "ConvergenceFailure",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
