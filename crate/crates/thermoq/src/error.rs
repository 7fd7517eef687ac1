use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimMismatch(String),
    #[error("matrix contains non-finite entries")]
    NonFinite,
    #[error("operator is not Hermitian (deviation {0:e})")]
    NotHermitian(f64),
    #[error("operator is not positive semidefinite (min eigenvalue {0:e})")]
    NotPSD(f64),
    #[error("invalid state: {0}")]
    InvalidState(String),
    #[error("invalid effect: {0}")]
    InvalidEffect(String),
    #[error("invalid projection: {0}")]
    InvalidProjection(String),
    #[error("dual image of the unit exceeds the unit (max eigenvalue {0})")]
    NotSubunital(f64),
    #[error("map is not trace preserving (deviation {0:e})")]
    NotTracePreserving(f64),
    #[error("center eigenvalue grouping is ambiguous after re-draws")]
    DegenerateCenter,
    #[error("block {block} is reducible but admits no finer commuting projection")]
    RefinementStall { block: usize },
    #[error("factorization failed: {0}")]
    FactorizationFailed(String),
    #[error("precondition unmet: {0}")]
    PreconditionUnmet(String),
    #[error("operation for outcome '{0}' is not strictly positive")]
    NotStrictlyPositiveOperation(String),
    #[error("apparatus state is not strictly positive")]
    XiNotStrictlyPositive,
    #[error("unknown outcome '{0}'")]
    UnknownOutcome(String),
    #[error("not normalized: {0}")]
    NotNormalized(String),
    #[error("unknown generator '{0}'")]
    UnknownGenerator(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl Error {
    /// Short machine-readable name used in structured error output.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::DimMismatch(_) => "DimMismatch",
            Error::NonFinite => "NonFinite",
            Error::NotHermitian(_) => "NotHermitian",
            Error::NotPSD(_) => "NotPSD",
            Error::InvalidState(_) => "InvalidState",
            Error::InvalidEffect(_) => "InvalidEffect",
            Error::InvalidProjection(_) => "InvalidProjection",
            Error::NotSubunital(_) => "NotSubunital",
            Error::NotTracePreserving(_) => "NotTracePreserving",
            Error::DegenerateCenter => "DegenerateCenter",
            Error::RefinementStall { .. } => "RefinementStall",
            Error::FactorizationFailed(_) => "FactorizationFailed",
            Error::PreconditionUnmet(_) => "PreconditionUnmet",
            Error::NotStrictlyPositiveOperation(_) => "NotStrictlyPositiveOperation",
            Error::XiNotStrictlyPositive => "XiNotStrictlyPositive",
            Error::UnknownOutcome(_) => "UnknownOutcome",
            Error::NotNormalized(_) => "NotNormalized",
            Error::UnknownGenerator(_) => "UnknownGenerator",
            Error::Numerical(_) => "Numerical",
        }
    }
}

const TAG: &str = "\u{1f}";

/// Error text for serde `try_from` hooks, recoverable with [`untag`].
pub(crate) fn tagged(e: Error) -> String {
    format!("{}{TAG}{e}", e.kind())
}

/// Split a message produced by a validating deserializer into `(kind, message)`.
pub fn untag(msg: &str) -> Option<(&str, &str)> {
    let (kind, rest) = msg.split_once(TAG)?;
    let kind = kind.rsplit(|c: char| !c.is_ascii_alphanumeric()).next()?;
    Some((kind, rest))
}
