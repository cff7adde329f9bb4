use thiserror::Error;

#[derive(Debug, Error)]
pub enum EbiError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("non-finite matrix or vector entry")]
    NonFinite,
    #[error("matrix is not Hermitian (max |A - A^dagger| = {0:.3e})")]
    NotHermitian(f64),
    #[error("not a Hermitian involution: {0}")]
    InvalidObservable(String),
    #[error("state is not normalized (norm = {0})")]
    NotNormalized(f64),
    #[error("correlator has imaginary part {0:.3e}")]
    ComplexCorrelator(f64),
    #[error("invalid family spec: {0}")]
    SpecInvalid(String),
    #[error("unsupported dimension: {0}")]
    UnsupportedDimension(String),
    #[error("scenario is not a maximal violator (S = {value}, deficit {deficit:.3e})")]
    NotMaximal { value: f64, deficit: f64 },
    #[error("A1 eigenspaces of unequal dimension in block {block}: {plus} vs {minus}")]
    UnequalEigenspaceSplit {
        block: usize,
        plus: usize,
        minus: usize,
    },
    #[error("A3 is not block-proportional to Y in block {block} (residual {residual:.3e})")]
    NonYBlock { block: usize, residual: f64 },
    #[error("Bob's observables do not match the transpose formulas in block {block} (residual {residual:.3e})")]
    TransposeMismatch { block: usize, residual: f64 },
    #[error("structural check {check} failed (residual {residual:.3e})")]
    CheckFailed { check: String, residual: f64 },
    #[error("not an involution: {0}")]
    NotInvolution(String),
    #[error("invalid scenario file: {0}")]
    Format(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl EbiError {
    /// Short variant name, used in CLI diagnostics and reports.
    pub fn name(&self) -> &'static str {
        match self {
            EbiError::DimensionMismatch(_) => "DimensionMismatch",
            EbiError::NonFinite => "NonFinite",
            EbiError::NotHermitian(_) => "NotHermitian",
            EbiError::InvalidObservable(_) => "InvalidObservable",
            EbiError::NotNormalized(_) => "NotNormalized",
            EbiError::ComplexCorrelator(_) => "ComplexCorrelator",
            EbiError::SpecInvalid(_) => "SpecInvalid",
            EbiError::UnsupportedDimension(_) => "UnsupportedDimension",
            EbiError::NotMaximal { .. } => "NotMaximal",
            EbiError::UnequalEigenspaceSplit { .. } => "UnequalEigenspaceSplit",
            EbiError::NonYBlock { .. } => "NonYBlock",
            EbiError::TransposeMismatch { .. } => "TransposeMismatch",
            EbiError::CheckFailed { .. } => "CheckFailed",
            EbiError::NotInvolution(_) => "NotInvolution",
            EbiError::Format(_) => "Format",
            EbiError::Json(_) => "Json",
            EbiError::Io(_) => "Io",
        }
    }
}

pub type Result<T> = std::result::Result<T, EbiError>;
