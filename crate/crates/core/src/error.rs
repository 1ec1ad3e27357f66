use thiserror::Error;

use crate::expr::ExprError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error(transparent)]
    Expr(#[from] ExprError),

    #[error("t = {0} lies outside the interval [a, T]")]
    OutOfDomain(f64),

    #[error("tau = {0} lies outside [psi(a), psi(T)]")]
    OutOfRange(f64),

    #[error("gamma function requires a positive argument, got {0}")]
    NonPositiveArgument(f64),

    #[error("negative power of psi_a is singular at the left endpoint")]
    SingularAtLeftEndpoint,

    #[error("invalid fractional order: {0}")]
    InvalidOrder(String),

    #[error("invalid weight function psi: {0}")]
    InvalidPsi(String),

    #[error("finite-difference stencil leaves [a, T] at t = {0}")]
    StencilOutOfDomain(f64),

    #[error("invalid problem: {0}")]
    InvalidProblem(String),

    #[error("degenerate boundary determinant: |Delta| = {0:e} <= 1e-12")]
    DegenerateDelta(f64),

    #[error("missing metadata: {0}")]
    MissingMetadata(String),

    #[error("operator is not contractive (Banach value {0} >= 1)")]
    NotContractive(f64),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),
}

impl Error {
    /// Stable machine-readable name of the error variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Expr(e) => e.kind(),
            Error::OutOfDomain(_) => "OutOfDomain",
            Error::OutOfRange(_) => "OutOfRange",
            Error::NonPositiveArgument(_) => "NonPositiveArgument",
            Error::SingularAtLeftEndpoint => "SingularAtLeftEndpoint",
            Error::InvalidOrder(_) => "InvalidOrder",
            Error::InvalidPsi(_) => "InvalidPsi",
            Error::StencilOutOfDomain(_) => "StencilOutOfDomain",
            Error::InvalidProblem(_) => "InvalidProblem",
            Error::DegenerateDelta(_) => "DegenerateDelta",
            Error::MissingMetadata(_) => "MissingMetadata",
            Error::NotContractive(_) => "NotContractive",
            Error::InvalidGrid(_) => "InvalidGrid",
        }
    }
}
