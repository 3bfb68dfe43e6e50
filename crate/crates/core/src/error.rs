use thiserror::Error;

/// Errors raised by the factorization, evaluation and quadrature layers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("weight is not positive on the real line: {0}")]
    NotPositive(String),

    #[error("weight polynomial has odd degree {0}")]
    OddDegree(usize),

    #[error("root finding did not converge: {0}")]
    RootFindingFailed(String),

    #[error("root {re} {im:+}i lies within tolerance of the real axis")]
    NearRealRoot { re: f64, im: f64 },

    #[error("phase unwrapping failed near x = {0}")]
    UnwrapFailure(f64),

    #[error("operation requires an even function: {0}")]
    NotEven(String),

    #[error("function vanishes at the origin")]
    ZeroAtOrigin,

    #[error("series or contour integral converges too slowly: {0}")]
    SlowConvergence(String),

    #[error("degree-one Laguerre-Polya function: inverse transform is a principal value")]
    PrincipalValueCase,

    #[error("interpolant branches disagree: fast path {fast}, quadrature {quadrature}")]
    BranchMismatch { fast: f64, quadrature: f64 },

    #[error("parity E(-z) = E*(z) violated (defect {0:e})")]
    ParityViolated(f64),

    #[error("degenerate denominator in closed-form approximant")]
    DegenerateDenominator,

    #[error("ratio E(-i lambda)/E(i lambda) = {0} outside (-1, 1)")]
    RatioOutOfRange(f64),

    #[error("tail of integrand decays too slowly to certify: {0}")]
    TailUncertified(String),

    #[error("quadrature did not converge: {0}")]
    NoConvergence(String),

    #[error("configuration error: {0}")]
    Config(String),
}

impl Error {
    /// True for failures of a numerical procedure, as opposed to rejected input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::RootFindingFailed(_)
                | Error::UnwrapFailure(_)
                | Error::SlowConvergence(_)
                | Error::BranchMismatch { .. }
                | Error::ParityViolated(_)
                | Error::DegenerateDenominator
                | Error::RatioOutOfRange(_)
                | Error::TailUncertified(_)
                | Error::NoConvergence(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
