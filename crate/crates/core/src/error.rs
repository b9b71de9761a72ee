use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A size (number of monomials, grid points) does not fit in `usize`.
    #[error("size overflow: {0}")]
    SizeOverflow(String),

    /// A caller broke a documented precondition.
    #[error("contract violation: {0}")]
    Contract(String),

    #[error("{path}: line {line}: {message}")]
    SiteFile {
        path: PathBuf,
        line: u64,
        message: String,
    },

    #[error("empty site set")]
    EmptySiteSet,

    #[error("too few sites: {sites} sites for {monomials} monomials")]
    TooFewSites { sites: usize, monomials: usize },

    /// Weighted Vandermonde is numerically rank deficient.
    #[error("ill-conditioned Gram matrix at degree {degree} (eigenvalue ratio {ratio:e})")]
    Conditioning { degree: u32, ratio: f64 },

    #[error("certification failed: {bound} violated at radius {radius} (value {value:e} > {limit:e})")]
    Certification {
        bound: &'static str,
        radius: f64,
        value: f64,
        limit: f64,
    },

    #[error("degenerate polynomial: {0}")]
    DegeneratePolynomial(String),

    #[error("eigenvalue iteration did not converge for degree {0}")]
    EigenSolver(usize),

    #[error("unknown distribution key `{0}`")]
    UnknownDistribution(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// True for failures of the numerics (as opposed to bad input).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Conditioning { .. }
                | Error::DegeneratePolynomial(_)
                | Error::EigenSolver(_)
                | Error::Certification { .. }
        )
    }
}
