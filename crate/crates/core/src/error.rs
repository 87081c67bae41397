use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("could not place {entity} after {attempts} attempts; geometry is over-constrained")]
    PlacementExhausted { entity: String, attempts: usize },

    #[error("shadowing covariance not factorable: clipped {clipped_fraction:.3e} of eigenvalue mass")]
    CovarianceNotFactorable { clipped_fraction: f64 },

    #[error("jamming MN {mn} has zero estimate quality towards UR {link}")]
    GammaZero { mn: usize, link: usize },

    #[error("simplex did not terminate within {iterations} pivots")]
    NumericalBreakdown { iterations: usize },

    #[error("bisection bracket failure: {0}")]
    BracketFailure(String),
}
