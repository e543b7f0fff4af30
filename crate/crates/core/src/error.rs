use thiserror::Error;

use crate::expr::ParseError;

#[derive(Debug, Error)]
pub enum FinslerError {
    #[error("expression '{source_text}': {error}")]
    Expression { source_text: String, error: ParseError },

    #[error("dimension must be at least 2, got {0}")]
    Dimension(usize),

    #[error("unknown builtin metric '{0}'")]
    UnknownBuiltin(String),

    #[error("coefficient matrix a_ij is not symmetric at x = {point:?}")]
    NotSymmetric { point: Vec<f64> },

    #[error("coefficient matrix a_ij is not positive-definite at x = {point:?}")]
    NotPositiveDefinite { point: Vec<f64> },

    #[error("Randers condition b < 1 violated: ||beta||_alpha = {norm} at x = {point:?}")]
    RandersNorm { norm: f64, point: Vec<f64> },

    #[error("strong convexity violated at x = {x:?}, y = {y:?}: smallest eigenvalue of g_ij is {min_eigenvalue:e}")]
    StrongConvexity { x: Vec<f64>, y: Vec<f64>, min_eigenvalue: f64 },

    #[error("F is not positive at x = {x:?}, y = {y:?} (F = {value})")]
    NotPositive { x: Vec<f64>, y: Vec<f64>, value: f64 },

    #[error("point {point:?} lies outside the domain ({domain})")]
    OutsideDomain { point: Vec<f64>, domain: String },

    #[error("direction {0:?} is within the zero-section guard")]
    ZeroSection(Vec<f64>),

    #[error("non-finite {what} at x = {x:?}, y = {y:?}")]
    NonFinite { what: &'static str, x: Vec<f64>, y: Vec<f64> },

    #[error("degenerate flag: transverse edge is parallel to the flagpole")]
    DegenerateFlag,

    #[error("Ricci tensor is not negative-definite at x = {x:?}, y = {y:?} (largest eigenvalue {max_eigenvalue:e})")]
    RicciNotNegativeDefinite { x: Vec<f64>, y: Vec<f64>, max_eigenvalue: f64 },

    #[error("vanishing first derivative p'(s) = {0:e}")]
    VanishingDerivative(f64),

    #[error("no converged geodesic from {from:?} to {to:?} (best residual {residual:e})")]
    NoGeodesic { from: Vec<f64>, to: Vec<f64>, residual: f64 },

    #[error("not applicable: {0}")]
    NotApplicable(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("metric definition: {0}")]
    Definition(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl FinslerError {
    /// Errors caused by the caller's input (as opposed to a failed computation).
    pub fn is_invalid_input(&self) -> bool {
        matches!(
            self,
            FinslerError::Expression { .. }
                | FinslerError::Dimension(_)
                | FinslerError::UnknownBuiltin(_)
                | FinslerError::NotSymmetric { .. }
                | FinslerError::NotPositiveDefinite { .. }
                | FinslerError::RandersNorm { .. }
                | FinslerError::StrongConvexity { .. }
                | FinslerError::NotPositive { .. }
                | FinslerError::OutsideDomain { .. }
                | FinslerError::ZeroSection(_)
                | FinslerError::DegenerateFlag
                | FinslerError::RicciNotNegativeDefinite { .. }
                | FinslerError::InvalidInput(_)
                | FinslerError::Definition(_)
                | FinslerError::Io(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, FinslerError>;
