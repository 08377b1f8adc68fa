use alloc::string::String;

/// Errors raised by the analysis and simulation routines.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("operation `{operation}` is not supported for {kind} marginals")]
    UnsupportedKind {
        operation: &'static str,
        kind: &'static str,
    },

    #[error("integral diverges: {0}")]
    Divergence(String),

    #[error("quadrature did not reach tolerance (estimated error {estimate:e})")]
    QuadratureFailed { estimate: f64 },

    #[error("stability verdict inconclusive at K = {coupling}: boundary margin {margin:e}")]
    Inconclusive { coupling: f64, margin: f64 },

    #[error("no instability found for K up to {k_max}")]
    NotFound { k_max: f64 },

    #[error("singular integrand: boundary extrapolation disagrees by {discrepancy:e}")]
    SingularIntegrand { discrepancy: f64 },

    #[error("blow-up at t = {time}: |W_{mode}| = {modulus}")]
    BlowUp {
        time: f64,
        mode: usize,
        modulus: f64,
    },

    #[error("sample grids do not match at index {index}")]
    MismatchedGrid { index: usize },

    #[error("insufficient decay in fitting window: {0}")]
    InsufficientDecay(String),

    #[error("weight overflow: a * tau_max = {0} exceeds 30")]
    WeightOverflow(f64),

    #[error("rotation mode missing: |det(I - K/2 M(0))| = {0:e}")]
    RotationModeMissing(f64),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}

pub type Result<T> = core::result::Result<T, Error>;
