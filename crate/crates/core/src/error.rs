use thiserror::Error;

/// Errors produced by the analyses in this crate.
///
/// Variants fall into two families: rejected input (the caller asked for
/// something outside an operation's domain) and numeric inconsistency (the
/// floating-point screen and the exact certificate disagree, or tracking broke
/// down). The CLI maps these to distinct exit codes.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("parse error at position {position}: {message}")]
    Parse { position: usize, message: String },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("root finder did not converge for polynomial {poly}")]
    NonConvergence { poly: String },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("point {point} is within {distance:e} of the critical value {critical}")]
    TooCloseToSigma {
        point: String,
        critical: String,
        distance: f64,
    },

    #[error("step size underflow at t = {at}; perturb the loop and retry")]
    StepUnderflow { at: String },

    #[error(
        "roots collided along the path near t = {at}; loop passes too close to a critical value"
    )]
    RootCollision { at: String },

    #[error("critical point is not Morse: {0}")]
    NotMorse(String),

    #[error("composite modulus {0} not supported")]
    CompositeModulus(usize),

    #[error("numeric inconsistency: {0}")]
    Inconsistency(String),
}

impl Error {
    /// True for errors caused by the input itself rather than by numerics.
    pub fn is_rejected_input(&self) -> bool {
        matches!(
            self,
            Error::Parse { .. }
                | Error::InvalidInput(_)
                | Error::Degenerate(_)
                | Error::TooCloseToSigma { .. }
                | Error::NotMorse(_)
                | Error::CompositeModulus(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
