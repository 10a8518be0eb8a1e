//! Error types shared across the crate.

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// All failure modes of the toolkit.
///
/// Validation failures carry the name of the violated invariant together with
/// the measured residual, so callers can report exactly what was rejected.
#[derive(Debug, Error)]
pub enum Error {
    #[error("sequence too short: need at least {needed} samples, got {got}")]
    SequenceTooShort { needed: usize, got: usize },

    #[error("dimension mismatch in {context}: expected {expected}, got {got}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invariant `{invariant}` violated: residual {residual:.3e} exceeds tolerance {tol:.3e}")]
    InvariantViolation {
        invariant: &'static str,
        residual: f64,
        tol: f64,
    },

    #[error(
        "rank deficiency not reached: numerical rank {rank} equals the Hankel size {n}; \
         increase n or supply more data"
    )]
    RankDeficiencyNotReached { rank: usize, n: usize },

    #[error(
        "eigenvalue of modulus {modulus} near the unit circle has numerical Jordan structure; \
         the sequence is not realizable by a bounded evolution"
    )]
    UnitCircleJordanBlock { modulus: f64 },

    #[error("realization matrix is not a contraction: operator norm {norm} exceeds 1")]
    NotAContraction { norm: f64 },

    #[error("sequence is not real-valued: max imaginary part {max_imag:.3e}")]
    NonRealSequence { max_imag: f64 },

    #[error("z-transform series does not converge at |z| = {modulus}; need |z| > 1")]
    OutsideConvergence { modulus: f64 },

    #[error("evaluation point is within {distance:.3e} of a pole")]
    NearPole { distance: f64 },

    #[error("pole of modulus {modulus} lies outside the closed unit disc")]
    PoleOutsideDisc { modulus: f64 },

    #[error(
        "claimed dimension d = {known_d} is inconsistent with the data: \
         d^2 = {d_squared} < dim V = {dim_v}"
    )]
    InconsistentDimension {
        known_d: usize,
        d_squared: usize,
        dim_v: usize,
    },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit code convention: 2 for validation errors (bad inputs,
    /// violated invariants), 3 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::SequenceTooShort { .. }
            | Error::DimensionMismatch { .. }
            | Error::InvalidParameter(_)
            | Error::InvariantViolation { .. }
            | Error::NonRealSequence { .. }
            | Error::InconsistentDimension { .. }
            | Error::Parse(_)
            | Error::Io(_)
            | Error::Json(_) => 2,
            Error::RankDeficiencyNotReached { .. }
            | Error::UnitCircleJordanBlock { .. }
            | Error::NotAContraction { .. }
            | Error::OutsideConvergence { .. }
            | Error::NearPole { .. }
            | Error::PoleOutsideDisc { .. }
            | Error::Numerical(_) => 3,
        }
    }
}

/// Checks a named invariant, producing [`Error::InvariantViolation`] with the
/// measured residual when it fails.
pub fn check_invariant(invariant: &'static str, residual: f64, tol: f64) -> Result<()> {
    if residual.is_nan() || residual > tol {
        Err(Error::InvariantViolation {
            invariant,
            residual,
            tol,
        })
    } else {
        Ok(())
    }
}
