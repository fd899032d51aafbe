use thiserror::Error;

/// Failure modes shared across the toolkit. Validation problems (bad measure
/// data, out-of-range flags) are distinguished from numerical failures so the
/// CLI can map them to different exit codes.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid measure: {0}")]
    InvalidMeasure(String),
    #[error("cannot invert a measure carrying an atom at zero")]
    InversionOfAtomAtZero,
    #[error("evaluation point {0} lies on the support")]
    PointOnSupport(f64),
    #[error("argument {arg} outside the transform domain ({left}, 0)")]
    OutOfDomain { arg: f64, left: f64 },
    #[error("the S-transform of delta_0 is undefined")]
    DeltaZeroMeasure,
    #[error("measure has an atom at zero")]
    AtomAtZero,
    #[error("S-transform table not monotone near z = {0}")]
    NonMonotoneS(f64),
    #[error("first moment must equal 1 (got {0})")]
    VarianceNotNormalized(f64),
    #[error("QR factorization produced a non-unitary factor")]
    QRBreakdown,
    #[error("dense solver failed: {0}")]
    SolverFailure(String),
    #[error("inverse factor condition number exceeded 1e12 after {0} resamples")]
    SingularInverseFactor(usize),
}

impl Error {
    /// True for errors caused by malformed inputs rather than by numerics.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::InvalidMeasure(_)
                | Error::InversionOfAtomAtZero
                | Error::AtomAtZero
                | Error::DeltaZeroMeasure
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
