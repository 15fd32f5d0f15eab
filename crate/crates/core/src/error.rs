use alloc::string::String;

/// Errors raised by the core computations.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// A value was outside the domain of the operation (e.g. non-positive altitude).
    #[error("domain error: {0}")]
    Domain(&'static str),
    /// A policy that needs detections was handed an empty list.
    #[error("no detections")]
    NoDetections,
    /// A statistic was requested over an empty series.
    #[error("empty series")]
    EmptySeries,
    /// Reconciliation or labelling needs at least one telemetry record.
    #[error("empty telemetry")]
    EmptyTelemetry,
    /// Predicted and expert sequences are not aligned.
    #[error("length mismatch: {predicted} predictions vs {expert} labels")]
    LengthMismatch { predicted: usize, expert: usize },
    /// A configuration invariant is violated; `field` names the offending key.
    #[error("invalid config `{field}`: {reason}")]
    InvalidConfig { field: &'static str, reason: String },
}

pub type Result<T> = core::result::Result<T, Error>;

pub(crate) fn invalid(field: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidConfig {
        field,
        reason: reason.into(),
    }
}
