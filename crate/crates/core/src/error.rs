use thiserror::Error;

use crate::function::CostFunction;

/// Errors raised by the toolkit.
///
/// `Structural` signals malformed input (dimension mismatches, out-of-range
/// labels); `Capability` signals a request that exceeds an enumeration cap.
#[derive(Debug, Error)]
pub enum Error {
    #[error("structural error: {0}")]
    Structural(String),

    #[error("capability error: {0}")]
    Capability(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("mu inconsistency on {{{}}}: labels {} and {} both qualify", .0.set.iter().map(ToString::to_string).collect::<Vec<_>>().join(","), .0.first_label, .0.second_label)]
    MuConflict(Box<MuConflict>),
}

impl Error {
    pub(crate) fn structural(msg: impl Into<String>) -> Self {
        Error::Structural(msg.into())
    }

    pub(crate) fn capability(msg: impl Into<String>) -> Self {
        Error::Capability(msg.into())
    }

    pub(crate) fn parse(msg: impl Into<String>) -> Self {
        Error::Parse(msg.into())
    }
}

/// Two labels of one 3-set both qualified for the mu function. The composed
/// function carries the soft edge incident to a self-looped pair that the
/// closure failed to expose as a soft self-loop.
#[derive(Debug, Clone)]
pub struct MuConflict {
    pub set: [usize; 3],
    pub first_label: usize,
    pub first_member: usize,
    pub second_label: usize,
    pub second_member: usize,
    pub composed: CostFunction,
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
