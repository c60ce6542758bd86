use alloc::boxed::Box;
use alloc::string::String;

use crate::tableau::MethodType;
use crate::trees::Family;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    /// A factor `I - σ L⁽ʳ⁾` could not be inverted; `part` is the zero-based
    /// position of the offending part in its operator.
    #[error("singular factor in shifted solve (part {part})")]
    SingularFactor { part: usize },

    #[error("stage system of the transfer matrix is singular")]
    SingularStageSystem,

    #[error("degenerate tableau parameters: {0}")]
    DegenerateParameters(&'static str),

    #[error("non-finite state after stage {stage}")]
    NonfiniteState { stage: usize },

    #[error("step {step} failed: {source}")]
    StepFailed {
        step: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("tree is not all-meagre; density is defined for classical trees only")]
    NotAMeagreTree,

    #[error("tree does not belong to the {family:?} family used by {method:?} methods")]
    FamilyMismatch { family: Family, method: MethodType },

    #[error("unknown problem `{0}`")]
    UnknownProblem(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    /// Strips any [`Error::StepFailed`] wrappers.
    pub fn root_cause(&self) -> &Error {
        match self {
            Error::StepFailed { source, .. } => source.root_cause(),
            other => other,
        }
    }
}
