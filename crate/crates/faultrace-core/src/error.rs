use alloc::string::String;
use core::fmt;

/// Errors produced by the analysis pipeline.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CoreError {
    /// An event type was looked up in a frozen symbol table that does not
    /// contain it.
    UnknownEventType { sender: String, api: String, status: String },
    /// A symbol id outside the frozen alphabet was encountered.
    UnknownSymbol { id: u32, alphabet: u32 },
    /// An operation received an empty input it cannot work with.
    EmptyInput(&'static str),
    /// A parameter was outside its documented range.
    InvalidParameter(String),
    /// A fault edit referenced a position outside the backbone.
    EditOutOfRange { position: usize, backbone_len: usize },
    /// The fault-free pool is too small for leave-one-out analysis.
    PoolTooSmall { size: usize },
    /// Ground truth is missing a label required for scoring.
    MissingGroundTruth(String),
}

impl fmt::Display for CoreError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CoreError::UnknownEventType { sender, api, status } => write!(
                f,
                "unknown event type ({sender}, {api}, {status}) for frozen symbol table"
            ),
            CoreError::UnknownSymbol { id, alphabet } => {
                write!(f, "symbol id {id} outside alphabet of size {alphabet}")
            }
            CoreError::EmptyInput(what) => write!(f, "empty input: {what}"),
            CoreError::InvalidParameter(msg) => write!(f, "invalid parameter: {msg}"),
            CoreError::EditOutOfRange { position, backbone_len } => write!(
                f,
                "fault edit position {position} out of range for backbone of length {backbone_len}"
            ),
            CoreError::PoolTooSmall { size } => write!(
                f,
                "fault-free pool has {size} trace(s); need at least 2 for leave-one-out analysis"
            ),
            CoreError::MissingGroundTruth(id) => {
                write!(f, "no ground-truth label for experiment {id}")
            }
        }
    }
}

impl core::error::Error for CoreError {}
