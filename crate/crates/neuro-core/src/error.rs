use thiserror::Error;

/// Errors from tensor ops, training, and checkpoint serialization.
#[derive(Debug, Error)]
pub enum NeuroError {
    #[error("shape mismatch in {context}: expected {expected}, got {got}")]
    ShapeMismatch {
        context: &'static str,
        expected: String,
        got: String,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("non-finite gradient for parameter \"{param}\"")]
    NonFiniteGradient { param: String },

    #[error("non-finite loss (training diverged)")]
    NonFiniteLoss,

    #[error("unknown parameter \"{0}\"")]
    UnknownParameter(String),

    #[error("bad checkpoint magic: expected \"TOFC\", found {found:?}")]
    CheckpointBadMagic { found: [u8; 4] },

    #[error("unsupported checkpoint version {0}")]
    CheckpointUnsupportedVersion(u32),

    #[error("truncated checkpoint file")]
    CheckpointTruncated,

    #[error("malformed checkpoint: {0}")]
    CheckpointMalformed(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl NeuroError {
    pub fn shape_mismatch(context: &'static str, expected: String, got: String) -> Self {
        NeuroError::ShapeMismatch {
            context,
            expected,
            got,
        }
    }
}

/// Accepts either a literal description or an actual shape slice.
pub(crate) trait ShapeDesc {
    fn desc(self) -> String;
}

impl ShapeDesc for &str {
    fn desc(self) -> String {
        self.to_string()
    }
}

impl ShapeDesc for &String {
    fn desc(self) -> String {
        self.clone()
    }
}

impl ShapeDesc for &[usize] {
    fn desc(self) -> String {
        format!("{self:?}")
    }
}

pub(crate) fn shape_mismatch(
    context: &'static str,
    expected: impl ShapeDesc,
    got: impl ShapeDesc,
) -> NeuroError {
    NeuroError::ShapeMismatch {
        context,
        expected: expected.desc(),
        got: got.desc(),
    }
}
