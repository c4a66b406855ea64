use thiserror::Error;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error("speed {0} m/s is outside the bin table")]
    SpeedOutOfRange(f64),

    #[error("manifest line {line}: {what}")]
    ManifestParse { line: usize, what: String },

    #[error("unknown shape \"{0}\"")]
    UnknownShape(String),

    #[error("unknown trajectory \"{0}\"")]
    UnknownTrajectory(String),

    #[error("ground-truth csv line {line}: {what}")]
    GtParse { line: usize, what: String },

    #[error(transparent)]
    Event(#[from] event_core::EventError),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
