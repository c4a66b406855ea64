use event_core::EventError;
use neuro_core::NeuroError;
use sim_cam::SimError;

#[derive(Debug, thiserror::Error)]
pub enum ModelError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("no training samples: {0}")]
    EmptyDataset(String),

    #[error("training diverged at epoch {epoch} (loss {loss})")]
    Diverged { epoch: usize, loss: f64 },

    #[error("checkpoint does not describe this model: {0}")]
    BadCheckpoint(String),

    #[error(transparent)]
    Neuro(#[from] NeuroError),

    #[error(transparent)]
    Event(#[from] EventError),

    #[error(transparent)]
    Sim(#[from] SimError),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
