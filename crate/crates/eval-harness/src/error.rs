use thiserror::Error;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("invalid evaluation config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Sim(#[from] sim_cam::SimError),
    #[error(transparent)]
    Model(#[from] models::ModelError),
    #[error(transparent)]
    Cascade(#[from] cascade_infer::CascadeError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
