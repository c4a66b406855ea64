use models::ModelError;

#[derive(Debug, thiserror::Error)]
pub enum CascadeError {
    #[error("invalid cascade configuration: {0}")]
    InvalidConfig(String),

    #[error(transparent)]
    Model(#[from] ModelError),
}
