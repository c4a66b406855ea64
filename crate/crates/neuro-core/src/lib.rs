//! Numerical core: dense f64 tensors, leaky integrate-and-fire dynamics,
//! 2-D convolution, a minimal reverse-mode tape sufficient for the two
//! networks in this workspace, and the surrogate gradient used to train
//! through the spike nonlinearity.
//!
//! Forward inference runs on plain tensors with no tape; training composes
//! the same arithmetic as tape ops and differentiates by walking the tape in
//! reverse creation order.

mod checkpoint;
mod conv;
mod error;
mod lif;
mod optimizer;
mod surrogate;
mod tape;
mod tensor;

pub use checkpoint::{read_checkpoint, write_checkpoint, CHECKPOINT_MAGIC, CHECKPOINT_VERSION};
pub use conv::{conv2d, conv_output_dim, ConvLayer, ConvSpec};
pub use error::NeuroError;
pub use lif::{lif_step, LifLayerState, LifParams};
pub use optimizer::{sgd_step, ClampRule, NamedGrads, ParamSet};
pub use surrogate::{Surrogate, SurrogateKind};
pub use tape::{Gradients, NodeId, SpikeMode, Tape};
pub use tensor::Tensor;
