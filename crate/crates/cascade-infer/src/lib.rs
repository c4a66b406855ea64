//! Multi-object separation by speed: a cascade of spiking separators peels
//! events off fastest-bin-first (masking each claim out of the stream via
//! morphological closing), and the pose/direction network reads out each
//! claimed object.

mod cascade;
mod error;
mod morphology;

pub use cascade::{cascade_infer, CascadeConfig, CascadeOutcome, CascadeTrace, ObjectFlow};
pub use error::CascadeError;
pub use morphology::{close, dilate, erode, invert, make_mask};
