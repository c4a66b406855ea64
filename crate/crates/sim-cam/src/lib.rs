//! Synthetic event-camera scenes with exact ground truth.
//!
//! A pinhole camera stares at a plane 0.2 m away; bright shapes sweep closed
//! loops on that plane at programmed speeds. Pixels emit events whenever
//! their log intensity changes by a contrast threshold between consecutive
//! sample ticks, which for the binary scenes here means the silhouette
//! boundary as it advances. Every sequence is reproducible from its
//! manifest entry alone.

mod bins;
mod camera;
mod dataset;
mod error;
mod gt;
mod sequence;
mod shapes;
mod trajectory;

pub use bins::SpeedBinTable;
pub use camera::CameraModel;
pub use dataset::{
    enumerate_sequences, read_manifest, resolve_path, write_dataset, write_manifest,
    DatasetConfig, DatasetManifest, ManifestEntry, Split,
};
pub use error::SimError;
pub use gt::{nearest_row, read_gt_csv, write_gt_csv, GtRow};
pub use sequence::{
    generate_sequence, inject_noise, merge_streams, Sequence, SequenceDef, BG_INTENSITY,
    FG_INTENSITY,
};
pub use shapes::ShapeKind;
pub use trajectory::TrajectoryKind;
