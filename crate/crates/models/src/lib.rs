//! The two learned components: per-speed-bin spiking separators (OFS) and
//! the pose/direction regressor (OFPD), with their data loading, training
//! loops, and checkpoint formats.

mod data;
mod error;
mod init;
mod ofpd;
mod ofs;
mod train;

pub use data::{
    load_windows, load_windows_noisy, polarity_input, signed_input, WindowSample, WindowSet,
};
pub use error::ModelError;
pub use ofpd::{train_ofpd, OfpdModel, OfpdPrediction, OfpdTrainCfg};
pub use ofs::{train_ofs, OfsModel, OfsOutput, OfsTrainCfg, OFS_KERNEL};
pub use train::TrainReport;
