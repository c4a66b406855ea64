//! Event data model, time-window binning, and the binary event file format
//! shared by the rest of the pipeline.
//!
//! Events follow the address-event representation: a `(x, y, t, polarity)`
//! tuple per intensity change. A stream is always ordered by timestamp; a
//! window of `dt` microseconds is discretized into `B` event bins, each bin a
//! pair of per-polarity count grids.

mod binning;
mod error;
mod event;
mod io;

pub use binning::{bin_events, BinnedVolume};
pub use error::EventError;
pub use event::{Event, Polarity};
pub use io::{read_events, write_events, EventFileHeader, EVENT_FILE_MAGIC, EVENT_FILE_VERSION};
