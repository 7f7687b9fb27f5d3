//! Linking of time-symmetric local cell tracks into global identity tracks.
//!
//! Each detection carries a local track: predicted masks of the same cell on
//! the `TR` frames before and after it. Local tracks whose windows overlap are
//! compared frame by frame, and hierarchical optimal assignment over growing
//! frame distances joins them into global tracks. Skipped frames are filled by
//! translating the last known mask.
//!
//! The crate also provides segmentation/tracking F-scores, a synthetic
//! benchmark generator, a ground-truth oracle that emulates a local tracker,
//! and the file formats used by the `symtrack` command-line tool.

pub mod error;
pub mod eval;
pub mod geometry;
pub mod interpolate;
pub mod io;
pub mod linker;
pub mod oracle;
pub mod pipeline;
pub mod sim;
pub mod track;

pub use error::{Error, Result};
pub use geometry::{BoundingBox, Centroid, Mask, Run};
pub use linker::{link_recording, LinkerConfig, Metric};
pub use track::{Detection, GlobalTrack, LocalTrack, Provenance, Recording, TrackEntry};
