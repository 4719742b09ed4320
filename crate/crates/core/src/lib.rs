//! Viewport-aware quality assessment for 360° video in equirectangular projection.
//!
//! The quality a user perceives on one frame is the `sin(phi)`-weighted mean
//! of a grade raster over the projected viewport around their point of gaze.
//! [`mask`] builds the projected viewport (exactly or from a precomputed
//! bank), [`grade`] builds grade rasters, [`pooling`] combines them per frame
//! and over time, and [`session`] replays head-movement traces through a
//! segment-based viewport-adaptive streaming model.

pub mod error;
pub mod geometry;
pub mod grade;
pub mod mask;
pub mod pooling;
pub mod session;

pub use error::{Error, Result};
pub use geometry::{CartesianVector, FieldOfView, Resolution, SphericalPoint};
pub use grade::{GradeMap, TileGrid, VariantLayout};
pub use mask::{MaskBank, ViewportMask};
pub use pooling::{FrameQuality, Normalization, QualityTimeline};
pub use session::{SessionConfig, SessionTrace};
