//! Head-movement traces replayed through segment-based viewport-adaptive
//! streaming.
//!
//! Every segment is delivered as the variant whose high-quality area holds
//! the point of gaze at the segment's first frame. There is no download
//! latency and no stalling, so the only lag between gaze and quality is the
//! remainder of the segment being played.

mod batch;
mod sim;
mod synth;
mod trace;

pub use batch::{
    load_trace, parse_footprint, segment_table, write_error_table, write_segment_table,
    BatchManifest, BatchOutcome, BatchSession, ConfigEcho, SegmentRow, SessionReport,
    SessionResult, SyntheticSet, TraceFormat,
};
pub use sim::{
    active_variant, approximation_error_study, approximation_error_study_with_banks,
    evaluate_session, evaluate_session_with_grades, evaluate_with_masks, project_trace,
    ApproximationReport, MaskSource, Method, SessionConfig,
};
pub use synth::RandomWalk;
pub use trace::{
    parse_quaternion_trace, parse_trace, quaternion_to_pog, AxisConvention, SessionTrace,
    QUATERNION_TOLERANCE,
};
