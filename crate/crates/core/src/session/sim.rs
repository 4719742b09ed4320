//! Segment-based viewport-adaptive delivery and per-session quality.

use std::borrow::Cow;
use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::SessionTrace;
use crate::error::{Error, Result};
use crate::geometry::{FieldOfView, Resolution};
use crate::grade::{binary_grade_map, variant_layout_26, GradeMap, HqFootprint, VariantLayout};
use crate::mask::{nearest_mask, project_viewport_with, MaskBank, ProjectionOptions, ViewportMask};
use crate::pooling::{
    frame_quality, FrameQuality, Normalization, QualityTimeline, DEFAULT_THRESHOLD,
};

/// Where per-frame masks come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    /// Project the viewport of every frame.
    #[default]
    Vaqm,
    /// Use the nearest mask of a `rows × cols` bank.
    Avaqm { rows: usize, cols: usize },
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Method::Vaqm => f.write_str("vaqm"),
            Method::Avaqm { rows, cols } => write!(f, "avaqm-{rows}x{cols}"),
        }
    }
}

/// Everything that shapes one simulated session.
#[derive(Debug, Clone, PartialEq)]
pub struct SessionConfig {
    /// Segment duration in milliseconds.
    pub segment_ms: f64,
    pub fov: FieldOfView,
    pub resolution: Resolution,
    pub layout: VariantLayout,
    pub footprint: HqFootprint,
    pub method: Method,
    pub t_q: f64,
    pub normalization: Normalization,
    pub projection: ProjectionOptions,
}

impl SessionConfig {
    /// 2000 ms segments over the 26-variant layout, default FoV and footprint.
    pub fn new(resolution: Resolution) -> Result<Self> {
        Ok(Self {
            segment_ms: 2000.0,
            fov: FieldOfView::default(),
            resolution,
            layout: variant_layout_26(resolution)?,
            footprint: HqFootprint::default(),
            method: Method::Vaqm,
            t_q: DEFAULT_THRESHOLD,
            normalization: Normalization::MaskArea,
            projection: ProjectionOptions::default(),
        })
    }

    pub fn with_segment_ms(mut self, segment_ms: f64) -> Self {
        self.segment_ms = segment_ms;
        self
    }

    /// Frames per segment at `fps`; the segment must span a whole number of frames.
    pub fn segment_frames(&self, fps: f64) -> Result<usize> {
        let frames = self.segment_ms * fps / 1000.0;
        let rounded = frames.round();
        if !frames.is_finite() || rounded < 1.0 || (frames - rounded).abs() > 1e-9 * rounded {
            return Err(Error::invalid(format!(
                "segment length {} ms is not a positive multiple of the frame period at {fps} fps",
                self.segment_ms
            )));
        }
        Ok(rounded as usize)
    }

    fn validate(&self, trace: &SessionTrace) -> Result<usize> {
        if self.layout.grid().resolution() != self.resolution {
            return Err(Error::ResolutionMismatch {
                expected: self.resolution,
                found: self.layout.grid().resolution(),
            });
        }
        if !(0.0..=1.0).contains(&self.t_q) {
            return Err(Error::invalid(format!(
                "threshold {} outside [0, 1]",
                self.t_q
            )));
        }
        self.segment_frames(trace.fps())
    }

    /// Binary grade map of every variant.
    pub fn variant_grades(&self) -> Result<Vec<GradeMap>> {
        (0..self.layout.variant_count())
            .map(|v| binary_grade_map(&self.layout, v, &self.footprint))
            .collect()
    }
}

/// Variant on screen at `frame`: the one whose area holds the point of gaze
/// at the first frame of the current segment.
pub fn active_variant(trace: &SessionTrace, config: &SessionConfig, frame: usize) -> Result<usize> {
    let seg = config.segment_frames(trace.fps())?;
    Ok(active_variant_at(trace, &config.layout, seg, frame))
}

fn active_variant_at(
    trace: &SessionTrace,
    layout: &VariantLayout,
    seg: usize,
    frame: usize,
) -> usize {
    layout.area_of_point(trace.pog(frame / seg * seg))
}

/// Masks for each frame: projected on the fly or looked up in a bank.
#[derive(Debug, Clone, Copy)]
pub enum MaskSource<'a> {
    Projection,
    Bank(&'a MaskBank),
}

impl MaskSource<'_> {
    fn check(&self, config: &SessionConfig) -> Result<()> {
        if let MaskSource::Bank(bank) = self {
            if bank.resolution() != config.resolution {
                return Err(Error::ResolutionMismatch {
                    expected: config.resolution,
                    found: bank.resolution(),
                });
            }
            if bank.fov() != config.fov {
                return Err(Error::invalid(format!(
                    "bank field of view {} differs from {}",
                    bank.fov(),
                    config.fov
                )));
            }
        }
        Ok(())
    }

    fn mask(
        &self,
        trace: &SessionTrace,
        config: &SessionConfig,
        frame: usize,
    ) -> Result<Cow<'_, ViewportMask>> {
        match self {
            MaskSource::Projection => project_viewport_with(
                trace.pog(frame),
                config.fov,
                config.resolution,
                &config.projection,
            )
            .map(Cow::Owned),
            MaskSource::Bank(bank) => Ok(Cow::Borrowed(nearest_mask(bank, trace.pog(frame)))),
        }
    }
}

fn pool<'m, M, G>(
    trace: &SessionTrace,
    config: &SessionConfig,
    mask_for: M,
    grade_for: G,
) -> Result<QualityTimeline>
where
    M: Fn(usize) -> Result<Cow<'m, ViewportMask>> + Sync,
    G: Fn(usize) -> Result<Cow<'m, GradeMap>> + Sync,
{
    let frames = (0..trace.len())
        .into_par_iter()
        .map(|i| {
            let mask = mask_for(i)?;
            let grade = grade_for(i)?;
            let fq = frame_quality(&mask, &grade, config.normalization)?;
            Ok(FrameQuality {
                frame_index: i,
                ..fq
            })
        })
        .collect::<Result<Vec<_>>>()?;
    QualityTimeline::new(frames, config.t_q, config.normalization)
}

/// Quality timeline of one session with binary variant grades.
pub fn evaluate_session(
    trace: &SessionTrace,
    config: &SessionConfig,
    masks: MaskSource<'_>,
) -> Result<QualityTimeline> {
    let seg = config.validate(trace)?;
    masks.check(config)?;
    let grades = config.variant_grades()?;
    pool(
        trace,
        config,
        |i| masks.mask(trace, config, i),
        |i| {
            Ok(Cow::Borrowed(
                &grades[active_variant_at(trace, &config.layout, seg, i)],
            ))
        },
    )
}

/// Like [`evaluate_session`] with one grade map per frame supplied by `grades`.
pub fn evaluate_session_with_grades<G>(
    trace: &SessionTrace,
    config: &SessionConfig,
    masks: MaskSource<'_>,
    grades: G,
) -> Result<QualityTimeline>
where
    G: Fn(usize) -> Result<GradeMap> + Sync,
{
    config.validate(trace)?;
    masks.check(config)?;
    pool(
        trace,
        config,
        |i| masks.mask(trace, config, i),
        |i| grades(i).map(Cow::Owned),
    )
}

/// Projected mask of every frame of `trace`.
pub fn project_trace(trace: &SessionTrace, config: &SessionConfig) -> Result<Vec<ViewportMask>> {
    trace
        .samples()
        .par_iter()
        .map(|&p| project_viewport_with(p, config.fov, config.resolution, &config.projection))
        .collect()
}

/// Like [`evaluate_session`] with masks computed beforehand, one per frame.
pub fn evaluate_with_masks(
    trace: &SessionTrace,
    config: &SessionConfig,
    masks: &[ViewportMask],
) -> Result<QualityTimeline> {
    let seg = config.validate(trace)?;
    if masks.len() != trace.len() {
        return Err(Error::invalid(format!(
            "{} masks for a {}-frame trace",
            masks.len(),
            trace.len()
        )));
    }
    let grades = config.variant_grades()?;
    pool(
        trace,
        config,
        |i| Ok(Cow::Borrowed(&masks[i])),
        |i| {
            Ok(Cow::Borrowed(
                &grades[active_variant_at(trace, &config.layout, seg, i)],
            ))
        },
    )
}

/// Error of bank masks against per-frame projection for one grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApproximationReport {
    pub grid_rows: usize,
    pub grid_cols: usize,
    /// Mean of `|q' - q| / q` over frames with `q > 0`, in percent.
    pub mean_relative_error: f64,
    /// Relative error of every frame in percent, trace after trace; `None`
    /// where the projected quality is zero.
    pub relative_errors: Vec<Option<f64>>,
    pub excluded_frames: usize,
}

/// Builds one bank per grid and runs [`approximation_error_study_with_banks`].
pub fn approximation_error_study(
    traces: &[SessionTrace],
    config: &SessionConfig,
    grids: &[(usize, usize)],
) -> Result<Vec<ApproximationReport>> {
    let banks = grids
        .iter()
        .map(|&(r, c)| MaskBank::build(r, c, config.fov, config.resolution, config.projection))
        .collect::<Result<Vec<_>>>()?;
    approximation_error_study_with_banks(traces, config, &banks)
}

/// Compares, frame by frame, the quality from the nearest bank mask with the
/// quality from the projected mask under the same variant grades.
pub fn approximation_error_study_with_banks(
    traces: &[SessionTrace],
    config: &SessionConfig,
    banks: &[MaskBank],
) -> Result<Vec<ApproximationReport>> {
    if traces.is_empty() {
        return Err(Error::invalid(
            "approximation study needs at least one trace",
        ));
    }
    for bank in banks {
        MaskSource::Bank(bank).check(config)?;
    }
    let grades = config.variant_grades()?;
    let mut errors: Vec<Vec<Option<f64>>> = vec![Vec::new(); banks.len()];
    for trace in traces {
        let seg = config.validate(trace)?;
        let per_frame = (0..trace.len())
            .into_par_iter()
            .map(|i| {
                let pog = trace.pog(i);
                let grade = &grades[active_variant_at(trace, &config.layout, seg, i)];
                let exact =
                    project_viewport_with(pog, config.fov, config.resolution, &config.projection)?;
                let q = frame_quality(&exact, grade, config.normalization)?.q_frame;
                banks
                    .iter()
                    .map(|bank| {
                        let q_approx =
                            frame_quality(nearest_mask(bank, pog), grade, config.normalization)?
                                .q_frame;
                        Ok((q > 0.0).then(|| 100.0 * (q_approx - q).abs() / q))
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        for frame in per_frame {
            for (k, e) in frame.into_iter().enumerate() {
                errors[k].push(e);
            }
        }
    }
    Ok(banks
        .iter()
        .zip(errors)
        .map(|(bank, relative_errors)| {
            let kept: Vec<f64> = relative_errors.iter().flatten().copied().collect();
            let (grid_rows, grid_cols) = bank.grid();
            ApproximationReport {
                grid_rows,
                grid_cols,
                mean_relative_error: if kept.is_empty() {
                    0.0
                } else {
                    kept.iter().sum::<f64>() / kept.len() as f64
                },
                excluded_frames: relative_errors.len() - kept.len(),
                relative_errors,
            }
        })
        .collect())
}
