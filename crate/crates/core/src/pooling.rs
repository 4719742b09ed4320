//! Spatial pooling of mask × grade per frame, and temporal pooling over a window.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::equivalent_pixels_viewport;
use crate::grade::{GradeMap, GradeRepr, TileGrid};
use crate::mask::{ColumnSpan, RunWeights, ViewportMask};

/// Quality threshold used for `f_window` unless configured otherwise.
pub const DEFAULT_THRESHOLD: f64 = 0.8;

/// Denominator of the per-frame quality.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Normalization {
    /// Sum of the mask weights; keeps `q_frame` in `[0, 1]`.
    #[default]
    MaskArea,
    /// Closed-form equivalent pixel count of the field of view.
    Analytic,
}

impl fmt::Display for Normalization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Normalization::MaskArea => "mask-area",
            Normalization::Analytic => "analytic",
        })
    }
}

impl FromStr for Normalization {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mask-area" => Ok(Normalization::MaskArea),
            "analytic" => Ok(Normalization::Analytic),
            _ => Err(Error::invalid(format!(
                "normalization '{s}' (expected mask-area or analytic)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrameQuality {
    pub frame_index: usize,
    pub q_frame: f64,
    /// Denominator used for `q_frame`, in equivalent pixels.
    pub mask_area_used: f64,
}

fn check_resolution(mask: &ViewportMask, grade: &GradeMap) -> Result<()> {
    if mask.resolution() != grade.resolution() {
        return Err(Error::ResolutionMismatch {
            expected: mask.resolution(),
            found: grade.resolution(),
        });
    }
    Ok(())
}

fn denominator(mask: &ViewportMask, weight_sum: f64, normalization: Normalization) -> Result<f64> {
    let d = match normalization {
        Normalization::MaskArea => weight_sum,
        Normalization::Analytic => {
            let fov = mask.fov().ok_or_else(|| {
                Error::invalid("analytic normalization needs a mask with a field of view")
            })?;
            equivalent_pixels_viewport(mask.resolution(), fov)
        }
    };
    if d > 0.0 {
        Ok(d)
    } else {
        Err(Error::ZeroMaskArea)
    }
}

/// Adds `weight · value` and `weight` for every tile-row segment of one span,
/// with latitude weights taken from prefix sums.
fn tiled_latitude_run(
    s: &ColumnSpan,
    grid: &TileGrid,
    values: &[f64],
    prefix: &[f64],
    acc: &mut (f64, f64),
) {
    let (start, end) = (s.start as usize, s.end as usize);
    let (mut r, c) = grid.tile_of(s.col as usize, start);
    let mut lo = start;
    while lo < end {
        let hi = grid.row_range(r).1.min(end);
        let w = prefix[hi] - prefix[lo];
        acc.0 += values[r * grid.cols() + c] * w;
        acc.1 += w;
        lo = hi;
        r += 1;
    }
}

/// `(Σ_p m_p · v_p, Σ_p m_p)` over the mask support, accumulated in the same
/// order so that an all-ones grade gives exactly equal sums.
fn support_sums(mask: &ViewportMask, grade: &GradeMap) -> (f64, f64) {
    let n_h = mask.resolution().n_h();
    let mut acc = (0.0, 0.0);
    match grade.repr() {
        GradeRepr::Tiled { grid, values } => {
            let prefix: Vec<f64> = std::iter::once(0.0)
                .chain(
                    mask.resolution()
                        .row_weights()
                        .into_iter()
                        .scan(0.0, |sum, w| {
                            *sum += w;
                            Some(*sum)
                        }),
                )
                .collect();
            mask.for_each_run(|s, _, w| match w {
                RunWeights::Latitude(_) => tiled_latitude_run(s, grid, values, &prefix, &mut acc),
                RunWeights::Explicit(w) => {
                    for (row, &wi) in (s.start..s.end).zip(w) {
                        let (r, c) = grid.tile_of(s.col as usize, row as usize);
                        acc.0 += wi as f64 * values[r * grid.cols() + c];
                        acc.1 += wi as f64;
                    }
                }
            });
        }
        GradeRepr::Dense(g) => {
            mask.for_each_run(|s, _, w| {
                for (i, row) in (s.start..s.end).enumerate() {
                    let wi = w.get(i);
                    acc.0 += wi * g[row as usize * n_h + s.col as usize] as f64;
                    acc.1 += wi;
                }
            });
        }
    }
    acc
}

/// Spatial pooling over the mask support.
pub fn frame_quality(
    mask: &ViewportMask,
    grade: &GradeMap,
    normalization: Normalization,
) -> Result<FrameQuality> {
    check_resolution(mask, grade)?;
    let (num, area) = support_sums(mask, grade);
    let d = denominator(mask, area, normalization)?;
    Ok(FrameQuality {
        frame_index: 0,
        q_frame: num / d,
        mask_area_used: d,
    })
}

fn dense_weights(mask: &ViewportMask) -> Vec<f64> {
    let n_h = mask.resolution().n_h();
    let mut out = vec![0.0; mask.resolution().pixel_count()];
    mask.for_each_run(|s, _, w| {
        for (i, row) in (s.start..s.end).enumerate() {
            out[row as usize * n_h + s.col as usize] = w.get(i);
        }
    });
    out
}

/// Element-wise product of mask weights and grades over the whole raster, row-major.
pub fn hadamard(mask: &ViewportMask, grade: &GradeMap) -> Result<Vec<f64>> {
    check_resolution(mask, grade)?;
    Ok(dense_weights(mask)
        .into_iter()
        .zip(grade.to_dense_f64())
        .map(|(m, v)| m * v)
        .collect())
}

/// Spatial pooling as a sum over every pixel of the Hadamard product.
pub fn frame_quality_full_raster(
    mask: &ViewportMask,
    grade: &GradeMap,
    normalization: Normalization,
) -> Result<FrameQuality> {
    let q = hadamard(mask, grade)?;
    let area: f64 = dense_weights(mask).iter().sum();
    let d = denominator(mask, area, normalization)?;
    Ok(FrameQuality {
        frame_index: 0,
        q_frame: q.iter().sum::<f64>() / d,
        mask_area_used: d,
    })
}

/// Compensated (Neumaier) sum.
fn accurate_sum(values: &[f64]) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for &v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// Mean of the per-frame qualities.
pub fn window_mean(q: &[f64]) -> Result<f64> {
    if q.is_empty() {
        return Err(Error::EmptyWindow);
    }
    Ok(accurate_sum(q) / q.len() as f64)
}

/// Percentage of frames with quality strictly above `t_q`.
pub fn window_fraction(q: &[f64], t_q: f64) -> Result<f64> {
    if q.is_empty() {
        return Err(Error::EmptyWindow);
    }
    check_threshold(t_q)?;
    let above = q.iter().filter(|&&v| v > t_q).count();
    Ok(100.0 * above as f64 / q.len() as f64)
}

fn check_threshold(t_q: f64) -> Result<()> {
    if (0.0..=1.0).contains(&t_q) {
        Ok(())
    } else {
        Err(Error::invalid(format!("threshold {t_q} outside [0, 1]")))
    }
}

/// Summary written next to the per-frame series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowSummary {
    pub q_window: f64,
    pub f_window: f64,
    pub t_q: f64,
    pub n_frames: usize,
    pub normalization: Normalization,
}

/// Per-frame qualities of one window with their temporal aggregates.
#[derive(Debug, Clone, PartialEq)]
pub struct QualityTimeline {
    frames: Vec<FrameQuality>,
    q_window: f64,
    f_window: f64,
    threshold: f64,
    normalization: Normalization,
}

impl QualityTimeline {
    pub fn new(
        frames: Vec<FrameQuality>,
        threshold: f64,
        normalization: Normalization,
    ) -> Result<Self> {
        let q: Vec<f64> = frames.iter().map(|f| f.q_frame).collect();
        Ok(Self {
            q_window: window_mean(&q)?,
            f_window: window_fraction(&q, threshold)?,
            frames,
            threshold,
            normalization,
        })
    }

    pub fn frames(&self) -> &[FrameQuality] {
        &self.frames
    }

    pub fn q_values(&self) -> Vec<f64> {
        self.frames.iter().map(|f| f.q_frame).collect()
    }

    pub fn q_window(&self) -> f64 {
        self.q_window
    }

    /// Percentage in `[0, 100]`.
    pub fn f_window(&self) -> f64 {
        self.f_window
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn normalization(&self) -> Normalization {
        self.normalization
    }

    pub fn summary(&self) -> WindowSummary {
        WindowSummary {
            q_window: self.q_window,
            f_window: self.f_window,
            t_q: self.threshold,
            n_frames: self.frames.len(),
            normalization: self.normalization,
        }
    }

    /// `frame,q_frame` rows.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["frame", "q_frame"])?;
        for f in &self.frames {
            w.write_record([f.frame_index.to_string(), f.q_frame.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}
