//! Batch runs over many sessions and the tables they produce.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    approximation_error_study_with_banks, evaluate_session, evaluate_with_masks,
    parse_quaternion_trace, parse_trace, project_trace, ApproximationReport, AxisConvention,
    MaskSource, Method, RandomWalk, SessionConfig, SessionTrace,
};
use crate::error::{Error, Result};
use crate::geometry::{FieldOfView, Resolution};
use crate::grade::HqFootprint;
use crate::mask::{MaskBank, ProjectionOptions};
use crate::pooling::{Normalization, WindowSummary, DEFAULT_THRESHOLD};

/// The configuration of a session as written next to its results.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigEcho {
    pub segment_ms: f64,
    pub fov: FieldOfView,
    pub resolution: Resolution,
    pub tile_rows: usize,
    pub tile_cols: usize,
    pub variants: usize,
    pub footprint: String,
    pub method: Method,
    pub t_q: f64,
    pub normalization: Normalization,
    pub samples_per_side: usize,
}

impl SessionConfig {
    pub fn echo(&self) -> ConfigEcho {
        ConfigEcho {
            segment_ms: self.segment_ms,
            fov: self.fov,
            resolution: self.resolution,
            tile_rows: self.layout.grid().rows(),
            tile_cols: self.layout.grid().cols(),
            variants: self.layout.variant_count(),
            footprint: self.footprint.name().to_owned(),
            method: self.method,
            t_q: self.t_q,
            normalization: self.normalization,
            samples_per_side: self.projection.samples_per_side,
        }
    }
}

/// Summary of one evaluated session.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionReport {
    pub trace: String,
    pub fps: f64,
    pub frames: usize,
    pub config: ConfigEcho,
    #[serde(flatten)]
    pub summary: WindowSummary,
    /// Per-frame series file, relative to the report.
    pub frames_csv: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TraceFormat {
    #[default]
    Canonical,
    Quaternion,
}

/// One recorded trace of a batch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchSession {
    /// Path relative to the manifest.
    pub trace: PathBuf,
    pub content: String,
    #[serde(default)]
    pub user: Option<String>,
    #[serde(default)]
    pub format: TraceFormat,
    #[serde(default)]
    pub axes: AxisConvention,
    #[serde(default)]
    pub fps: Option<f64>,
}

/// `count` random walks seeded `seed, seed + 1, ...`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSet {
    pub count: usize,
    #[serde(default = "synthetic_content")]
    pub content: String,
    #[serde(default)]
    pub walk: RandomWalk,
}

fn synthetic_content() -> String {
    "synthetic".into()
}

fn default_segments() -> Vec<f64> {
    vec![500.0, 2000.0, 6000.0]
}

fn default_fps() -> f64 {
    30.0
}

fn default_footprint() -> String {
    "area+neighbors".into()
}

fn default_resolution() -> String {
    "3840x1920".into()
}

fn default_t_q() -> f64 {
    DEFAULT_THRESHOLD
}

/// Sessions, segment lengths and bank grids of one experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BatchManifest {
    #[serde(default = "default_resolution")]
    pub resolution: String,
    #[serde(default)]
    pub fov: FieldOfView,
    #[serde(default)]
    pub projection: ProjectionOptions,
    /// `area-only`, `area+neighbors`, or a JSON file relative to the manifest.
    #[serde(default = "default_footprint")]
    pub footprint: String,
    #[serde(default)]
    pub method: Method,
    #[serde(default)]
    pub normalization: Normalization,
    #[serde(default = "default_t_q")]
    pub t_q: f64,
    #[serde(default = "default_fps")]
    pub fps: f64,
    #[serde(default = "default_segments")]
    pub segment_ms: Vec<f64>,
    /// Mask-bank grids `[rows, cols]` for the approximation study.
    #[serde(default)]
    pub grids: Vec<(usize, usize)>,
    #[serde(default)]
    pub sessions: Vec<BatchSession>,
    #[serde(default)]
    pub synthetic: Option<SyntheticSet>,
}

/// Parses `area-only`, `area+neighbors`, or reads a footprint JSON file.
pub fn parse_footprint(spec: &str, base: &Path) -> Result<HqFootprint> {
    match spec {
        "area-only" => Ok(HqFootprint::AreaOnly),
        "area+neighbors" => Ok(HqFootprint::AreaPlusNeighbors),
        path => HqFootprint::from_json(BufReader::new(File::open(base.join(path))?)),
    }
}

/// Reads a trace file in either supported format.
pub fn load_trace(
    path: &Path,
    format: TraceFormat,
    axes: AxisConvention,
    fps: f64,
) -> Result<SessionTrace> {
    let file = BufReader::new(File::open(path)?);
    match format {
        TraceFormat::Canonical => parse_trace(file, fps),
        TraceFormat::Quaternion => parse_quaternion_trace(file, fps, axes),
    }
}

/// Window result of one session at one segment length.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionResult {
    pub content: String,
    pub user: String,
    pub segment_ms: f64,
    pub q_window: f64,
    pub f_window: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BatchOutcome {
    pub sessions: Vec<SessionResult>,
    pub approximation: Vec<ApproximationReport>,
}

struct NamedTrace {
    content: String,
    user: String,
    trace: SessionTrace,
}

impl BatchManifest {
    pub fn from_path(path: &Path) -> Result<Self> {
        Ok(serde_json::from_reader(BufReader::new(File::open(path)?))?)
    }

    pub fn is_empty(&self) -> bool {
        self.sessions.is_empty() && !matches!(&self.synthetic, Some(s) if s.count > 0)
    }

    /// Session configuration shared by the batch, at the first segment length.
    pub fn config(&self, base: &Path) -> Result<SessionConfig> {
        let resolution: Resolution = self.resolution.parse()?;
        let mut c = SessionConfig::new(resolution)?;
        c.fov = self.fov;
        c.projection = self.projection;
        c.footprint = parse_footprint(&self.footprint, base)?;
        c.method = self.method;
        c.normalization = self.normalization;
        c.t_q = self.t_q;
        if let Some(&first) = self.segment_ms.first() {
            c.segment_ms = first;
        }
        Ok(c)
    }

    fn traces(&self, base: &Path) -> Result<Vec<NamedTrace>> {
        let mut out = Vec::new();
        for s in &self.sessions {
            let trace = load_trace(
                &base.join(&s.trace),
                s.format,
                s.axes,
                s.fps.unwrap_or(self.fps),
            )?;
            let user = s.user.clone().unwrap_or_else(|| {
                s.trace
                    .file_stem()
                    .map_or_else(String::new, |n| n.to_string_lossy().into_owned())
            });
            out.push(NamedTrace {
                content: s.content.clone(),
                user,
                trace,
            });
        }
        if let Some(set) = &self.synthetic {
            for k in 0..set.count {
                let seed = set.walk.seed + k as u64;
                out.push(NamedTrace {
                    content: set.content.clone(),
                    user: format!("seed-{seed}"),
                    trace: set.walk.with_seed(seed).generate()?,
                });
            }
        }
        Ok(out)
    }

    /// Evaluates every session at every segment length, then the approximation
    /// study over all traces when grids are listed. `banks` supplies the bank
    /// for a `(rows, cols)` grid, built in memory or taken from a cache.
    pub fn run(
        &self,
        base: &Path,
        banks: impl Fn(usize, usize, &SessionConfig) -> Result<MaskBank>,
    ) -> Result<BatchOutcome> {
        if self.is_empty() {
            return Err(Error::invalid("batch manifest lists no sessions"));
        }
        if self.segment_ms.is_empty() {
            return Err(Error::invalid("batch manifest lists no segment lengths"));
        }
        let config = self.config(base)?;
        let traces = self.traces(base)?;
        let session_bank = match config.method {
            Method::Vaqm => None,
            Method::Avaqm { rows, cols } => Some(banks(rows, cols, &config)?),
        };
        let per_trace = traces
            .par_iter()
            .map(|t| {
                let masks = match &session_bank {
                    None => Some(project_trace(&t.trace, &config)?),
                    Some(_) => None,
                };
                self.segment_ms
                    .iter()
                    .map(|&ms| {
                        let c = config.clone().with_segment_ms(ms);
                        let tl = match (&masks, &session_bank) {
                            (Some(m), _) => evaluate_with_masks(&t.trace, &c, m)?,
                            (None, Some(b)) => evaluate_session(&t.trace, &c, MaskSource::Bank(b))?,
                            (None, None) => {
                                unreachable!("masks are projected when there is no bank")
                            }
                        };
                        Ok(SessionResult {
                            content: t.content.clone(),
                            user: t.user.clone(),
                            segment_ms: ms,
                            q_window: tl.q_window(),
                            f_window: tl.f_window(),
                        })
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        let approximation = if self.grids.is_empty() {
            Vec::new()
        } else {
            let banks = self
                .grids
                .iter()
                .map(|&(r, c)| banks(r, c, &config))
                .collect::<Result<Vec<_>>>()?;
            let plain: Vec<SessionTrace> = traces.into_iter().map(|t| t.trace).collect();
            approximation_error_study_with_banks(&plain, &config, &banks)?
        };
        Ok(BatchOutcome {
            sessions: per_trace.into_iter().flatten().collect(),
            approximation,
        })
    }
}

/// Mean window quality per content and segment length.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentRow {
    pub content: String,
    pub segment_ms: f64,
    pub sessions: usize,
    pub q_window: f64,
    pub f_window: f64,
}

/// Groups session results by content (sorted) and segment length (ascending).
pub fn segment_table(results: &[SessionResult]) -> Vec<SegmentRow> {
    let mut groups: BTreeMap<(String, u64), (f64, Vec<&SessionResult>)> = BTreeMap::new();
    for r in results {
        groups
            .entry((r.content.clone(), r.segment_ms.to_bits()))
            .or_insert_with(|| (r.segment_ms, Vec::new()))
            .1
            .push(r);
    }
    let mut rows: Vec<SegmentRow> = groups
        .into_iter()
        .map(|((content, _), (segment_ms, rs))| {
            let n = rs.len() as f64;
            SegmentRow {
                content,
                segment_ms,
                sessions: rs.len(),
                q_window: rs.iter().map(|r| r.q_window).sum::<f64>() / n,
                f_window: rs.iter().map(|r| r.f_window).sum::<f64>() / n,
            }
        })
        .collect();
    rows.sort_by(|a, b| {
        a.content
            .cmp(&b.content)
            .then(a.segment_ms.total_cmp(&b.segment_ms))
    });
    rows
}

/// `content,segment_ms,sessions,q_window,f_window`.
pub fn write_segment_table<W: Write>(rows: &[SegmentRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// `grid,mean_relative_error_pct,frames,excluded_frames`.
pub fn write_error_table<W: Write>(reports: &[ApproximationReport], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "grid",
        "mean_relative_error_pct",
        "frames",
        "excluded_frames",
    ])?;
    for r in reports {
        w.write_record([
            format!("{}x{}", r.grid_rows, r.grid_cols),
            format!("{:.4}", r.mean_relative_error),
            r.relative_errors.len().to_string(),
            r.excluded_frames.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
