//! Projected-viewport masks on the equirectangular grid.
//!
//! A [`ViewportMask`] stores its support as sorted vertical runs, one or more
//! per column, and its weights either implicitly (`sin(phi)` of the row) or
//! explicitly per covered pixel. Everything outside the support weighs zero.

mod bank;
mod boundary;
mod exact;
mod export;
mod raster;

pub use bank::{build_mask_bank, nearest_mask, MaskBank, BANK_FORMAT_VERSION};
pub use boundary::{base_viewport_boundary, rotated_boundary, BoundarySampleSet};
pub use exact::{exact_mask, exact_mask_with, exact_membership, ViewportFrame};
pub use export::{read_mask, write_mask, write_pgm, write_png};
pub use raster::{
    project_viewport, project_viewport_with, ProjectionOptions, DEFAULT_SAMPLES_PER_SIDE,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{angle_between, pixel_to_spherical, FieldOfView, Resolution, SphericalPoint};

/// Extra weighting by distance to the point of gaze, multiplied onto `sin(phi)`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum CenterWeighting {
    /// `f ≡ 1`.
    #[default]
    None,
    /// `f(d) = exp(-d² / 2σ²)`, `d` and `sigma_deg` in degrees.
    Gaussian { sigma_deg: f64 },
}

impl CenterWeighting {
    fn factor(&self, distance_deg: f64) -> f64 {
        match *self {
            CenterWeighting::None => 1.0,
            CenterWeighting::Gaussian { sigma_deg } => {
                (-(distance_deg * distance_deg) / (2.0 * sigma_deg * sigma_deg)).exp()
            }
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            CenterWeighting::Gaussian { sigma_deg }
                if !(sigma_deg > 0.0 && sigma_deg.is_finite()) =>
            {
                Err(Error::invalid(format!(
                    "center sigma {sigma_deg} must be positive"
                )))
            }
            _ => Ok(()),
        }
    }
}

/// Rows `[start, end)` of column `col`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ColumnSpan {
    pub col: u32,
    pub start: u32,
    pub end: u32,
}

impl ColumnSpan {
    pub fn len(&self) -> usize {
        (self.end - self.start) as usize
    }

    pub fn is_empty(&self) -> bool {
        self.end == self.start
    }
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Weights {
    /// `sin(phi)` of each row.
    Latitude,
    /// One weight per covered pixel, in span order.
    Explicit(Vec<f32>),
}

/// Weighted raster mask of the viewport projected on one frame.
#[derive(Debug, Clone, PartialEq)]
pub struct ViewportMask {
    resolution: Resolution,
    pog: SphericalPoint,
    fov: Option<FieldOfView>,
    spans: Vec<ColumnSpan>,
    weights: Weights,
    area: f64,
}

impl ViewportMask {
    /// Mask with latitude weights over `spans`. Spans are sorted and merged.
    pub(crate) fn from_spans(
        resolution: Resolution,
        pog: SphericalPoint,
        fov: Option<FieldOfView>,
        spans: Vec<ColumnSpan>,
        center: CenterWeighting,
    ) -> Self {
        let spans = normalize_spans(spans);
        let mut mask = Self {
            resolution,
            pog,
            fov,
            spans,
            weights: Weights::Latitude,
            area: 0.0,
        };
        if center != CenterWeighting::None {
            let row_w = resolution.row_weights();
            let pog_v = pog.to_cartesian();
            let mut w = Vec::with_capacity(mask.pixel_count());
            for s in &mask.spans {
                for row in s.start..s.end {
                    let p = pixel_to_spherical(s.col as usize, row as usize, resolution)
                        .expect("span inside frame");
                    let d = angle_between(&p.to_cartesian(), &pog_v);
                    w.push((row_w[row as usize] * center.factor(d)) as f32);
                }
            }
            mask.weights = Weights::Explicit(w);
        }
        mask.area = mask.compute_area();
        mask
    }

    /// Mask from a dense row-major weight raster; zero entries are outside.
    pub fn from_dense(
        resolution: Resolution,
        pog: SphericalPoint,
        weights: &[f32],
    ) -> Result<Self> {
        if weights.len() != resolution.pixel_count() {
            return Err(Error::invalid(format!(
                "{} weights for a {resolution} frame",
                weights.len()
            )));
        }
        if let Some(w) = weights.iter().find(|w| !(0.0..=1.0).contains(*w)) {
            return Err(Error::invalid(format!("mask weight {w} outside [0, 1]")));
        }
        let (n_h, n_v) = (resolution.n_h(), resolution.n_v());
        let mut spans = Vec::new();
        let mut explicit = Vec::new();
        for col in 0..n_h {
            let mut row = 0;
            while row < n_v {
                if weights[row * n_h + col] > 0.0 {
                    let start = row;
                    while row < n_v && weights[row * n_h + col] > 0.0 {
                        explicit.push(weights[row * n_h + col]);
                        row += 1;
                    }
                    spans.push(ColumnSpan {
                        col: col as u32,
                        start: start as u32,
                        end: row as u32,
                    });
                } else {
                    row += 1;
                }
            }
        }
        let mut mask = Self {
            resolution,
            pog,
            fov: None,
            spans,
            weights: Weights::Explicit(explicit),
            area: 0.0,
        };
        mask.area = mask.compute_area();
        Ok(mask)
    }

    pub(crate) fn from_parts(
        resolution: Resolution,
        pog: SphericalPoint,
        fov: Option<FieldOfView>,
        spans: Vec<ColumnSpan>,
        weights: Weights,
        area: f64,
    ) -> Self {
        Self {
            resolution,
            pog,
            fov,
            spans,
            weights,
            area,
        }
    }

    fn compute_area(&self) -> f64 {
        let mut total = 0.0;
        self.for_each_run(|_, _, w| total += w.sum());
        total
    }

    pub fn resolution(&self) -> Resolution {
        self.resolution
    }

    pub fn pog(&self) -> SphericalPoint {
        self.pog
    }

    /// Field of view the mask was projected with; `None` for masks built from raw weights.
    pub fn fov(&self) -> Option<FieldOfView> {
        self.fov
    }

    /// Equivalent-pixel area: the sum of all weights.
    pub fn area(&self) -> f64 {
        self.area
    }

    pub fn spans(&self) -> &[ColumnSpan] {
        &self.spans
    }

    pub(crate) fn weights_repr(&self) -> &Weights {
        &self.weights
    }

    /// Number of pixels with non-zero weight.
    pub fn pixel_count(&self) -> usize {
        self.spans.iter().map(ColumnSpan::len).sum()
    }

    pub fn contains(&self, col: usize, row: usize) -> bool {
        self.find_span(col, row).is_some()
    }

    fn find_span(&self, col: usize, row: usize) -> Option<usize> {
        let (col, row) = (col as u32, row as u32);
        let idx = self.spans.partition_point(|s| (s.col, s.end) <= (col, row));
        let s = self.spans.get(idx)?;
        (s.col == col && s.start <= row).then_some(idx)
    }

    /// Position of `(col, row)` in the flattened span order.
    fn locate(&self, col: usize, row: usize) -> Option<usize> {
        let idx = self.find_span(col, row)?;
        let before: usize = self.spans[..idx].iter().map(ColumnSpan::len).sum();
        Some(before + row - self.spans[idx].start as usize)
    }

    pub fn weight(&self, col: usize, row: usize) -> f64 {
        match &self.weights {
            Weights::Latitude => {
                if self.contains(col, row) {
                    self.resolution.row_phi(row).to_radians().sin()
                } else {
                    0.0
                }
            }
            Weights::Explicit(w) => self.locate(col, row).map_or(0.0, |i| w[i] as f64),
        }
    }

    /// Visits every span with its weights.
    pub(crate) fn for_each_run(&self, mut f: impl FnMut(&ColumnSpan, usize, RunWeights<'_>)) {
        let mut offset = 0;
        match &self.weights {
            Weights::Latitude => {
                let rows = self.resolution.row_weights();
                for s in &self.spans {
                    f(
                        s,
                        offset,
                        RunWeights::Latitude(&rows[s.start as usize..s.end as usize]),
                    );
                    offset += s.len();
                }
            }
            Weights::Explicit(w) => {
                for s in &self.spans {
                    f(
                        s,
                        offset,
                        RunWeights::Explicit(&w[offset..offset + s.len()]),
                    );
                    offset += s.len();
                }
            }
        }
    }

    /// Dense row-major weights.
    pub fn to_dense(&self) -> Vec<f32> {
        let n_h = self.resolution.n_h();
        let mut out = vec![0.0f32; self.resolution.pixel_count()];
        self.for_each_run(|s, _, w| {
            for (i, row) in (s.start..s.end).enumerate() {
                out[row as usize * n_h + s.col as usize] = w.get(i) as f32;
            }
        });
        out
    }

    /// Intersection over union of the two supports.
    pub fn jaccard(&self, other: &ViewportMask) -> f64 {
        let n_v = self.resolution.n_v() as u64;
        let lin = |s: &ColumnSpan| {
            (
                s.col as u64 * n_v + s.start as u64,
                s.col as u64 * n_v + s.end as u64,
            )
        };
        let (mut i, mut j) = (0, 0);
        let mut inter = 0u64;
        while i < self.spans.len() && j < other.spans.len() {
            let (a0, a1) = lin(&self.spans[i]);
            let (b0, b1) = lin(&other.spans[j]);
            let lo = a0.max(b0);
            let hi = a1.min(b1);
            if hi > lo {
                inter += hi - lo;
            }
            if a1 <= b1 {
                i += 1;
            } else {
                j += 1;
            }
        }
        let union = (self.pixel_count() + other.pixel_count()) as u64 - inter;
        if union == 0 {
            1.0
        } else {
            inter as f64 / union as f64
        }
    }

    /// Connected components of the support under 4-connectivity. With `wrap`,
    /// the first and last columns are adjacent.
    pub fn components(&self, wrap: bool) -> usize {
        let n = self.spans.len();
        if n == 0 {
            return 0;
        }
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(p: &mut [usize], mut x: usize) -> usize {
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        let n_h = self.resolution.n_h() as u32;
        let col_start = |c: u32| self.spans.partition_point(|s| s.col < c);
        let mut link = |a_range: std::ops::Range<usize>, b_range: std::ops::Range<usize>| {
            for a in a_range.clone() {
                for b in b_range.clone() {
                    let (sa, sb) = (&self.spans[a], &self.spans[b]);
                    if sa.start < sb.end && sb.start < sa.end {
                        let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
                        parent[ra] = rb;
                    }
                }
            }
        };
        for c in 0..n_h {
            let next = if c + 1 == n_h {
                if !wrap || n_h < 2 {
                    continue;
                }
                0
            } else {
                c + 1
            };
            link(
                col_start(c)..col_start(c + 1),
                col_start(next)..col_start(next + 1),
            );
        }
        (0..n).filter(|&i| find(&mut parent, i) == i).count()
    }

    /// The same mask moved right by `shift` columns, modulo the frame width.
    pub fn shifted_columns(&self, shift: i64) -> ViewportMask {
        let n_h = self.resolution.n_h() as i64;
        let mut pairs: Vec<(ColumnSpan, Vec<f32>)> = Vec::with_capacity(self.spans.len());
        self.for_each_run(|s, _, w| {
            let col = (s.col as i64 + shift).rem_euclid(n_h) as u32;
            let ws = match w {
                RunWeights::Explicit(v) => v.to_vec(),
                RunWeights::Latitude(_) => Vec::new(),
            };
            pairs.push((ColumnSpan { col, ..*s }, ws));
        });
        pairs.sort_by_key(|(s, _)| (s.col, s.start));
        let weights = match self.weights {
            Weights::Latitude => Weights::Latitude,
            Weights::Explicit(_) => {
                Weights::Explicit(pairs.iter().flat_map(|(_, w)| w.iter().copied()).collect())
            }
        };
        let theta = self.pog.theta() + shift as f64 * 360.0 / n_h as f64;
        ViewportMask {
            resolution: self.resolution,
            pog: SphericalPoint::new(theta, self.pog.phi()),
            fov: self.fov,
            spans: pairs.into_iter().map(|(s, _)| s).collect(),
            weights,
            area: self.area,
        }
    }
}

/// Weights of one span.
#[derive(Debug, Clone, Copy)]
pub(crate) enum RunWeights<'a> {
    Latitude(&'a [f64]),
    Explicit(&'a [f32]),
}

impl RunWeights<'_> {
    pub(crate) fn get(&self, i: usize) -> f64 {
        match self {
            RunWeights::Latitude(w) => w[i],
            RunWeights::Explicit(w) => w[i] as f64,
        }
    }

    pub(crate) fn sum(&self) -> f64 {
        match self {
            RunWeights::Latitude(w) => w.iter().sum(),
            RunWeights::Explicit(w) => w.iter().map(|&x| x as f64).sum(),
        }
    }
}

/// Sorts spans and merges overlapping or touching runs within a column.
fn normalize_spans(mut spans: Vec<ColumnSpan>) -> Vec<ColumnSpan> {
    spans.retain(|s| s.end > s.start);
    spans.sort_unstable();
    let mut out: Vec<ColumnSpan> = Vec::with_capacity(spans.len());
    for s in spans {
        match out.last_mut() {
            Some(last) if last.col == s.col && s.start <= last.end => {
                last.end = last.end.max(s.end);
            }
            _ => out.push(s),
        }
    }
    out
}
