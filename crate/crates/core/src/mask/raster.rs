//! Piecewise-linear rasterization of the projected viewport.
//!
//! The boundary polyline is traced in continuous image coordinates modulo
//! `N_H`, every column center collects the rows where the polyline crosses it,
//! and the crossings are paired into vertical spans. A polyline that winds
//! around a pole crosses every column an odd number of times; the missing
//! crossing is the frame edge on the side of the enclosed pole.
//!
//! Chords bulge past the true boundary where it curves in image space, so the
//! ends of every span are trimmed back to pixels whose centers pass
//! [`exact_membership`].

use serde::{Deserialize, Serialize};

use super::boundary::base_viewport_boundary;
use super::exact::exact_membership;
use super::{CenterWeighting, ColumnSpan, ViewportMask};
use crate::error::Result;
use crate::geometry::{rotate_phi, CartesianVector, FieldOfView, Resolution, SphericalPoint};

pub const DEFAULT_SAMPLES_PER_SIDE: usize = 64;

/// Rows within this distance of a crossing still count as inside.
const EDGE_SLACK: f64 = 1e-9;

/// Knobs for [`project_viewport_with`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProjectionOptions {
    pub samples_per_side: usize,
    #[serde(default)]
    pub center: CenterWeighting,
}

impl Default for ProjectionOptions {
    fn default() -> Self {
        Self {
            samples_per_side: DEFAULT_SAMPLES_PER_SIDE,
            center: CenterWeighting::None,
        }
    }
}

impl ProjectionOptions {
    pub fn with_samples(samples_per_side: usize) -> Self {
        Self {
            samples_per_side,
            ..Self::default()
        }
    }
}

/// Projects the viewport around `pog` onto the frame, with `sin(phi)` weights.
pub fn project_viewport(
    pog: SphericalPoint,
    fov: FieldOfView,
    res: Resolution,
    samples_per_side: usize,
) -> Result<ViewportMask> {
    project_viewport_with(
        pog,
        fov,
        res,
        &ProjectionOptions::with_samples(samples_per_side),
    )
}

pub fn project_viewport_with(
    pog: SphericalPoint,
    fov: FieldOfView,
    res: Resolution,
    options: &ProjectionOptions,
) -> Result<ViewportMask> {
    options.center.validate()?;
    let base = base_viewport_boundary(fov, options.samples_per_side)?;
    let n_h = res.n_h() as f64;
    let n_v = res.n_v() as f64;

    // The horizontal rotation is a pure column shift; split it into whole
    // columns (applied to the finished spans) and a sub-pixel remainder.
    let shift = (pog.theta() - 180.0) / 360.0 * n_h;
    let rounded = shift.round();
    let (whole, frac) = if (shift - rounded).abs() < 1e-9 {
        (rounded, 0.0)
    } else {
        (shift.floor(), shift - shift.floor())
    };

    let ring = trace_ring(&base.ring(), pog.phi(), res, frac);
    let mut crossings = column_crossings(&ring, res.n_h());

    // odd crossing counts mean the boundary encloses a pole
    let pole_row = enclosed_pole_edge(pog, fov, n_v);

    let mut spans = Vec::new();
    let mut i = 0;
    let mut group: Vec<f64> = Vec::new();
    crossings.sort_unstable_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)));
    while i < crossings.len() {
        let col = crossings[i].0;
        group.clear();
        while i < crossings.len() && crossings[i].0 == col {
            group.push(crossings[i].1);
            i += 1;
        }
        if group.len() % 2 == 1 {
            group.push(pole_row);
            group.sort_unstable_by(f64::total_cmp);
        }
        let out_col = (col as i64 + whole as i64).rem_euclid(res.n_h() as i64) as u32;
        for pair in group.chunks_exact(2) {
            if let Some((start, end)) = rows_between(pair[0], pair[1], res.n_v()) {
                if let Some(span) = trim_span(
                    ColumnSpan {
                        col: out_col,
                        start,
                        end,
                    },
                    pog,
                    fov,
                    res,
                ) {
                    spans.push(span);
                }
            }
        }
    }

    Ok(ViewportMask::from_spans(
        res,
        pog,
        Some(fov),
        spans,
        options.center,
    ))
}

fn trim_span(
    mut span: ColumnSpan,
    pog: SphericalPoint,
    fov: FieldOfView,
    res: Resolution,
) -> Option<ColumnSpan> {
    let theta = res.column_theta(span.col as usize);
    let inside = |row: u32| {
        exact_membership(
            SphericalPoint::new(theta, res.row_phi(row as usize)).to_cartesian(),
            pog,
            fov,
        )
    };
    while span.start < span.end && !inside(span.start) {
        span.start += 1;
    }
    while span.start < span.end && !inside(span.end - 1) {
        span.end -= 1;
    }
    (span.start < span.end).then_some(span)
}

/// Image-coordinate ring after the vertical rotation, unwrapped so consecutive
/// points differ by at most half a frame horizontally.
fn trace_ring(
    base_ring: &[SphericalPoint],
    pog_phi: f64,
    res: Resolution,
    frac: f64,
) -> Vec<(f64, f64)> {
    let n_h = res.n_h() as f64;
    let n_v = res.n_v() as f64;

    // None marks a sample sitting on a pole, where longitude is undefined
    let rotated: Vec<Option<(f64, f64)>> = base_ring
        .iter()
        .map(|p| {
            let v = rotate_phi(p.to_cartesian(), pog_phi);
            let rho = v.x.hypot(v.y);
            if rho < 1e-12 {
                None
            } else {
                let theta = v.x.atan2(v.y).to_degrees().rem_euclid(360.0);
                let phi = rho.atan2(v.z).to_degrees();
                Some((theta / 360.0 * n_h + frac, phi / 180.0 * n_v))
            }
        })
        .collect();

    let len = rotated.len();
    let mut pts = Vec::with_capacity(len + 2);
    for (k, p) in rotated.iter().enumerate() {
        match p {
            Some(uv) => pts.push(*uv),
            None => {
                // a boundary through a pole runs along the frame edge from the
                // incoming longitude to the outgoing one
                let v_edge = if base_ring_z(&base_ring[k], pog_phi) > 0.0 {
                    0.0
                } else {
                    n_v
                };
                let prev = (1..len).find_map(|d| rotated[(k + len - d) % len]);
                let next = (1..len).find_map(|d| rotated[(k + d) % len]);
                if let (Some(prev), Some(next)) = (prev, next) {
                    pts.push((prev.0, v_edge));
                    pts.push((next.0, v_edge));
                }
            }
        }
    }

    for k in 1..pts.len() {
        let du = wrap_delta(pts[k].0 - pts[k - 1].0, n_h);
        pts[k].0 = pts[k - 1].0 + du;
    }
    pts
}

fn base_ring_z(p: &SphericalPoint, pog_phi: f64) -> f64 {
    rotate_phi(p.to_cartesian(), pog_phi).z
}

/// Maps a horizontal difference to `(-n/2, n/2]`.
fn wrap_delta(d: f64, n: f64) -> f64 {
    let mut d = d.rem_euclid(n);
    if d > n / 2.0 {
        d -= n;
    }
    d
}

/// `(column, row coordinate)` of every crossing between the closed polyline
/// and the column centers. Each segment owns the half-open horizontal range
/// `[min u, max u)`, so shared vertices are counted once.
fn column_crossings(ring: &[(f64, f64)], n_h: usize) -> Vec<(u32, f64)> {
    let n = ring.len();
    let width = n_h as f64;
    let mut out = Vec::with_capacity(2 * n_h);
    for k in 0..n {
        let (u1, v1) = ring[k];
        let (mut u2, v2) = ring[(k + 1) % n];
        if k + 1 == n {
            u2 = u1 + wrap_delta(u2 - u1, width);
        }
        if u1 == u2 {
            continue;
        }
        let (lo, hi) = if u1 < u2 { (u1, u2) } else { (u2, u1) };
        let first = (lo - 0.5).ceil() as i64;
        let last = (hi - 0.5).ceil() as i64;
        for j in first..last {
            let x = j as f64 + 0.5;
            let t = (x - u1) / (u2 - u1);
            let v = v1 + t * (v2 - v1);
            out.push((j.rem_euclid(n_h as i64) as u32, v));
        }
    }
    out
}

/// Frame edge (in row coordinates) of the pole the viewport encloses.
fn enclosed_pole_edge(pog: SphericalPoint, fov: FieldOfView, n_v: f64) -> f64 {
    let north = CartesianVector {
        x: 0.0,
        y: 0.0,
        z: 1.0,
    };
    let south = north.neg();
    if exact_membership(north, pog, fov) {
        0.0
    } else if exact_membership(south, pog, fov) {
        n_v
    } else if pog.phi() <= 90.0 {
        // the polyline approximation can enclose a pole the true viewport
        // only grazes
        0.0
    } else {
        n_v
    }
}

/// Rows whose centers lie in `[v0, v1]`.
fn rows_between(v0: f64, v1: f64, n_v: usize) -> Option<(u32, u32)> {
    let start = (v0 - 0.5 - EDGE_SLACK).ceil().max(0.0);
    let end = ((v1 - 0.5 + EDGE_SLACK).floor() + 1.0).min(n_v as f64);
    (end > start).then_some((start as u32, end as u32))
}
