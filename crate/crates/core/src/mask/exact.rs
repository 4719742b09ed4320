//! Per-pixel membership in the viewing pyramid.
//!
//! A direction is undone back into the base frame (forward `(0, -1, 0)`, up
//! `+z`) and tested against the four faces of the pyramid. This is independent
//! of the boundary sampling and serves as the reference for the rasterizer.

use super::{CenterWeighting, ColumnSpan, ViewportMask};
#[cfg(doc)]
use crate::geometry::{rotate_about_z, rotate_phi_inverse};
use crate::geometry::{CartesianVector, FieldOfView, Resolution, SphericalPoint};

/// Boundary points within this distance (at unit depth) count as inside.
const FACE_TOLERANCE: f64 = 1e-12;

/// The pyramid of one viewport, ready for repeated membership tests.
#[derive(Debug, Clone, Copy)]
pub struct ViewportFrame {
    unshift: (f64, f64),
    unrotate: (f64, f64),
    tan_h: f64,
    tan_v: f64,
}

impl ViewportFrame {
    pub fn new(pog: SphericalPoint, fov: FieldOfView) -> Self {
        let (tan_h, tan_v) = fov.half_tangents();
        Self {
            unshift: (180.0 - pog.theta()).to_radians().sin_cos(),
            unrotate: (90.0 - pog.phi()).to_radians().sin_cos(),
            tan_h,
            tan_v,
        }
    }

    /// Expresses `v` in the frame where the viewport is centered at `(180°, 90°)`.
    ///
    /// Same arithmetic as [`rotate_about_z`] followed by [`rotate_phi_inverse`],
    /// with the trigonometry hoisted.
    pub fn to_base(&self, v: CartesianVector) -> CartesianVector {
        let (s, c) = self.unshift;
        let u = CartesianVector {
            x: c * v.x + s * v.y,
            y: -s * v.x + c * v.y,
            z: v.z,
        };
        let (s, c) = self.unrotate;
        CartesianVector {
            x: u.x,
            y: c * u.y - s * u.z,
            z: s * u.y + c * u.z,
        }
    }

    pub fn contains(&self, v: CartesianVector) -> bool {
        base_contains(self.to_base(v), self.tan_h, self.tan_v)
    }
}

fn base_contains(b: CartesianVector, tan_h: f64, tan_v: f64) -> bool {
    let depth = -b.y;
    depth > 0.0
        && b.x.abs() <= tan_h * depth + FACE_TOLERANCE
        && b.z.abs() <= tan_v * depth + FACE_TOLERANCE
}

/// True iff `pixel_dir` lies inside the viewing pyramid of the viewport at `pog`.
pub fn exact_membership(pixel_dir: CartesianVector, pog: SphericalPoint, fov: FieldOfView) -> bool {
    ViewportFrame::new(pog, fov).contains(pixel_dir)
}

/// Mask of every pixel whose center passes [`exact_membership`], `sin(phi)` weighted.
pub fn exact_mask(pog: SphericalPoint, fov: FieldOfView, res: Resolution) -> ViewportMask {
    exact_mask_with(pog, fov, res, CenterWeighting::None)
}

pub fn exact_mask_with(
    pog: SphericalPoint,
    fov: FieldOfView,
    res: Resolution,
    center: CenterWeighting,
) -> ViewportMask {
    let frame = ViewportFrame::new(pog, fov);
    let rows: Vec<(f64, f64)> = (0..res.n_v())
        .map(|r| res.row_phi(r).to_radians().sin_cos())
        .collect();

    let mut spans = Vec::new();
    for col in 0..res.n_h() {
        let (st, ct) = res.column_theta(col).to_radians().sin_cos();
        let mut open: Option<u32> = None;
        for (row, &(sp, cp)) in rows.iter().enumerate() {
            let v = CartesianVector {
                x: sp * st,
                y: sp * ct,
                z: cp,
            };
            let inside = frame.contains(v);
            match (inside, open) {
                (true, None) => open = Some(row as u32),
                (false, Some(start)) => {
                    spans.push(ColumnSpan {
                        col: col as u32,
                        start,
                        end: row as u32,
                    });
                    open = None;
                }
                _ => {}
            }
        }
        if let Some(start) = open {
            spans.push(ColumnSpan {
                col: col as u32,
                start,
                end: res.n_v() as u32,
            });
        }
    }
    ViewportMask::from_spans(res, pog, Some(fov), spans, center)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{equivalent_pixels_viewport, pixel_to_spherical};
    use crate::mask::boundary::base_viewport_boundary;

    fn fov() -> FieldOfView {
        FieldOfView::default()
    }

    #[test]
    fn pog_inside_antipode_outside() {
        for (t, p) in [(180.0, 90.0), (10.0, 20.0), (300.0, 179.0), (0.0, 0.0)] {
            let pog = SphericalPoint::new(t, p);
            let v = pog.to_cartesian();
            assert!(exact_membership(v, pog, fov()));
            assert!(!exact_membership(v.neg(), pog, fov()));
        }
    }

    #[test]
    fn boundary_points_are_inside() {
        let pog = SphericalPoint::new(180.0, 90.0);
        let set = base_viewport_boundary(fov(), 8).unwrap();
        for p in set.ring().into_iter().chain(set.side_midpoints) {
            assert!(exact_membership(p.to_cartesian(), pog, fov()), "{p}");
        }
        // just beyond the top-left corner
        let a = set.corners[0];
        let outside = SphericalPoint::new(a.theta() - 1e-6, a.phi() - 1e-6);
        assert!(!exact_membership(outside.to_cartesian(), pog, fov()));
    }

    #[test]
    fn side_planes_are_great_circles() {
        let pog = SphericalPoint::new(180.0, 90.0);
        // a point on the left meridian, well above the equator but below the corner
        assert!(exact_membership(
            SphericalPoint::new(130.0, 60.0).to_cartesian(),
            pog,
            fov()
        ));
        assert!(!exact_membership(
            SphericalPoint::new(129.9, 60.0).to_cartesian(),
            pog,
            fov()
        ));
        // the top arc sags towards the equator away from E
        assert!(!exact_membership(
            SphericalPoint::new(140.0, 50.0).to_cartesian(),
            pog,
            fov()
        ));
        assert!(exact_membership(
            SphericalPoint::new(180.0, 47.6).to_cartesian(),
            pog,
            fov()
        ));
    }

    #[test]
    fn area_constant_along_equator() {
        let res = Resolution::new(720, 360).unwrap();
        let reference = exact_mask(SphericalPoint::new(180.0, 90.0), fov(), res).area();
        for t in [0.0, 33.3, 97.0, 250.5] {
            let a = exact_mask(SphericalPoint::new(t, 90.0), fov(), res).area();
            assert!(
                (a - reference).abs() / reference < 1e-3,
                "{t}: {a} vs {reference}"
            );
        }
        let closed = equivalent_pixels_viewport(res, fov());
        assert!((reference - closed).abs() / closed < 0.02);
    }

    #[test]
    fn frame_matches_geometry_rotations() {
        let pog = SphericalPoint::new(251.0, 33.0);
        let frame = ViewportFrame::new(pog, fov());
        let v = SphericalPoint::new(12.0, 99.0).to_cartesian();
        let via_geometry = crate::geometry::rotate_phi_inverse(
            crate::geometry::rotate_about_z(v, 180.0 - pog.theta()),
            pog.phi(),
        );
        assert_eq!(frame.to_base(v), via_geometry);
        let center = frame.to_base(pog.to_cartesian());
        assert!((center.y + 1.0).abs() < 1e-12);
    }

    #[test]
    fn mask_matches_pointwise_membership() {
        let res = Resolution::new(96, 48).unwrap();
        let pog = SphericalPoint::new(25.0, 140.0);
        let m = exact_mask(pog, fov(), res);
        for row in 0..res.n_v() {
            for col in 0..res.n_h() {
                let p = pixel_to_spherical(col, row, res).unwrap();
                assert_eq!(
                    m.contains(col, row),
                    exact_membership(p.to_cartesian(), pog, fov())
                );
            }
        }
    }
}
