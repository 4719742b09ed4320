//! Boundary of the base viewport (centered at `(180°, 90°)`) and its rotation
//! to an arbitrary point of gaze.

use crate::error::{Error, Result};
use crate::geometry::{
    cartesian_to_spherical, rotate_phi, rotate_theta, FieldOfView, SphericalPoint,
};

/// Corners, side midpoints and sampled sides of a viewport boundary.
///
/// Corner layout on the base viewport:
///
/// ```text
///   A ---- E ---- B
///   |             |
///   G      O      H
///   |             |
///   C ---- F ---- D
/// ```
///
/// `sides` are `[A→B, B→D, D→C, C→A]`, each with `samples_per_side + 1`
/// points including both corners, so concatenating them walks the boundary once.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundarySampleSet {
    pub corners: [SphericalPoint; 4],
    pub side_midpoints: [SphericalPoint; 4],
    pub sides: [Vec<SphericalPoint>; 4],
    pub samples_per_side: usize,
}

impl BoundarySampleSet {
    /// The closed polyline, each vertex once, in traversal order.
    pub fn ring(&self) -> Vec<SphericalPoint> {
        self.sides
            .iter()
            .flat_map(|side| side[..side.len() - 1].iter().copied())
            .collect()
    }

    fn map(&self, f: impl Fn(SphericalPoint) -> SphericalPoint) -> Self {
        Self {
            corners: self.corners.map(&f),
            side_midpoints: self.side_midpoints.map(&f),
            sides: self.sides.clone().map(|s| s.into_iter().map(&f).collect()),
            samples_per_side: self.samples_per_side,
        }
    }
}

/// Colatitude where the great circle through `a` and `b` crosses longitude `theta`.
///
/// The circle lies in the plane with normal `a × b = (alpha, beta, gamma)`, so
/// `tan(phi) = -gamma / (alpha sin(theta) + beta cos(theta))`; the quadrant is
/// picked so that `phi ∈ [0°, 180°]`.
pub(crate) fn great_circle_colatitude(a: SphericalPoint, b: SphericalPoint, theta: f64) -> f64 {
    let (sta, cta) = a.theta().to_radians().sin_cos();
    let (spa, cpa) = a.phi().to_radians().sin_cos();
    let (stb, ctb) = b.theta().to_radians().sin_cos();
    let (spb, cpb) = b.phi().to_radians().sin_cos();
    let alpha = spa * cta * cpb - spb * ctb * cpa;
    let beta = -spa * sta * cpb + spb * stb * cpa;
    let gamma = spa * sta * spb * ctb - spb * stb * spa * cta;

    let (st, ct) = theta.to_radians().sin_cos();
    let num = -gamma;
    let den = alpha * st + beta * ct;
    // sin(phi) ≥ 0: flip both terms when the numerator is negative
    let sign = if num < 0.0 { -1.0 } else { 1.0 };
    (num * sign).atan2(den * sign).to_degrees()
}

/// Boundary samples of the viewport centered on the frame center.
///
/// The left and right sides lie on meridians; the top and bottom sides are
/// great-circle arcs sampled at evenly spaced longitudes.
pub fn base_viewport_boundary(
    fov: FieldOfView,
    samples_per_side: usize,
) -> Result<BoundarySampleSet> {
    if samples_per_side == 0 {
        return Err(Error::invalid("samples_per_side must be at least 1"));
    }
    let half_t = fov.theta_vp() / 2.0;
    let half_p = fov.phi_vp() / 2.0;
    // elevation of the corners: the top arc meets the side meridians at
    // tan(elev) = tan(phi_vp/2) cos(theta_vp/2)
    let corner_elev = (half_p.to_radians().tan() * half_t.to_radians().cos())
        .atan()
        .to_degrees();
    let (t_left, t_right) = (180.0 - half_t, 180.0 + half_t);
    let (p_top, p_bottom) = (90.0 - corner_elev, 90.0 + corner_elev);

    let a = SphericalPoint::new(t_left, p_top);
    let b = SphericalPoint::new(t_right, p_top);
    let c = SphericalPoint::new(t_left, p_bottom);
    let d = SphericalPoint::new(t_right, p_bottom);

    let e = SphericalPoint::new(180.0, 90.0 - half_p);
    let f = SphericalPoint::new(180.0, 90.0 + half_p);
    let g = SphericalPoint::new(t_left, 90.0);
    let h = SphericalPoint::new(t_right, 90.0);

    let n = samples_per_side;
    let lerp = |from: f64, to: f64, k: usize| from + (to - from) * k as f64 / n as f64;

    let arc = |from: SphericalPoint, to: SphericalPoint| -> Vec<SphericalPoint> {
        (0..=n)
            .map(|k| {
                if k == 0 {
                    from
                } else if k == n {
                    to
                } else {
                    let theta = lerp(from.theta(), to.theta(), k);
                    SphericalPoint::new(theta, great_circle_colatitude(from, to, theta))
                }
            })
            .collect()
    };
    let meridian = |from: SphericalPoint, to: SphericalPoint| -> Vec<SphericalPoint> {
        (0..=n)
            .map(|k| SphericalPoint::new(from.theta(), lerp(from.phi(), to.phi(), k)))
            .collect()
    };

    Ok(BoundarySampleSet {
        corners: [a, b, c, d],
        side_midpoints: [e, f, g, h],
        sides: [arc(a, b), meridian(b, d), arc(d, c), meridian(c, a)],
        samples_per_side: n,
    })
}

/// Moves a base-viewport point to be centered on `pog`: vertical rotation then horizontal shift.
pub(crate) fn rotate_to_pog(p: SphericalPoint, pog: SphericalPoint) -> SphericalPoint {
    let v = rotate_phi(p.to_cartesian(), pog.phi());
    let p = cartesian_to_spherical(v).expect("rotation preserves unit length");
    rotate_theta(p, pog.theta() - 180.0)
}

/// Boundary samples of the viewport centered on `pog`.
pub fn rotated_boundary(
    pog: SphericalPoint,
    fov: FieldOfView,
    samples_per_side: usize,
) -> Result<BoundarySampleSet> {
    Ok(base_viewport_boundary(fov, samples_per_side)?.map(|p| rotate_to_pog(p, pog)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{angular_distance, spherical_to_pixel, Resolution};
    use approx::assert_abs_diff_eq;

    fn default_set(n: usize) -> BoundarySampleSet {
        base_viewport_boundary(FieldOfView::default(), n).unwrap()
    }

    #[test]
    fn midpoints() {
        let s = default_set(8);
        let [e, f, g, h] = s.side_midpoints;
        assert_eq!((e.theta(), e.phi()), (180.0, 47.5));
        assert_eq!((f.theta(), f.phi()), (180.0, 132.5));
        assert_eq!((g.theta(), g.phi()), (130.0, 90.0));
        assert_eq!((h.theta(), h.phi()), (230.0, 90.0));
    }

    #[test]
    fn corner_colatitude() {
        let s = default_set(8);
        let [a, b, c, d] = s.corners;
        // 90 - atan(tan 42.5° cos 50°)
        assert_abs_diff_eq!(a.phi(), 59.501_645_830_55, epsilon = 1e-9);
        assert_eq!(a.phi(), b.phi());
        assert_abs_diff_eq!(c.phi(), 180.0 - a.phi(), epsilon = 1e-12);
        assert_eq!(c.phi(), d.phi());
        assert_eq!(a.theta(), 130.0);
        assert_eq!(b.theta(), 230.0);
    }

    #[test]
    fn top_arc_passes_through_midpoint() {
        let s = default_set(2);
        let top = &s.sides[0];
        assert_eq!(top.len(), 3);
        assert_abs_diff_eq!(top[1].theta(), 180.0, epsilon = 1e-12);
        assert_abs_diff_eq!(top[1].phi(), 47.5, epsilon = 1e-9);
        let bottom = &s.sides[2];
        assert_abs_diff_eq!(bottom[1].phi(), 132.5, epsilon = 1e-9);
    }

    #[test]
    fn corners_span_the_dihedral_angles() {
        // side midpoints sit half a field of view away from the center
        let s = default_set(4);
        let o = SphericalPoint::new(180.0, 90.0);
        assert_abs_diff_eq!(
            angular_distance(o, s.side_midpoints[0]),
            42.5,
            epsilon = 1e-9
        );
        assert_abs_diff_eq!(
            angular_distance(o, s.side_midpoints[2]),
            50.0,
            epsilon = 1e-9
        );
    }

    #[test]
    fn equator_arc_is_flat() {
        let a = SphericalPoint::new(130.0, 90.0);
        let b = SphericalPoint::new(230.0, 90.0);
        for t in [130.0, 150.0, 180.0, 229.0] {
            assert_abs_diff_eq!(great_circle_colatitude(a, b, t), 90.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn arc_samples_lie_on_the_great_circle() {
        let s = default_set(16);
        let [a, b, ..] = s.corners;
        let normal = a.to_cartesian().cross(&b.to_cartesian());
        for p in &s.sides[0] {
            assert_abs_diff_eq!(p.to_cartesian().dot(&normal), 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn ring_is_closed_walk() {
        let s = default_set(5);
        let ring = s.ring();
        assert_eq!(ring.len(), 20);
        assert_eq!(ring[0], s.corners[0]);
        assert_eq!(ring[5], s.corners[1]);
        assert_eq!(ring[10], s.corners[3]);
        assert_eq!(ring[15], s.corners[2]);
    }

    #[test]
    fn vertical_sides_stay_in_one_column() {
        let res = Resolution::uhd();
        let s = default_set(64);
        let (g_col, _) = spherical_to_pixel(s.side_midpoints[2], res);
        let (h_col, _) = spherical_to_pixel(s.side_midpoints[3], res);
        assert!(s.sides[3]
            .iter()
            .all(|p| spherical_to_pixel(*p, res).0 == g_col));
        assert!(s.sides[1]
            .iter()
            .all(|p| spherical_to_pixel(*p, res).0 == h_col));
    }

    #[test]
    fn zero_samples_rejected() {
        assert!(base_viewport_boundary(FieldOfView::default(), 0).is_err());
    }

    #[test]
    fn rotation_moves_center_to_pog() {
        let pog = SphericalPoint::new(320.0, 110.0);
        let s = rotated_boundary(pog, FieldOfView::default(), 4).unwrap();
        let base = default_set(4);
        let center = SphericalPoint::new(180.0, 90.0);
        // distances to the center are preserved by the rotation
        for (p, q) in s.ring().iter().zip(base.ring().iter()) {
            assert_abs_diff_eq!(
                angular_distance(*p, pog),
                angular_distance(*q, center),
                epsilon = 1e-9
            );
        }
        // E moves straight up from the PoG
        let e = s.side_midpoints[0];
        assert_abs_diff_eq!(e.theta(), 320.0, epsilon = 1e-9);
        assert_abs_diff_eq!(e.phi(), 110.0 - 42.5, epsilon = 1e-9);
    }
}
