//! Coordinate transforms on the viewing sphere.
//!
//! Spherical coordinates follow the HMD convention used by equirectangular
//! frames: `theta` is the longitude in `[0, 360)` degrees measured from the
//! `+y` axis towards `+x`, `phi` is the colatitude in `[0, 180]` degrees
//! measured from `+z`. The frame center `(180°, 90°)` is the direction
//! `(0, -1, 0)`.
//!
//! ```text
//! x = sin(phi) sin(theta)
//! y = sin(phi) cos(theta)
//! z = cos(phi)
//! ```
//!
//! Angles are degrees at every public boundary.

use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const UNIT_TOLERANCE: f64 = 1e-12;

/// A direction on the unit sphere in degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SphericalPoint {
    theta: f64,
    phi: f64,
}

impl SphericalPoint {
    /// Builds a point, wrapping `theta` into `[0, 360)` and clamping `phi` to `[0, 180]`.
    pub fn new(theta: f64, phi: f64) -> Self {
        debug_assert!(theta.is_finite() && phi.is_finite());
        Self {
            theta: wrap_degrees(theta),
            phi: phi.clamp(0.0, 180.0),
        }
    }

    /// Like [`SphericalPoint::new`] but rejects non-finite input.
    pub fn try_new(theta: f64, phi: f64) -> Result<Self> {
        if !theta.is_finite() || !phi.is_finite() {
            return Err(Error::invalid(format!(
                "non-finite spherical point ({theta}, {phi})"
            )));
        }
        Ok(Self::new(theta, phi))
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }

    pub fn to_cartesian(self) -> CartesianVector {
        spherical_to_cartesian(self)
    }
}

impl fmt::Display for SphericalPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}°, {}°)", self.theta, self.phi)
    }
}

/// Wraps an angle in degrees into `[0, 360)`.
pub fn wrap_degrees(deg: f64) -> f64 {
    let r = deg.rem_euclid(360.0);
    // rem_euclid can round up to exactly 360 for tiny negative inputs
    if r >= 360.0 {
        0.0
    } else {
        r
    }
}

/// Cartesian components of a direction. Constructors keep the vector unit length.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CartesianVector {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl CartesianVector {
    /// Normalizes `(x, y, z)`; fails on zero or non-finite input.
    pub fn normalized(x: f64, y: f64, z: f64) -> Result<Self> {
        let n = (x * x + y * y + z * z).sqrt();
        if !n.is_finite() || n < 1e-300 {
            return Err(Error::Domain(format!(
                "cannot normalize vector ({x}, {y}, {z})"
            )));
        }
        Ok(Self {
            x: x / n,
            y: y / n,
            z: z / n,
        })
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn dot(&self, other: &Self) -> f64 {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    pub fn cross(&self, other: &Self) -> Self {
        Self {
            x: self.y * other.z - self.z * other.y,
            y: self.z * other.x - self.x * other.z,
            z: self.x * other.y - self.y * other.x,
        }
    }

    pub fn neg(&self) -> Self {
        Self {
            x: -self.x,
            y: -self.y,
            z: -self.z,
        }
    }

    pub fn is_unit(&self) -> bool {
        (self.norm() - 1.0).abs() <= UNIT_TOLERANCE
    }
}

/// Dihedral angles of the viewing pyramid, in degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FieldOfView {
    theta_vp: f64,
    phi_vp: f64,
}

impl FieldOfView {
    pub fn new(theta_vp: f64, phi_vp: f64) -> Result<Self> {
        let ok = |a: f64| a.is_finite() && a > 0.0 && a < 180.0;
        if !ok(theta_vp) || !ok(phi_vp) {
            return Err(Error::invalid(format!(
                "field of view ({theta_vp}°, {phi_vp}°) must have both angles in (0, 180)"
            )));
        }
        Ok(Self { theta_vp, phi_vp })
    }

    pub fn theta_vp(&self) -> f64 {
        self.theta_vp
    }

    pub fn phi_vp(&self) -> f64 {
        self.phi_vp
    }

    /// `(tan(theta_vp/2), tan(phi_vp/2))`: the half-widths of the pyramid at unit depth.
    pub fn half_tangents(&self) -> (f64, f64) {
        (
            (self.theta_vp / 2.0).to_radians().tan(),
            (self.phi_vp / 2.0).to_radians().tan(),
        )
    }
}

impl Default for FieldOfView {
    /// The average HMD field of view, 100° × 85°.
    fn default() -> Self {
        Self {
            theta_vp: 100.0,
            phi_vp: 85.0,
        }
    }
}

impl fmt::Display for FieldOfView {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}", self.theta_vp, self.phi_vp)
    }
}

/// Equirectangular frame size: `n_h` columns by `n_v` rows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Resolution {
    n_h: usize,
    n_v: usize,
}

impl Resolution {
    pub fn new(n_h: usize, n_v: usize) -> Result<Self> {
        if n_h < 2 || n_v < 2 {
            return Err(Error::invalid(format!(
                "resolution {n_h}x{n_v}: both dimensions must be at least 2"
            )));
        }
        if u32::try_from(n_h).is_err() || u32::try_from(n_v).is_err() {
            return Err(Error::invalid(format!("resolution {n_h}x{n_v} too large")));
        }
        if n_h != 2 * n_v {
            log::warn!(
                "resolution {n_h}x{n_v} is not 2:1; equirectangular pixels will not be square"
            );
        }
        Ok(Self { n_h, n_v })
    }

    /// The UHD-4K equirectangular frame, 3840×1920.
    pub fn uhd() -> Self {
        Self {
            n_h: 3840,
            n_v: 1920,
        }
    }

    pub fn n_h(&self) -> usize {
        self.n_h
    }

    pub fn n_v(&self) -> usize {
        self.n_v
    }

    pub fn pixel_count(&self) -> usize {
        self.n_h * self.n_v
    }

    /// Longitude of the center of column `col`.
    pub fn column_theta(&self, col: usize) -> f64 {
        (col as f64 + 0.5) * 360.0 / self.n_h as f64
    }

    /// Colatitude of the center of row `row`.
    pub fn row_phi(&self, row: usize) -> f64 {
        (row as f64 + 0.5) * 180.0 / self.n_v as f64
    }

    /// `sin(phi)` at every row center: the equivalent area of one pixel in that row.
    pub fn row_weights(&self) -> Vec<f64> {
        (0..self.n_v)
            .map(|r| self.row_phi(r).to_radians().sin())
            .collect()
    }
}

impl fmt::Display for Resolution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}", self.n_h, self.n_v)
    }
}

impl std::str::FromStr for Resolution {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (w, h) = s
            .split_once(['x', 'X'])
            .ok_or_else(|| Error::invalid(format!("resolution '{s}' is not WxH")))?;
        let parse = |v: &str| {
            v.trim()
                .parse::<usize>()
                .map_err(|_| Error::invalid(format!("resolution '{s}' is not WxH")))
        };
        Resolution::new(parse(w)?, parse(h)?)
    }
}

pub fn spherical_to_cartesian(p: SphericalPoint) -> CartesianVector {
    let (st, ct) = p.theta.to_radians().sin_cos();
    let (sp, cp) = p.phi.to_radians().sin_cos();
    CartesianVector {
        x: sp * st,
        y: sp * ct,
        z: cp,
    }
}

/// Inverse of [`spherical_to_cartesian`]. The input is normalized first; at the
/// poles `theta` is reported as 0.
pub fn cartesian_to_spherical(v: CartesianVector) -> Result<SphericalPoint> {
    let v = CartesianVector::normalized(v.x, v.y, v.z)?;
    let rho = v.x.hypot(v.y);
    let phi = rho.atan2(v.z).to_degrees();
    let theta = if rho == 0.0 {
        0.0
    } else {
        v.x.atan2(v.y).to_degrees()
    };
    Ok(SphericalPoint::new(theta, phi))
}

/// Spherical coordinates of the center of pixel `(col, row)`.
pub fn pixel_to_spherical(col: usize, row: usize, res: Resolution) -> Result<SphericalPoint> {
    if col >= res.n_h || row >= res.n_v {
        return Err(Error::PixelOutOfRange {
            col,
            row,
            resolution: res,
        });
    }
    Ok(SphericalPoint::new(res.column_theta(col), res.row_phi(row)))
}

/// Continuous image coordinates `(theta/360 · N_H, phi/180 · N_V)`.
pub fn spherical_to_image(p: SphericalPoint, res: Resolution) -> (f64, f64) {
    (
        p.theta / 360.0 * res.n_h as f64,
        p.phi / 180.0 * res.n_v as f64,
    )
}

/// Index of the pixel containing `p`.
pub fn spherical_to_pixel(p: SphericalPoint, res: Resolution) -> (usize, usize) {
    let (u, v) = spherical_to_image(p, res);
    let col = (u.floor().max(0.0) as usize).min(res.n_h - 1);
    let row = (v.floor().max(0.0) as usize).min(res.n_v - 1);
    (col, row)
}

/// Solid angle of the viewing pyramid in steradians.
pub fn solid_angle(fov: FieldOfView) -> f64 {
    4.0 * half_angle_product_asin(fov)
}

fn half_angle_product_asin(fov: FieldOfView) -> f64 {
    let a = (fov.phi_vp / 2.0).to_radians().sin();
    let b = (fov.theta_vp / 2.0).to_radians().sin();
    (a * b).asin()
}

/// Equivalent pixel count of the whole frame, `(2/π) N_H N_V`.
pub fn equivalent_pixels_picture(res: Resolution) -> f64 {
    2.0 / PI * res.pixel_count() as f64
}

/// Equivalent pixel count of the viewport: the frame's share of the viewport's solid angle.
pub fn equivalent_pixels_viewport(res: Resolution, fov: FieldOfView) -> f64 {
    2.0 / (PI * PI) * res.pixel_count() as f64 * half_angle_product_asin(fov)
}

fn phi_rotation(phi_target: f64) -> (f64, f64) {
    (90.0 - phi_target).to_radians().sin_cos()
}

/// Rotates a base-viewport vector by `90° - phi_target` about the `-x` axis,
/// carrying the frame center `(0, -1, 0)` to colatitude `phi_target`.
pub fn rotate_phi(v: CartesianVector, phi_target: f64) -> CartesianVector {
    let (s, c) = phi_rotation(phi_target);
    CartesianVector {
        x: v.x,
        y: c * v.y + s * v.z,
        z: -s * v.y + c * v.z,
    }
}

/// Inverse of [`rotate_phi`].
pub fn rotate_phi_inverse(v: CartesianVector, phi_target: f64) -> CartesianVector {
    let (s, c) = phi_rotation(phi_target);
    CartesianVector {
        x: v.x,
        y: c * v.y - s * v.z,
        z: s * v.y + c * v.z,
    }
}

/// Horizontal move on the equirectangular frame.
pub fn rotate_theta(p: SphericalPoint, delta_theta: f64) -> SphericalPoint {
    SphericalPoint::new(p.theta + delta_theta, p.phi)
}

/// Cartesian form of [`rotate_theta`]: rotation about `z` that increases `theta` by `delta_theta`.
pub fn rotate_about_z(v: CartesianVector, delta_theta: f64) -> CartesianVector {
    let (s, c) = delta_theta.to_radians().sin_cos();
    CartesianVector {
        x: c * v.x + s * v.y,
        y: -s * v.x + c * v.y,
        z: v.z,
    }
}

/// Great-circle central angle between two points, in degrees.
pub fn angular_distance(a: SphericalPoint, b: SphericalPoint) -> f64 {
    angle_between(&a.to_cartesian(), &b.to_cartesian())
}

/// Angle between two unit vectors in degrees, stable for small and near-antipodal angles.
pub fn angle_between(a: &CartesianVector, b: &CartesianVector) -> f64 {
    a.cross(b).norm().atan2(a.dot(b)).to_degrees()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn sp(t: f64, p: f64) -> SphericalPoint {
        SphericalPoint::new(t, p)
    }

    fn assert_vec(v: CartesianVector, x: f64, y: f64, z: f64) {
        assert_abs_diff_eq!(v.x, x, epsilon = 1e-12);
        assert_abs_diff_eq!(v.y, y, epsilon = 1e-12);
        assert_abs_diff_eq!(v.z, z, epsilon = 1e-12);
    }

    #[test]
    fn spherical_to_cartesian_examples() {
        assert_vec(spherical_to_cartesian(sp(180.0, 90.0)), 0.0, -1.0, 0.0);
        assert_vec(spherical_to_cartesian(sp(180.0, 0.0)), 0.0, 0.0, 1.0);
        assert_vec(spherical_to_cartesian(sp(90.0, 90.0)), 1.0, 0.0, 0.0);
    }

    #[test]
    fn cartesian_to_spherical_examples() {
        let p = cartesian_to_spherical(CartesianVector {
            x: 0.0,
            y: -1.0,
            z: 0.0,
        })
        .unwrap();
        assert_abs_diff_eq!(p.theta(), 180.0, epsilon = 1e-12);
        assert_abs_diff_eq!(p.phi(), 90.0, epsilon = 1e-12);

        let south = cartesian_to_spherical(CartesianVector {
            x: 0.0,
            y: 0.0,
            z: -1.0,
        })
        .unwrap();
        assert_eq!(south.theta(), 0.0);
        assert_eq!(south.phi(), 180.0);

        let zero = CartesianVector {
            x: 0.0,
            y: 0.0,
            z: 0.0,
        };
        assert!(matches!(
            cartesian_to_spherical(zero),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn quadrants_resolved() {
        for &t in &[10.0, 100.0, 190.0, 280.0, 359.0] {
            let back = cartesian_to_spherical(sp(t, 60.0).to_cartesian()).unwrap();
            assert_abs_diff_eq!(back.theta(), t, epsilon = 1e-9);
        }
    }

    #[test]
    fn theta_wraps_and_phi_clamps() {
        assert_eq!(sp(-90.0, 10.0).theta(), 270.0);
        assert_eq!(sp(720.0, 10.0).theta(), 0.0);
        assert_eq!(sp(-1e-18, 10.0).theta(), 0.0);
        assert_eq!(sp(0.0, 190.0).phi(), 180.0);
        assert_eq!(sp(0.0, -3.0).phi(), 0.0);
        assert!(SphericalPoint::try_new(f64::NAN, 0.0).is_err());
    }

    #[test]
    fn pixel_center_convention() {
        let res = Resolution::uhd();
        let p = pixel_to_spherical(1919, 959, res).unwrap();
        assert_abs_diff_eq!(p.theta(), 179.953125, epsilon = 1e-12);
        assert_abs_diff_eq!(p.phi(), 89.953125, epsilon = 1e-12);

        let small = Resolution::new(4, 2).unwrap();
        let p = pixel_to_spherical(0, 0, small).unwrap();
        assert_eq!((p.theta(), p.phi()), (45.0, 45.0));

        assert!(matches!(
            pixel_to_spherical(4, 0, small),
            Err(Error::PixelOutOfRange { .. })
        ));
        assert!(pixel_to_spherical(0, 2, small).is_err());
    }

    #[test]
    fn pixel_round_trip_is_identity() {
        for res in [Resolution::uhd(), Resolution::new(360, 180).unwrap()] {
            for row in 0..res.n_v() {
                for col in (0..res.n_h()).step_by(7) {
                    let p = pixel_to_spherical(col, row, res).unwrap();
                    assert_eq!(spherical_to_pixel(p, res), (col, row));
                }
            }
        }
    }

    #[test]
    fn resolution_validation() {
        assert!(Resolution::new(1, 2).is_err());
        assert!(Resolution::new(2, 1).is_err());
        assert!(Resolution::new(3, 2).is_ok());
        let r: Resolution = "3840x1920".parse().unwrap();
        assert_eq!(r, Resolution::uhd());
        assert!("3840".parse::<Resolution>().is_err());
    }

    #[test]
    fn field_of_view_validation() {
        assert!(FieldOfView::new(0.0, 85.0).is_err());
        assert!(FieldOfView::new(100.0, 180.0).is_err());
        assert!(FieldOfView::new(179.9, 0.1).is_ok());
    }

    #[test]
    fn solid_angle_examples() {
        let fov = FieldOfView::new(90.0, 90.0).unwrap();
        assert_abs_diff_eq!(solid_angle(fov), 2.0 * PI / 3.0, epsilon = 1e-12);

        let fov = FieldOfView::default();
        assert_abs_diff_eq!(solid_angle(fov), 2.1759, epsilon = 1e-4);

        let nearly_flat = FieldOfView::new(180.0 - 1e-9, 180.0 - 1e-9).unwrap();
        assert_abs_diff_eq!(solid_angle(nearly_flat), 2.0 * PI, epsilon = 1e-6);
    }

    #[test]
    fn solid_angle_is_monotone() {
        let mut prev = 0.0;
        for t in 1..180 {
            let sa = solid_angle(FieldOfView::new(t as f64, 85.0).unwrap());
            assert!(sa > prev);
            prev = sa;
        }
        let mut prev = 0.0;
        for p in 1..180 {
            let sa = solid_angle(FieldOfView::new(100.0, p as f64).unwrap());
            assert!(sa > prev);
            prev = sa;
        }
    }

    #[test]
    fn equivalent_pixels() {
        let res = Resolution::uhd();
        assert_abs_diff_eq!(equivalent_pixels_picture(res), 4_693_670.26, epsilon = 0.01);
        // sum of sin(phi) over pixel centers converges to the closed form
        let exact: f64 = res.row_weights().iter().sum::<f64>() * res.n_h() as f64;
        let rel = (exact - equivalent_pixels_picture(res)).abs() / exact;
        assert!(rel < 1e-3, "{rel}");

        let hemi = FieldOfView::new(180.0 - 1e-9, 180.0 - 1e-9).unwrap();
        assert_abs_diff_eq!(
            equivalent_pixels_viewport(res, hemi),
            equivalent_pixels_picture(res) / 2.0,
            epsilon = 1e-2
        );
        let vp = equivalent_pixels_viewport(res, FieldOfView::default());
        assert_abs_diff_eq!(vp, 812_705.26, epsilon = 0.01);
    }

    #[test]
    fn rotate_phi_examples() {
        let center = sp(180.0, 90.0).to_cartesian();
        assert_vec(rotate_phi(center, 90.0), 0.0, -1.0, 0.0);
        assert_vec(rotate_phi(center, 0.0), 0.0, 0.0, 1.0);
        // carries the center to (180°, phi)
        let p = cartesian_to_spherical(rotate_phi(center, 30.0)).unwrap();
        assert_abs_diff_eq!(p.theta(), 180.0, epsilon = 1e-12);
        assert_abs_diff_eq!(p.phi(), 30.0, epsilon = 1e-12);
    }

    #[test]
    fn rotate_theta_examples() {
        let p = rotate_theta(sp(180.0, 47.5), 140.0);
        assert_eq!((p.theta(), p.phi()), (320.0, 47.5));
        let p = rotate_theta(sp(350.0, 90.0), 20.0);
        assert_abs_diff_eq!(p.theta(), 10.0, epsilon = 1e-12);
        assert_eq!(p.phi(), 90.0);
    }

    #[test]
    fn angular_distance_examples() {
        assert_eq!(angular_distance(sp(33.0, 71.0), sp(33.0, 71.0)), 0.0);
        assert_abs_diff_eq!(
            angular_distance(sp(0.0, 90.0), sp(180.0, 90.0)),
            180.0,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(
            angular_distance(sp(180.0, 90.0), sp(180.0, 45.0)),
            45.0,
            epsilon = 1e-12
        );
    }

    fn any_point() -> impl Strategy<Value = SphericalPoint> {
        (0.0..360.0f64, 0.0..=180.0f64).prop_map(|(t, p)| sp(t, p))
    }

    proptest! {
        #[test]
        fn round_trip_non_pole(t in 0.0..360.0f64, p in 1e-6..(180.0 - 1e-6f64)) {
            let back = cartesian_to_spherical(sp(t, p).to_cartesian()).unwrap();
            let dt = (back.theta() - t).abs();
            prop_assert!(dt.min(360.0 - dt) < 1e-9);
            prop_assert!((back.phi() - p).abs() < 1e-9);
        }

        #[test]
        fn rotations_preserve_norm(a in any_point(), phi in 0.0..=180.0f64, d in -720.0..720.0f64) {
            let v = a.to_cartesian();
            prop_assert!((rotate_phi(v, phi).norm() - 1.0).abs() < 1e-12);
            prop_assert!((rotate_about_z(v, d).norm() - 1.0).abs() < 1e-12);
            let back = rotate_phi_inverse(rotate_phi(v, phi), phi);
            prop_assert!((back.x - v.x).abs() < 1e-12);
            prop_assert!((back.y - v.y).abs() < 1e-12);
            prop_assert!((back.z - v.z).abs() < 1e-12);
        }

        #[test]
        fn rotate_about_z_matches_rotate_theta(a in any_point(), d in -400.0..400.0f64) {
            let moved = rotate_about_z(a.to_cartesian(), d);
            let expected = rotate_theta(a, d).to_cartesian();
            prop_assert!((moved.x - expected.x).abs() < 1e-12);
            prop_assert!((moved.y - expected.y).abs() < 1e-12);
            prop_assert!((moved.z - expected.z).abs() < 1e-12);
            prop_assert_eq!(rotate_theta(a, d).phi(), a.phi());
        }

        #[test]
        fn angular_distance_is_a_metric(a in any_point(), b in any_point(), c in any_point()) {
            let ab = angular_distance(a, b);
            prop_assert!((ab - angular_distance(b, a)).abs() < 1e-12);
            prop_assert!((0.0..=180.0).contains(&ab));
            prop_assert!(ab <= angular_distance(a, c) + angular_distance(c, b) + 1e-9);
        }
    }
}
