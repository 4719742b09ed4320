//! Head-movement traces: one point of gaze per frame.

use std::io::{Read, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{cartesian_to_spherical, CartesianVector, SphericalPoint};

/// Largest accepted deviation of a quaternion's norm from 1.
pub const QUATERNION_TOLERANCE: f64 = 1e-3;

/// Points of gaze for frames `0..len`, sampled at `fps`.
#[derive(Debug, Clone, PartialEq)]
pub struct SessionTrace {
    fps: f64,
    samples: Vec<SphericalPoint>,
}

impl SessionTrace {
    pub fn new(fps: f64, samples: Vec<SphericalPoint>) -> Result<Self> {
        if !(fps > 0.0 && fps.is_finite()) {
            return Err(Error::invalid(format!("frame rate {fps} must be positive")));
        }
        if samples.is_empty() {
            return Err(Error::Trace("trace has no samples".into()));
        }
        Ok(Self { fps, samples })
    }

    pub fn fps(&self) -> f64 {
        self.fps
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Duration in seconds.
    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 / self.fps
    }

    pub fn samples(&self) -> &[SphericalPoint] {
        &self.samples
    }

    pub fn pog(&self, frame: usize) -> SphericalPoint {
        self.samples[frame]
    }

    /// Canonical `frame,theta_deg,phi_deg` CSV.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["frame", "theta_deg", "phi_deg"])?;
        for (i, p) in self.samples.iter().enumerate() {
            w.write_record([i.to_string(), p.theta().to_string(), p.phi().to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// How the axes of a quaternion trace relate to the viewing sphere.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AxisConvention {
    /// Quaternions rotate the sphere's own axes; the reference gaze is `(0, -1, 0)`.
    #[default]
    Native,
    /// Left-handed, `y` up, `x` to the right and reference gaze along `+z`, as
    /// logged by common game-engine HMD recorders.
    YUp,
}

impl FromStr for AxisConvention {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "native" => Ok(AxisConvention::Native),
            "y-up" => Ok(AxisConvention::YUp),
            _ => Err(Error::invalid(format!(
                "axis convention '{s}' (expected native or y-up)"
            ))),
        }
    }
}

/// Rotates `v` by the unit quaternion `(w, x, y, z)`.
fn rotate(q: [f64; 4], v: [f64; 3]) -> [f64; 3] {
    let [w, qx, qy, qz] = q;
    let cross = |a: [f64; 3], b: [f64; 3]| {
        [
            a[1] * b[2] - a[2] * b[1],
            a[2] * b[0] - a[0] * b[2],
            a[0] * b[1] - a[1] * b[0],
        ]
    };
    let u = [qx, qy, qz];
    let t = cross(u, v).map(|c| 2.0 * c);
    let ut = cross(u, t);
    [
        v[0] + w * t[0] + ut[0],
        v[1] + w * t[1] + ut[1],
        v[2] + w * t[2] + ut[2],
    ]
}

/// Gaze direction of a head orientation.
pub fn quaternion_to_pog(q: [f64; 4], convention: AxisConvention) -> Result<SphericalPoint> {
    let n = q.iter().map(|c| c * c).sum::<f64>().sqrt();
    if !n.is_finite() || (n - 1.0).abs() > QUATERNION_TOLERANCE {
        return Err(Error::Domain(format!("quaternion {q:?} has norm {n}")));
    }
    let q = q.map(|c| c / n);
    let v = match convention {
        AxisConvention::Native => rotate(q, [0.0, -1.0, 0.0]),
        AxisConvention::YUp => {
            let [right, up, forward] = rotate(q, [0.0, 0.0, 1.0]);
            [-right, -forward, up]
        }
    };
    cartesian_to_spherical(CartesianVector::normalized(v[0], v[1], v[2])?)
}

fn csv_reader<R: Read>(reader: R, header: &[&str]) -> Result<csv::Reader<R>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let found: Vec<String> = rdr.headers()?.iter().map(str::to_owned).collect();
    if found != header {
        return Err(Error::parse(
            1,
            format!("expected header {}", header.join(",")),
        ));
    }
    Ok(rdr)
}

/// Parses rows whose first field is the frame index, enforcing `0, 1, 2, ...`.
fn parse_rows<R: Read>(
    reader: R,
    header: &[&str],
    mut row: impl FnMut(&csv::StringRecord, usize) -> Result<SphericalPoint>,
) -> Result<Vec<SphericalPoint>> {
    let mut rdr = csv_reader(reader, header)?;
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        if rec.len() != header.len() {
            return Err(Error::parse(
                line,
                format!("expected {} fields, found {}", header.len(), rec.len()),
            ));
        }
        let frame: usize = rec[0]
            .parse()
            .map_err(|_| Error::parse(line, format!("bad frame index '{}'", &rec[0])))?;
        let expected = out.len();
        if frame < expected {
            return Err(Error::parse(
                line,
                format!("duplicate or out-of-order frame {frame}"),
            ));
        }
        if frame > expected {
            return Err(Error::parse(line, format!("missing frame {expected}")));
        }
        out.push(row(&rec, line)?);
    }
    Ok(out)
}

fn field(rec: &csv::StringRecord, i: usize, name: &str, line: usize) -> Result<f64> {
    rec[i]
        .parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| Error::parse(line, format!("bad {name} '{}'", &rec[i])))
}

/// Canonical CSV with header `frame,theta_deg,phi_deg`.
pub fn parse_trace<R: Read>(reader: R, fps: f64) -> Result<SessionTrace> {
    let samples = parse_rows(reader, &["frame", "theta_deg", "phi_deg"], |rec, line| {
        let theta = field(rec, 1, "theta_deg", line)?;
        let phi = field(rec, 2, "phi_deg", line)?;
        if !(0.0..=180.0).contains(&phi) {
            return Err(Error::parse(
                line,
                format!("phi_deg {phi} outside [0, 180]"),
            ));
        }
        Ok(SphericalPoint::new(theta, phi))
    })?;
    SessionTrace::new(fps, samples)
}

/// Quaternion CSV with header `frame,qw,qx,qy,qz`.
pub fn parse_quaternion_trace<R: Read>(
    reader: R,
    fps: f64,
    convention: AxisConvention,
) -> Result<SessionTrace> {
    let samples = parse_rows(reader, &["frame", "qw", "qx", "qy", "qz"], |rec, line| {
        let q = [
            field(rec, 1, "qw", line)?,
            field(rec, 2, "qx", line)?,
            field(rec, 3, "qy", line)?,
            field(rec, 4, "qz", line)?,
        ];
        quaternion_to_pog(q, convention).map_err(|e| Error::parse(line, e.to_string()))
    })?;
    SessionTrace::new(fps, samples)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::fmt::Write as _;

    fn canonical(rows: usize) -> String {
        let mut s = String::from("frame,theta_deg,phi_deg\n");
        for i in 0..rows {
            writeln!(s, "{i},{},{}", i as f64 * 0.1, 90.0).unwrap();
        }
        s
    }

    #[test]
    fn one_minute_at_30_fps() {
        let t = parse_trace(canonical(1800).as_bytes(), 30.0).unwrap();
        assert_eq!(t.len(), 1800);
        assert_eq!(t.duration(), 60.0);
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        assert_eq!(parse_trace(&buf[..], 30.0).unwrap(), t);
    }

    #[test]
    fn gaps_duplicates_and_junk() {
        let gap: String = canonical(10)
            .lines()
            .filter(|l| !l.starts_with("7,"))
            .map(|l| format!("{l}\n"))
            .collect();
        let err = parse_trace(gap.as_bytes(), 30.0).unwrap_err();
        assert!(err.to_string().contains("missing frame 7"), "{err}");

        let dup = canonical(3) + "2,0,90\n";
        assert!(parse_trace(dup.as_bytes(), 30.0).is_err());
        for bad in [
            "frame,theta_deg,phi_deg\n0,abc,90\n",
            "frame,theta_deg,phi_deg\n0,10\n",
            "frame,theta_deg,phi_deg\n0,10,190\n",
            "frame,theta_deg,phi_deg\n0,NaN,90\n",
            "frame,theta,phi\n0,10,90\n",
            "frame,theta_deg,phi_deg\n",
        ] {
            assert!(parse_trace(bad.as_bytes(), 30.0).is_err(), "{bad}");
        }
    }

    #[test]
    fn identity_quaternion_looks_at_frame_center() {
        for conv in [AxisConvention::Native, AxisConvention::YUp] {
            let p = quaternion_to_pog([1.0, 0.0, 0.0, 0.0], conv).unwrap();
            assert!((p.theta() - 180.0).abs() < 1e-9 && (p.phi() - 90.0).abs() < 1e-9);
        }
    }

    #[test]
    fn quaternion_turns() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        // 90° about +z in native axes moves the gaze from -y to +x
        let p = quaternion_to_pog([h, 0.0, 0.0, h], AxisConvention::Native).unwrap();
        assert!((p.theta() - 90.0).abs() < 1e-9 && (p.phi() - 90.0).abs() < 1e-9);
        // y-up: 90° about +y turns forward (+z) to +x, the viewer's right
        let p = quaternion_to_pog([h, 0.0, h, 0.0], AxisConvention::YUp).unwrap();
        assert!((p.theta() - 270.0).abs() < 1e-9 && (p.phi() - 90.0).abs() < 1e-9);
        // y-up: pitching up about -x raises the gaze towards the north pole
        let p = quaternion_to_pog([h, -h, 0.0, 0.0], AxisConvention::YUp).unwrap();
        assert!(p.phi() < 1e-6);
    }

    #[test]
    fn quaternion_csv() {
        let csv = "frame,qw,qx,qy,qz\n0,1,0,0,0\n1,1.0005,0,0,0\n";
        let t = parse_quaternion_trace(csv.as_bytes(), 30.0, AxisConvention::YUp).unwrap();
        assert_eq!(t.len(), 2);
        let bad = "frame,qw,qx,qy,qz\n0,1.01,0,0,0\n";
        let err = parse_quaternion_trace(bad.as_bytes(), 30.0, AxisConvention::YUp).unwrap_err();
        assert!(err.to_string().starts_with("line 2"), "{err}");
    }
}
