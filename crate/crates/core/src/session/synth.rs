//! Seeded synthetic head-movement traces.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::SessionTrace;
use crate::error::{Error, Result};
use crate::geometry::{cartesian_to_spherical, CartesianVector};

/// A walk along great circles at constant angular speed, with random heading
/// changes and pauses.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RandomWalk {
    /// Seconds.
    pub duration_s: f64,
    pub fps: f64,
    /// Degrees per second while moving.
    pub speed_deg_s: f64,
    /// Chance that the gaze holds still on a given frame.
    pub dwell_probability: f64,
    /// Standard deviation of the per-frame heading change, degrees.
    pub heading_jitter_deg: f64,
    pub seed: u64,
}

impl Default for RandomWalk {
    fn default() -> Self {
        Self {
            duration_s: 60.0,
            fps: 30.0,
            speed_deg_s: 30.0,
            dwell_probability: 0.2,
            heading_jitter_deg: 10.0,
            seed: 0,
        }
    }
}

fn unit(v: [f64; 3]) -> [f64; 3] {
    let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    v.map(|c| c / n)
}

fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn combine(a: [f64; 3], ka: f64, b: [f64; 3], kb: f64) -> [f64; 3] {
    [
        ka * a[0] + kb * b[0],
        ka * a[1] + kb * b[1],
        ka * a[2] + kb * b[2],
    ]
}

impl RandomWalk {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    fn validate(&self) -> Result<usize> {
        let frames = (self.duration_s * self.fps).round();
        let ok = self.fps > 0.0
            && self.fps.is_finite()
            && frames >= 1.0
            && self.speed_deg_s >= 0.0
            && self.speed_deg_s.is_finite()
            && (0.0..=1.0).contains(&self.dwell_probability)
            && self.heading_jitter_deg >= 0.0
            && self.heading_jitter_deg.is_finite();
        if ok {
            Ok(frames as usize)
        } else {
            Err(Error::invalid(format!("invalid random walk {self:?}")))
        }
    }

    /// Starts at a uniformly random direction with a uniformly random heading.
    pub fn generate(&self) -> Result<SessionTrace> {
        let frames = self.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let jitter = Normal::new(0.0, self.heading_jitter_deg.to_radians())
            .map_err(|e| Error::invalid(e.to_string()))?;
        let step = (self.speed_deg_s / self.fps).to_radians();

        let z: f64 = rng.gen_range(-1.0..1.0);
        let lon: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
        let r = (1.0 - z * z).sqrt();
        let mut pos = [r * lon.sin(), r * lon.cos(), z];
        // any vector not parallel to pos, projected onto the tangent plane
        let helper = if pos[2].abs() < 0.9 {
            [0.0, 0.0, 1.0]
        } else {
            [1.0, 0.0, 0.0]
        };
        let east = unit(cross(helper, pos));
        let north = cross(pos, east);
        let h: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
        let mut heading = combine(east, h.cos(), north, h.sin());

        let mut samples = Vec::with_capacity(frames);
        for _ in 0..frames {
            samples.push(cartesian_to_spherical(CartesianVector::normalized(
                pos[0], pos[1], pos[2],
            )?)?);
            if rng.gen::<f64>() < self.dwell_probability {
                continue;
            }
            let (s, c) = step.sin_cos();
            let next = unit(combine(pos, c, heading, s));
            heading = combine(heading, c, pos, -s);
            pos = next;
            let turn: f64 = jitter.sample(&mut rng);
            let side = cross(pos, heading);
            heading = unit(combine(heading, turn.cos(), side, turn.sin()));
            // keep the heading tangent despite rounding
            let d = heading[0] * pos[0] + heading[1] * pos[1] + heading[2] * pos[2];
            heading = unit(combine(heading, 1.0, pos, -d));
        }
        SessionTrace::new(self.fps, samples)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::angular_distance;

    #[test]
    fn seeded_and_sized() {
        let w = RandomWalk::default().with_seed(7);
        let a = w.generate().unwrap();
        assert_eq!(a.len(), 1800);
        assert_eq!(a, w.generate().unwrap());
        assert_ne!(a, w.with_seed(8).generate().unwrap());
    }

    #[test]
    fn moves_at_the_configured_speed() {
        let w = RandomWalk {
            dwell_probability: 0.0,
            speed_deg_s: 45.0,
            ..RandomWalk::default()
        };
        let t = w.generate().unwrap();
        for pair in t.samples().windows(2) {
            let d = angular_distance(pair[0], pair[1]);
            assert!((d - 1.5).abs() < 1e-6, "{d}");
        }
    }

    #[test]
    fn dwelling_walk_stands_still() {
        let w = RandomWalk {
            dwell_probability: 1.0,
            ..RandomWalk::default()
        };
        let t = w.generate().unwrap();
        assert!(t.samples().iter().all(|&p| p == t.pog(0)));
        assert!(RandomWalk { fps: 0.0, ..w }.generate().is_err());
    }
}
