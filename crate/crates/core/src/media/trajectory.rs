use std::collections::BTreeMap;
use std::fmt::Display;

use crate::error::{ensure_positive, Error, Result};

/// Position in nm.
pub type Point3 = [f64; 3];

/// Uniformly sampled 3D position series, the exchange object between the
/// simulators and the analyses.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    /// Sample period (s).
    pub dt: f64,
    /// Time of the first sample (s).
    pub t0: f64,
    /// Positions (nm).
    pub points: Vec<Point3>,
    /// Free-form provenance tags (seed, medium, temperature, ...).
    pub meta: BTreeMap<String, String>,
}

impl Trajectory {
    pub fn new(dt: f64, t0: f64, points: Vec<Point3>) -> Result<Self> {
        ensure_positive("dt", dt)?;
        if !t0.is_finite() {
            return Err(Error::invalid("t0 must be finite"));
        }
        if points.is_empty() {
            return Err(Error::invalid("trajectory must contain at least one point"));
        }
        if let Some(i) = points.iter().position(|p| p.iter().any(|c| !c.is_finite())) {
            return Err(Error::invalid(format!("non-finite coordinate at sample {i}")));
        }
        Ok(Self {
            dt,
            t0,
            points,
            meta: BTreeMap::new(),
        })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Number of steps, `len − 1`.
    pub fn n_steps(&self) -> usize {
        self.points.len().saturating_sub(1)
    }

    pub fn time(&self, i: usize) -> f64 {
        self.t0 + i as f64 * self.dt
    }

    pub fn duration(&self) -> f64 {
        self.n_steps() as f64 * self.dt
    }

    pub fn set_meta(&mut self, key: &str, value: impl Display) {
        self.meta.insert(key.to_string(), value.to_string());
    }

    pub fn meta_f64(&self, key: &str) -> Option<f64> {
        self.meta.get(key).and_then(|v| v.parse().ok())
    }

    /// Coordinate series of one axis (0 = x, 1 = y, 2 = z).
    pub fn axis(&self, axis: usize) -> Vec<f64> {
        self.points.iter().map(|p| p[axis]).collect()
    }

    pub fn increments(&self, axis: usize) -> Vec<f64> {
        self.points.windows(2).map(|w| w[1][axis] - w[0][axis]).collect()
    }

    /// Requires at least two samples, as every analysis does.
    pub fn require_analysable(&self) -> Result<()> {
        if self.points.len() < 2 {
            return Err(Error::NotEnoughData(
                "trajectory needs at least 2 samples".into(),
            ));
        }
        Ok(())
    }

    /// Linearly interpolated position at time `t`; clamps to the end points.
    pub fn position_at(&self, t: f64) -> Point3 {
        let u = (t - self.t0) / self.dt;
        let last = self.points.len() - 1;
        if u <= 0.0 || last == 0 {
            return self.points[0];
        }
        if u >= last as f64 {
            return self.points[last];
        }
        let i = u.floor() as usize;
        let f = u - i as f64;
        let (a, b) = (self.points[i], self.points[i + 1]);
        [
            a[0] + f * (b[0] - a[0]),
            a[1] + f * (b[1] - a[1]),
            a[2] + f * (b[2] - a[2]),
        ]
    }

    /// Resamples onto a new uniform grid by linear interpolation.
    pub fn resample(&self, dt: f64) -> Result<Trajectory> {
        ensure_positive("dt", dt)?;
        let n = (self.duration() / dt + 1e-9).floor() as usize + 1;
        let points = (0..n)
            .map(|i| self.position_at(self.t0 + i as f64 * dt))
            .collect();
        let mut out = Trajectory::new(dt, self.t0, points)?;
        out.meta = self.meta.clone();
        Ok(out)
    }

    /// Samples `start..=end` as a new trajectory.
    pub fn slice(&self, start: usize, end: usize) -> Result<Trajectory> {
        if start > end || end >= self.points.len() {
            return Err(Error::invalid(format!(
                "slice {start}..={end} out of bounds for {} samples",
                self.points.len()
            )));
        }
        let mut out = Trajectory::new(self.dt, self.time(start), self.points[start..=end].to_vec())?;
        out.meta = self.meta.clone();
        Ok(out)
    }

    pub fn map_points(&self, f: impl Fn(Point3) -> Point3) -> Trajectory {
        Trajectory {
            dt: self.dt,
            t0: self.t0,
            points: self.points.iter().map(|&p| f(p)).collect(),
            meta: self.meta.clone(),
        }
    }

    pub fn time_reversed(&self) -> Trajectory {
        let mut points = self.points.clone();
        points.reverse();
        Trajectory {
            dt: self.dt,
            t0: self.t0,
            points,
            meta: self.meta.clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation() {
        assert!(Trajectory::new(0.1, 0.0, vec![]).is_err());
        assert!(Trajectory::new(0.0, 0.0, vec![[0.0; 3]]).is_err());
        assert!(Trajectory::new(0.1, 0.0, vec![[f64::NAN, 0.0, 0.0]]).is_err());
        let single = Trajectory::new(0.1, 0.0, vec![[0.0; 3]]).unwrap();
        assert!(single.require_analysable().is_err());
    }

    #[test]
    fn interpolation_and_resampling() {
        let t = Trajectory::new(1.0, 0.0, vec![[0.0; 3], [2.0, 4.0, 6.0]]).unwrap();
        assert_eq!(t.position_at(0.5), [1.0, 2.0, 3.0]);
        assert_eq!(t.position_at(-1.0), [0.0; 3]);
        assert_eq!(t.position_at(9.0), [2.0, 4.0, 6.0]);
        let r = t.resample(0.25).unwrap();
        assert_eq!(r.len(), 5);
        assert_eq!(r.points[1], [0.5, 1.0, 1.5]);
    }
}
