use serde::{Deserialize, Serialize};

use super::Trajectory;
use crate::error::{Error, Result};

/// Ground-truth directed run: constant velocity added to the steps
/// `start+1 ..= start+duration`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DirectedSegmentSpec {
    /// Index of the sample where the run begins.
    pub start: usize,
    /// Number of driven steps.
    pub duration: usize,
    /// Drift velocity (nm/s).
    pub velocity: [f64; 3],
}

impl DirectedSegmentSpec {
    pub fn end(&self) -> usize {
        self.start + self.duration
    }
}

/// Adds `v·dt` to every step inside each segment. Increments outside the
/// segments are untouched, so the accumulated drift carries over to later
/// samples.
pub fn inject_directed(traj: &Trajectory, specs: &[DirectedSegmentSpec]) -> Result<Trajectory> {
    let mut sorted: Vec<DirectedSegmentSpec> = specs.to_vec();
    sorted.sort_by_key(|s| s.start);
    for s in &sorted {
        if s.duration == 0 {
            return Err(Error::invalid("directed segment duration must be >= 1"));
        }
        if s.velocity.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("directed segment velocity must be finite"));
        }
        if s.end() >= traj.len() {
            return Err(Error::invalid(format!(
                "directed segment {}..{} exceeds trajectory of {} samples",
                s.start,
                s.end(),
                traj.len()
            )));
        }
    }
    for w in sorted.windows(2) {
        if w[1].start < w[0].end() {
            return Err(Error::Overlap(format!(
                "segment starting at {} overlaps segment {}..{}",
                w[1].start,
                w[0].start,
                w[0].end()
            )));
        }
    }

    let mut out = traj.clone();
    let mut offset = [0.0f64; 3];
    let mut seg = sorted.iter().peekable();
    for i in 1..out.points.len() {
        while seg.peek().is_some_and(|s| s.end() < i) {
            seg.next();
        }
        if let Some(s) = seg.peek() {
            if i > s.start && i <= s.end() {
                for (o, v) in offset.iter_mut().zip(s.velocity) {
                    *o += v * traj.dt;
                }
            }
        }
        for (c, o) in out.points[i].iter_mut().zip(offset) {
            *c += o;
        }
    }
    if !specs.is_empty() {
        out.set_meta("directed_segments", specs.len());
    }
    Ok(out)
}
