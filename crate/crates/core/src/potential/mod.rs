//! Discrete potential theory for simple random walk on `Z^d`, `d ≥ 3`.
//!
//! * [`green_srw`]: the Green's function `G(x)`, the expected number of visits
//!   to `x` by simple random walk started at the origin.
//! * [`capacity_exact`]: `Cap(K)` as the entry sum of the inverse of the Green
//!   matrix `[G(x − y)]_{x,y ∈ K}`.
//! * [`capacity_mc`]: `Cap(K)` from the lazy walk started on the outer
//!   boundary of a large ball. For the lazy walk the boundary sum of hitting
//!   probabilities converges to `Cap(K)/2`, so the estimate is doubled.

mod capacity;
mod green;

use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::LatticePoint;

pub use capacity::{
    ball_boundary, capacity_exact, capacity_mc, CapacityMethod, CapacityResult, CapacitySolver,
    MAX_EXACT_POINTS,
};
pub use green::{green_srw, GreenCache, MIN_GREEN_TOL};

/// A finite pattern `K ⊂ B_R(o)` with a distinguished anchor point.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
pub struct PatternSet {
    points: Vec<LatticePoint>,
    anchor: usize,
    radius: f64,
}

impl PatternSet {
    /// Validates `K`: nonempty, one dimension, no repeats, all points with
    /// `|x| < radius`, anchor a member.
    pub fn new(points: Vec<LatticePoint>, anchor: usize, radius: f64) -> Result<Self> {
        let d = points
            .first()
            .ok_or_else(|| Error::InvalidInput("pattern must be nonempty".into()))?
            .dim();
        if d == 0 || points.iter().any(|p| p.dim() != d) {
            return Err(Error::Dimension {
                expected: format!("d = {d}"),
                found: "mixed dimensions".into(),
            });
        }
        let mut seen = HashSet::new();
        for p in &points {
            if !seen.insert(p.clone()) {
                return Err(Error::InvalidInput(format!("duplicate pattern point {p}")));
            }
            if p.norm() >= radius {
                return Err(Error::InvalidInput(format!(
                    "pattern point {p} not in B_R(o) for R = {radius}"
                )));
            }
        }
        if anchor >= points.len() {
            return Err(Error::InvalidInput("anchor must be a pattern point".into()));
        }
        Ok(PatternSet {
            points,
            anchor,
            radius,
        })
    }

    /// Anchor at the first point, radius the smallest integer `R` with `K ⊂ B_R(o)`.
    pub fn from_points(points: Vec<LatticePoint>) -> Result<Self> {
        let r = points.iter().map(|p| p.norm()).fold(0.0f64, f64::max);
        Self::new(points, 0, r.floor() + 1.0)
    }

    /// Named presets: `origin`, `pair`, `plus-shape`, `cube2`.
    pub fn preset(name: &str, d: usize) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidInput("d must be positive".into()));
        }
        let pts = match name {
            "origin" => vec![LatticePoint::origin(d)],
            "pair" => vec![LatticePoint::origin(d), LatticePoint::axis(d, 0, 1)],
            "plus-shape" => {
                let mut v = vec![LatticePoint::origin(d)];
                for a in 0..d {
                    v.push(LatticePoint::axis(d, a, 1));
                    v.push(LatticePoint::axis(d, a, -1));
                }
                v
            }
            "cube2" => (0..1u64 << d)
                .map(|mask| LatticePoint::new((0..d).map(|a| ((mask >> a) & 1) as i64).collect()))
                .collect(),
            other => {
                return Err(Error::InvalidInput(format!(
                    "unknown pattern preset {other:?} (expected origin, pair, plus-shape, cube2)"
                )))
            }
        };
        Self::from_points(pts)
    }

    /// A preset name or an explicit list such as `0,0,0;1,0,0`.
    pub fn parse(spec: &str, d: usize) -> Result<Self> {
        if !spec.contains(',') && !spec.contains(';') && spec.parse::<i64>().is_err() {
            return Self::preset(spec.trim(), d);
        }
        let pts = spec
            .split(';')
            .filter(|s| !s.trim().is_empty())
            .map(|p| {
                let c = p
                    .split(',')
                    .map(|c| c.trim().parse::<i64>())
                    .collect::<std::result::Result<Vec<_>, _>>()
                    .map_err(|e| Error::InvalidInput(format!("bad coordinate in {p:?}: {e}")))?;
                if c.len() != d {
                    return Err(Error::Dimension {
                        expected: format!("d = {d}"),
                        found: format!("{} coordinates in {p:?}", c.len()),
                    });
                }
                Ok(LatticePoint::new(c))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_points(pts)
    }

    pub fn points(&self) -> &[LatticePoint] {
        &self.points
    }

    pub fn anchor(&self) -> &LatticePoint {
        &self.points[self.anchor]
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.points[0].dim()
    }

    /// The members selected by the bits of `mask`; `None` for the empty set.
    pub fn subset(&self, mask: u64) -> Option<PatternSet> {
        let pts: Vec<LatticePoint> = self
            .points
            .iter()
            .enumerate()
            .filter(|(i, _)| mask >> i & 1 == 1)
            .map(|(_, p)| p.clone())
            .collect();
        if pts.is_empty() {
            return None;
        }
        Some(PatternSet {
            points: pts,
            anchor: 0,
            radius: self.radius,
        })
    }

    /// `K + z`, with the radius enlarged as needed.
    pub fn shifted(&self, z: &LatticePoint) -> Result<PatternSet> {
        let pts: Vec<LatticePoint> = self.points.iter().map(|p| p.add(z)).collect();
        let r = pts.iter().map(|p| p.norm()).fold(0.0f64, f64::max);
        Self::new(pts, self.anchor, self.radius.max(r.floor() + 1.0))
    }

    /// A short identifier for output files, e.g. `(0,0,0);(1,0,0)`.
    pub fn id(&self) -> String {
        self.points
            .iter()
            .map(|p| p.to_string())
            .collect::<Vec<_>>()
            .join(";")
    }
}

impl fmt::Debug for PatternSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PatternSet{{{} R={}}}", self.id(), self.radius)
    }
}
