use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::green::GreenCache;
use super::PatternSet;
use crate::error::{Error, Result};
use crate::lattice::LatticePoint;
use crate::rng::{stream, Domain};
use crate::walk::StepLaw;

/// Default bound on `|K|` for the Green-matrix solve.
pub const MAX_EXACT_POINTS: usize = 24;

const GREEN_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CapacityMethod {
    ExactGreen,
    MonteCarlo,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CapacityResult {
    pub value: f64,
    pub method: CapacityMethod,
    /// Zero for the exact method.
    pub std_error: f64,
    /// Ball radius used by the Monte Carlo estimator.
    pub r_used: Option<f64>,
    /// Spectral condition number of the Green matrix.
    pub condition: Option<f64>,
}

/// Exact capacities sharing one Green's-function cache.
#[derive(Clone, Debug)]
pub struct CapacitySolver {
    green: GreenCache,
    max_points: usize,
}

impl CapacitySolver {
    pub fn new() -> Self {
        CapacitySolver {
            green: GreenCache::new(GREEN_TOL).expect("valid tolerance"),
            max_points: MAX_EXACT_POINTS,
        }
    }

    pub fn with_max_points(mut self, max_points: usize) -> Self {
        self.max_points = max_points;
        self
    }

    /// `Cap(K) = 1ᵀ G_K^{-1} 1` for the Green matrix `G_K = [G(x − y)]`.
    pub fn capacity(&mut self, points: &[LatticePoint]) -> Result<CapacityResult> {
        let k = points.len();
        if k == 0 {
            return Err(Error::InvalidInput("capacity of the empty set".into()));
        }
        if k > self.max_points {
            return Err(Error::InvalidInput(format!(
                "|K| = {k} exceeds the exact-capacity bound {}",
                self.max_points
            )));
        }
        let d = points[0].dim();
        if d < 3 {
            return Err(Error::InvalidInput(format!(
                "capacity needs d ≥ 3, got {d}"
            )));
        }
        let mut m = DMatrix::<f64>::zeros(k, k);
        for i in 0..k {
            for j in i..k {
                if i != j && points[i] == points[j] {
                    return Err(Error::InvalidInput(format!(
                        "duplicate point {} makes the Green matrix singular",
                        points[i]
                    )));
                }
                let g = self.green.get(points[i].sub(&points[j]).coords())?;
                m[(i, j)] = g;
                m[(j, i)] = g;
            }
        }
        let eig = m.clone().symmetric_eigenvalues();
        let (lo, hi) = eig.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), &e| {
            (lo.min(e), hi.max(e))
        });
        let chol = m.cholesky().ok_or_else(|| {
            Error::IllConditioned(format!(
                "Green matrix not positive definite (λ_min = {lo:e})"
            ))
        })?;
        let v = chol.solve(&DVector::from_element(k, 1.0));
        Ok(CapacityResult {
            value: v.sum(),
            method: CapacityMethod::ExactGreen,
            std_error: 0.0,
            r_used: None,
            condition: Some(hi / lo),
        })
    }
}

impl Default for CapacitySolver {
    fn default() -> Self {
        Self::new()
    }
}

pub fn capacity_exact(k: &PatternSet) -> Result<CapacityResult> {
    CapacitySolver::new().capacity(k.points())
}

/// `∂B_r = { y ∉ B_r : y has a neighbour in B_r }`, `B_r = { |y| < r }`,
/// in lexicographic order.
pub fn ball_boundary(d: usize, r: f64) -> Vec<LatticePoint> {
    let r2 = r * r;
    let reach = r.ceil() as i64 + 1;
    let mut out = Vec::new();
    let mut c = vec![-reach; d];
    loop {
        let n2: i64 = c.iter().map(|v| v * v).sum();
        if n2 as f64 >= r2 {
            let inner = (0..d).any(|a| {
                [-1i64, 1].iter().any(|s| {
                    let m = n2 + 2 * s * c[a] + 1;
                    (m as f64) < r2
                })
            });
            if inner {
                out.push(LatticePoint::new(c.clone()));
            }
        }
        // odometer increment, last coordinate fastest
        let mut a = d;
        loop {
            if a == 0 {
                return out;
            }
            a -= 1;
            if c[a] < reach {
                c[a] += 1;
                break;
            }
            c[a] = -reach;
        }
    }
}

/// Lazy walk from `start` until it enters `k` (hit) or leaves `B_r` (miss),
/// looking only at times `t ≥ 1`.
fn hits_before_exit<R: rand::RngCore>(
    law: &StepLaw,
    start: &[i64],
    k: &[Vec<i64>],
    k_r2: i64,
    r2: f64,
    rng: &mut R,
) -> bool {
    let mut pos = start.to_vec();
    let mut n2: i64 = pos.iter().map(|v| v * v).sum();
    loop {
        if let Some((axis, sign)) = law.sample(rng) {
            n2 += 2 * sign * pos[axis] + 1;
            pos[axis] += sign;
        }
        if n2 < k_r2 && k.contains(&pos) {
            return true;
        }
        if n2 as f64 >= r2 {
            return false;
        }
    }
}

/// Monte Carlo capacity from `samples` lazy walks per boundary point of
/// `B_r`. Runs in the current rayon pool; boundary point `i` uses stream `i`.
pub fn capacity_mc(k: &PatternSet, r: f64, samples: usize, seed: u64) -> Result<CapacityResult> {
    let d = k.dim();
    if d < 3 {
        return Err(Error::InvalidInput(format!(
            "capacity needs d ≥ 3, got {d}"
        )));
    }
    if samples == 0 {
        return Err(Error::InvalidInput(
            "samples per boundary point must be positive".into(),
        ));
    }
    if !(r > 2.0 * k.radius()) {
        return Err(Error::InvalidInput(format!(
            "ball radius r = {r} must exceed twice the pattern radius {}",
            k.radius()
        )));
    }
    let law = StepLaw::new(d);
    let pts: Vec<Vec<i64>> = k.points().iter().map(|p| p.coords().to_vec()).collect();
    let k_r2 = pts
        .iter()
        .map(|p| p.iter().map(|v| v * v).sum::<i64>())
        .max()
        .unwrap_or(0)
        + 1;
    let boundary = ball_boundary(d, r);
    let hits: Vec<u64> = boundary
        .par_iter()
        .enumerate()
        .map(|(i, y)| {
            let mut rng = stream(seed, Domain::Capacity, i as u64);
            (0..samples)
                .filter(|_| hits_before_exit(&law, y.coords(), &pts, k_r2, r * r, &mut rng))
                .count() as u64
        })
        .collect();
    let w = samples as f64;
    let (sum, var) = hits.iter().fold((0.0, 0.0), |(s, v), &h| {
        let p = h as f64 / w;
        (s + p, v + p * (1.0 - p) / w)
    });
    Ok(CapacityResult {
        value: 2.0 * sum,
        method: CapacityMethod::MonteCarlo,
        std_error: 2.0 * var.sqrt(),
        r_used: Some(r),
        condition: None,
    })
}
