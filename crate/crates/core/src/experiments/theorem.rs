//! Estimators for the avoidance probability and the local pattern law.

use std::collections::HashSet;

use serde::Serialize;

use super::run_indexed;
use crate::error::{Error, Result};
use crate::interlace::{pattern_law, rhs_theorem, MixtureSpec};
use crate::lattice::{project, translate, LatticePoint, TorusPoint, WalkConfig};
use crate::potential::PatternSet;
use crate::rng::{stream, Domain};
use crate::stats::Estimate;
use crate::walk::{StoppedWalk, TorusTarget};

/// Absolute tolerance on `|lhs − rhs|` used for the pass/fail verdict.
pub const BIAS_TOL: f64 = 0.05;

/// Largest pattern whose full visited-subset law is estimated.
pub const MAX_EMPIRICAL_POINTS: usize = 4;

/// Lattice points of the open ball `{ |y| < r }`.
fn ball(d: usize, r: f64) -> Vec<LatticePoint> {
    let reach = r.ceil() as i64;
    let r2 = r * r;
    let mut out = Vec::new();
    let mut c = vec![-reach; d];
    loop {
        if (c.iter().map(|v| v * v).sum::<i64>() as f64) < r2 {
            out.push(LatticePoint::new(c.clone()));
        }
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

/// Checks that `x + φ(B_R(o))` misses `φ(B_g(o))`, `g = ⌊N^ζ⌋`, `R` the
/// pattern radius.
pub fn check_separation(cfg: &WalkConfig, k: &PatternSet, x: &TorusPoint) -> Result<()> {
    if k.dim() != cfg.d || x.dim() != cfg.d || x.side() != cfg.torus_side {
        return Err(Error::Dimension {
            expected: format!("d = {}, N = {}", cfg.d, cfg.torus_side),
            found: format!("pattern d = {}, translation {x:?}", k.dim()),
        });
    }
    let g = cfg.separation_radius();
    let side = cfg.torus_side;
    let near: HashSet<TorusPoint> = ball(cfg.d, g as f64)
        .iter()
        .map(|p| project(p, side))
        .collect();
    for p in ball(cfg.d, k.radius()) {
        if near.contains(&translate(&project(&p, side), x)?) {
            return Err(Error::Separation { g });
        }
    }
    Ok(())
}

/// Diagonal translations `(j, …, j)` that satisfy the separation hypothesis,
/// from the far corner inwards.
pub fn translation_sweep(cfg: &WalkConfig, k: &PatternSet) -> Vec<TorusPoint> {
    let side = cfg.torus_side;
    (0..=(side / 2) as i64)
        .rev()
        .map(|j| project(&LatticePoint::new(vec![j; cfg.d]), side))
        .filter(|x| check_separation(cfg, k, x).is_ok())
        .collect()
}

/// The hit mask of `K + x` for each of `runs` stopped walks, in run order.
pub fn pattern_masks(
    cfg: &WalkConfig,
    k: &PatternSet,
    x: &TorusPoint,
    runs: u64,
) -> Result<Vec<u32>> {
    cfg.validate()?;
    if runs == 0 {
        return Err(Error::InvalidInput("runs must be positive".into()));
    }
    check_separation(cfg, k, x)?;
    let target = TorusTarget::new(k, x)?;
    run_indexed(
        cfg.workers,
        runs,
        || StoppedWalk::new(cfg, Some(target.clone())),
        |walk, i| {
            Ok(walk
                .run(&mut stream(cfg.seed, Domain::StoppedWalk, i))
                .hit_mask)
        },
    )
}

/// Fraction of runs whose projected trajectory before `T` avoids `x + φ(K)`.
pub fn estimate_lhs(
    cfg: &WalkConfig,
    k: &PatternSet,
    x: &TorusPoint,
    runs: u64,
) -> Result<Estimate> {
    let masks = pattern_masks(cfg, k, x, runs)?;
    let avoid = masks.iter().filter(|&&m| m == 0).count();
    Ok(Estimate::proportion(avoid, masks.len(), cfg.seed))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VerifyReport {
    pub lhs: Estimate,
    pub avoid_count: u64,
    pub rhs: f64,
    pub gap: f64,
    /// `gap / std_error`; when the empirical standard error vanishes the
    /// binomial error at `p = rhs` is used instead.
    pub z: f64,
    pub bias_tol: f64,
    pub within_bias: bool,
    /// `|z| ≤ 3`
    pub within_stat: bool,
}

/// Compares the estimated avoidance probability with its limit.
pub fn verify_theorem(
    cfg: &WalkConfig,
    k: &PatternSet,
    x: &TorusPoint,
    runs: u64,
) -> Result<VerifyReport> {
    let lhs = estimate_lhs(cfg, k, x, runs)?;
    let rhs = rhs_theorem(k, &MixtureSpec::from_config(cfg)?)?;
    let gap = lhs.mean - rhs;
    let se = if lhs.std_error > 0.0 {
        lhs.std_error
    } else {
        (rhs * (1.0 - rhs) / runs as f64).sqrt()
    };
    let z = gap / se;
    Ok(VerifyReport {
        avoid_count: (lhs.mean * runs as f64).round() as u64,
        lhs,
        rhs,
        gap,
        z,
        bias_tol: BIAS_TOL,
        within_bias: gap.abs() <= BIAS_TOL,
        within_stat: z.abs() <= 3.0,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MarginalReport {
    /// Runs whose visited subset of `K` has bitmask `B`, indexed by `B`.
    pub counts: Vec<u64>,
    pub runs: u64,
    pub empirical: Vec<Estimate>,
    /// The limiting law of the mixed interlacement, indexed by `B`.
    pub exact: Vec<f64>,
}

/// Empirical law of the visited subset `ω_N ∩ (x + φ(K))` next to its limit.
pub fn empirical_marginals(
    cfg: &WalkConfig,
    k: &PatternSet,
    x: &TorusPoint,
    runs: u64,
) -> Result<MarginalReport> {
    if k.len() > MAX_EMPIRICAL_POINTS {
        return Err(Error::InvalidInput(format!(
            "empirical marginals support |K| ≤ {MAX_EMPIRICAL_POINTS}, got {}",
            k.len()
        )));
    }
    let exact = pattern_law(k, &MixtureSpec::from_config(cfg)?)?;
    let masks = pattern_masks(cfg, k, x, runs)?;
    let mut counts = vec![0u64; 1 << k.len()];
    for m in masks {
        counts[m as usize] += 1;
    }
    let empirical = counts
        .iter()
        .map(|&c| Estimate::proportion(c as usize, runs as usize, cfg.seed))
        .collect();
    Ok(MarginalReport {
        counts,
        runs,
        empirical,
        exact,
    })
}
