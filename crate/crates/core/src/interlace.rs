//! Random interlacements at a fixed level and at the random level `d·A·σ₁`.
//!
//! At level `u` the interlacement `I^u` satisfies `P[I^u ∩ K = ∅] = e^{−u·Cap(K)}`,
//! and inclusion–exclusion turns these vacancy probabilities into the full
//! local law
//!
//! ```text
//! P[I ∩ K = B] = Σ_{J ⊆ B} (−1)^{|J|} P[I ∩ ((K∖B) ∪ J) = ∅].
//! ```
//!
//! The mixed process `Ĩ` draws `u = d·A·σ₁` first, so each vacancy term becomes
//! the Laplace transform `E[exp(−d·A·σ₁·Cap(·))]`.

use rand::Rng;

use crate::brownian::ExitLaw;
use crate::error::{Error, Result};
use crate::lattice::WalkConfig;
use crate::potential::{CapacitySolver, PatternSet};

/// Largest pattern for which the `2^|K|` inclusion–exclusion terms are formed.
pub const MAX_MARGINAL_POINTS: usize = 12;

/// Negative round-off tolerated (and clamped to zero) in a marginal.
pub const NEGATIVE_TOL: f64 = 1e-10;

const LAPLACE_TOL: f64 = 1e-11;

/// The mixing law of the interlacement level: `u = level_multiplier · σ₁`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MixtureSpec {
    pub d: usize,
    pub a: f64,
    pub level_multiplier: f64,
}

impl MixtureSpec {
    pub fn new(d: usize, a: f64) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidInput("d must be positive".into()));
        }
        let level_multiplier = d as f64 * a;
        if !(level_multiplier > 0.0) || !level_multiplier.is_finite() {
            return Err(Error::InvalidInput(format!(
                "A must be positive and finite, got {a}"
            )));
        }
        Ok(MixtureSpec {
            d,
            a,
            level_multiplier,
        })
    }

    /// `A = L²/N^d` taken from a walk configuration.
    pub fn from_config(cfg: &WalkConfig) -> Result<Self> {
        Self::new(cfg.d, cfg.scaling())
    }

    /// `E[exp(−d·A·σ₁·c)]` for a capacity value `c`.
    pub fn mixed_vacancy(&self, cap: f64) -> Result<f64> {
        let law = ExitLaw::new(self.d);
        let lambda = self.level_multiplier * cap;
        let floor = lambda * law.t_floor * law.floor_mass_bound();
        law.laplace(lambda, LAPLACE_TOL.max(4.0 * floor))
    }
}

fn check_pattern(k: &PatternSet) -> Result<()> {
    if k.len() > MAX_MARGINAL_POINTS {
        return Err(Error::InvalidInput(format!(
            "|K| = {} exceeds the inclusion–exclusion bound {MAX_MARGINAL_POINTS}",
            k.len()
        )));
    }
    Ok(())
}

fn check_subset(k: &PatternSet, b: u64) -> Result<()> {
    if b >> k.len() != 0 {
        return Err(Error::InvalidInput(format!(
            "subset mask {b:#b} is not contained in a pattern of {} points",
            k.len()
        )));
    }
    Ok(())
}

/// `Cap` of every subset of `K`, indexed by bitmask (entry 0 is the empty set).
pub fn subset_capacities(k: &PatternSet) -> Result<Vec<f64>> {
    check_pattern(k)?;
    let mut solver = CapacitySolver::new();
    (0..1u64 << k.len())
        .map(|mask| match k.subset(mask) {
            None => Ok(0.0),
            Some(s) => Ok(solver.capacity(s.points())?.value),
        })
        .collect()
}

/// `P[I^u ∩ K = ∅] = exp(−u·Cap(K))`.
pub fn vacancy(u: f64, k: &PatternSet) -> Result<f64> {
    if !(u >= 0.0) {
        return Err(Error::InvalidInput(format!("level u must be ≥ 0, got {u}")));
    }
    if u == 0.0 {
        return Ok(1.0);
    }
    let cap = CapacitySolver::new().capacity(k.points())?.value;
    Ok((-u * cap).exp())
}

/// `E[exp(−d·A·σ₁·Cap(K))]`, the limit in the avoidance theorem.
pub fn rhs_theorem(k: &PatternSet, spec: &MixtureSpec) -> Result<f64> {
    let cap = CapacitySolver::new().capacity(k.points())?.value;
    spec.mixed_vacancy(cap)
}

/// Inclusion–exclusion over `J ⊆ B` given vacancy probabilities per subset.
fn assemble(vac: &[f64], full: u64, b: u64) -> Result<f64> {
    let outside = full & !b;
    let mut total = 0.0;
    // enumerate J ⊆ B, including J = B and J = ∅
    let mut j = b;
    loop {
        let sign = if j.count_ones() % 2 == 0 { 1.0 } else { -1.0 };
        total += sign * vac[(outside | j) as usize];
        if j == 0 {
            break;
        }
        j = (j - 1) & b;
    }
    if total < -NEGATIVE_TOL {
        return Err(Error::Accuracy(format!(
            "marginal for subset {b:#b} is {total:e}, below the round-off tolerance"
        )));
    }
    Ok(total.max(0.0))
}

/// The law of `Ĩ ∩ K` as a pmf indexed by the bitmask of `B`.
///
/// Small negative values from cancellation (above `−1e−10`) are clamped to 0.
pub fn pattern_law(k: &PatternSet, spec: &MixtureSpec) -> Result<Vec<f64>> {
    let caps = subset_capacities(k)?;
    let vac = caps
        .iter()
        .map(|&c| {
            if c == 0.0 {
                Ok(1.0)
            } else {
                spec.mixed_vacancy(c)
            }
        })
        .collect::<Result<Vec<_>>>()?;
    let full = (1u64 << k.len()) - 1;
    (0..=full).map(|b| assemble(&vac, full, b)).collect()
}

/// The law of `I^u ∩ K` at a fixed level `u`.
pub fn pattern_law_fixed(u: f64, k: &PatternSet) -> Result<Vec<f64>> {
    if !(u >= 0.0) {
        return Err(Error::InvalidInput(format!("level u must be ≥ 0, got {u}")));
    }
    let vac: Vec<f64> = subset_capacities(k)?
        .iter()
        .map(|c| (-u * c).exp())
        .collect();
    let full = (1u64 << k.len()) - 1;
    (0..=full).map(|b| assemble(&vac, full, b)).collect()
}

/// `P[Ĩ ∩ K = B]` for the subset of `K` with bitmask `b`.
pub fn marginal_tilde(k: &PatternSet, b: u64, spec: &MixtureSpec) -> Result<f64> {
    check_pattern(k)?;
    check_subset(k, b)?;
    let full = (1u64 << k.len()) - 1;
    let outside = full & !b;
    let mut solver = CapacitySolver::new();
    let mut vac = vec![f64::NAN; 1 << k.len()];
    let mut j = b;
    loop {
        let s = outside | j;
        vac[s as usize] = match k.subset(s) {
            None => 1.0,
            Some(sub) => spec.mixed_vacancy(solver.capacity(sub.points())?.value)?,
        };
        if j == 0 {
            break;
        }
        j = (j - 1) & b;
    }
    assemble(&vac, full, b)
}

/// Draws a subset of `K` (as a bitmask) from a pmf such as [`pattern_law`].
pub fn sample_from_law<R: Rng + ?Sized>(law: &[f64], rng: &mut R) -> u64 {
    let total: f64 = law.iter().sum();
    let u = rng.gen::<f64>() * total;
    let mut acc = 0.0;
    for (b, &p) in law.iter().enumerate() {
        acc += p;
        if u < acc {
            return b as u64;
        }
    }
    // round-off: fall back to the last cell with positive mass
    law.iter().rposition(|&p| p > 0.0).unwrap_or(0) as u64
}

/// One draw of `Ĩ ∩ K` as a bitmask.
pub fn sample_pattern<R: Rng + ?Sized>(
    k: &PatternSet,
    spec: &MixtureSpec,
    rng: &mut R,
) -> Result<u64> {
    Ok(sample_from_law(&pattern_law(k, spec)?, rng))
}
