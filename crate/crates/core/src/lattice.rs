//! Integer lattice and discrete torus geometry.
//!
//! Points of `Z^d` are [`LatticePoint`]s. The torus `T_N` is represented by
//! the box `[-N/2, N/2)^d ∩ Z^d`; [`project`] is the coordinate-wise reduction
//! into that box and [`enumerate_index`] is the row-major enumeration that
//! turns a torus point into a bucket number in `0..N^d`.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest admissible half box side `L`.
pub const MAX_HALF_SIDE: u64 = 1 << 20;

/// Largest admissible torus volume `N^d` (the hash table size).
pub const MAX_TORUS_VOLUME: u64 = 1 << 32;

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LatticePoint(Vec<i64>);

impl LatticePoint {
    pub fn new(coords: Vec<i64>) -> Self {
        LatticePoint(coords)
    }

    pub fn origin(d: usize) -> Self {
        LatticePoint(vec![0; d])
    }

    /// The `axis`-th unit vector scaled by `scale`.
    pub fn axis(d: usize, axis: usize, scale: i64) -> Self {
        let mut c = vec![0; d];
        c[axis] = scale;
        LatticePoint(c)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[i64] {
        &self.0
    }

    pub fn into_coords(self) -> Vec<i64> {
        self.0
    }

    pub fn norm_sq(&self) -> i64 {
        self.0.iter().map(|c| c * c).sum()
    }

    pub fn norm(&self) -> f64 {
        (self.norm_sq() as f64).sqrt()
    }

    pub fn add(&self, other: &LatticePoint) -> LatticePoint {
        debug_assert_eq!(self.dim(), other.dim());
        LatticePoint(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    pub fn sub(&self, other: &LatticePoint) -> LatticePoint {
        debug_assert_eq!(self.dim(), other.dim());
        LatticePoint(self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect())
    }

    /// L1 distance; consecutive walk positions are at distance 0 or 1.
    pub fn l1_distance(&self, other: &LatticePoint) -> i64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b).abs())
            .sum()
    }

    /// True when every coordinate lies strictly inside `(-half_side, half_side)`.
    pub fn in_open_box(&self, half_side: i64) -> bool {
        self.0.iter().all(|c| c.abs() < half_side)
    }
}

impl fmt::Debug for LatticePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.0)
    }
}

impl fmt::Display for LatticePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|c| c.to_string()).collect();
        write!(f, "({})", parts.join(","))
    }
}

impl From<Vec<i64>> for LatticePoint {
    fn from(v: Vec<i64>) -> Self {
        LatticePoint(v)
    }
}

/// A vertex of `T_N`, stored as its representative in `[-N/2, N/2)^d`.
#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TorusPoint {
    coords: Vec<i64>,
    side: u64,
}

impl TorusPoint {
    /// Checks that every coordinate is already a canonical representative.
    pub fn new(coords: Vec<i64>, side: u64) -> Result<Self> {
        if side == 0 {
            return Err(Error::InvalidInput("torus side must be positive".into()));
        }
        let lo = -((side / 2) as i64);
        let hi = side as i64 + lo;
        if let Some(c) = coords.iter().find(|&&c| c < lo || c >= hi) {
            return Err(Error::InvalidInput(format!(
                "coordinate {c} outside [{lo}, {hi}) for N = {side}"
            )));
        }
        Ok(TorusPoint { coords, side })
    }

    pub fn origin(d: usize, side: u64) -> Self {
        TorusPoint {
            coords: vec![0; d],
            side,
        }
    }

    /// The vertex farthest from the origin: every coordinate `⌊N/2⌋`, projected.
    pub fn far_corner(d: usize, side: u64) -> Self {
        project(&LatticePoint(vec![(side / 2) as i64; d]), side)
    }

    pub fn coords(&self) -> &[i64] {
        &self.coords
    }

    pub fn side(&self) -> u64 {
        self.side
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn negate(&self) -> TorusPoint {
        project(
            &LatticePoint(self.coords.iter().map(|c| -c).collect()),
            self.side,
        )
    }

    /// The representative viewed as a point of `Z^d`.
    pub fn lift(&self) -> LatticePoint {
        LatticePoint(self.coords.clone())
    }
}

impl fmt::Debug for TorusPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?} mod {}", self.coords, self.side)
    }
}

impl fmt::Display for TorusPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.coords.iter().map(|c| c.to_string()).collect();
        write!(f, "({})", parts.join(","))
    }
}

/// Canonical representative of `c mod side` in `[-side/2, side/2)`.
#[inline]
pub fn reduce(c: i64, side: u64) -> i64 {
    let n = side as i64;
    let r = c.rem_euclid(n);
    // ceil(N/2): residues at or above it move to the negative half
    if r >= n - n / 2 {
        r - n
    } else {
        r
    }
}

/// The torus projection `φ_N`.
pub fn project(x: &LatticePoint, side: u64) -> TorusPoint {
    assert!(side >= 1, "torus side must be positive");
    TorusPoint {
        coords: x.0.iter().map(|&c| reduce(c, side)).collect(),
        side,
    }
}

/// Translation of the torus: `project(x + y)`.
pub fn translate(y: &TorusPoint, x: &TorusPoint) -> Result<TorusPoint> {
    if y.side != x.side || y.dim() != x.dim() {
        return Err(Error::Dimension {
            expected: format!("d = {}, N = {}", y.dim(), y.side),
            found: format!("d = {}, N = {}", x.dim(), x.side),
        });
    }
    Ok(project(&y.lift().add(&x.lift()), y.side))
}

/// Row-major enumeration of `T_N`, least significant coordinate first.
pub fn enumerate_index(y: &TorusPoint) -> u64 {
    let n = y.side;
    let off = (n / 2) as i64;
    y.coords
        .iter()
        .rev()
        .fold(0u64, |acc, &c| acc * n + (c + off) as u64)
}

/// Inverse of [`enumerate_index`].
pub fn point_at_index(mut index: u64, d: usize, side: u64) -> TorusPoint {
    let off = (side / 2) as i64;
    let coords = (0..d)
        .map(|_| {
            let c = (index % side) as i64 - off;
            index /= side;
            c
        })
        .collect();
    TorusPoint { coords, side }
}

/// `N^d`, or `None` on overflow.
pub fn torus_volume(d: usize, side: u64) -> Option<u64> {
    (0..d).try_fold(1u64, |acc, _| acc.checked_mul(side))
}

/// All experiment parameters.
///
/// `L = m·N` is the half side of the stopping box `(-L, L)^d`,
/// `A = L²/N^d` the scaling constant and `n = ⌊N^δ⌋` the stretch length.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WalkConfig {
    pub d: usize,
    #[serde(rename = "N")]
    pub torus_side: u64,
    #[serde(rename = "m")]
    pub multiplier: u64,
    pub delta: f64,
    pub zeta: f64,
    #[serde(rename = "C1")]
    pub c1: f64,
    pub seed: u64,
    pub workers: usize,
}

impl WalkConfig {
    /// A configuration with `δ = 7d/8`, `ζ = 1/2` and `C₁ = 3`.
    pub fn new(d: usize, torus_side: u64, multiplier: u64) -> Self {
        WalkConfig {
            d,
            torus_side,
            multiplier,
            delta: 0.875 * d as f64,
            zeta: 0.5,
            c1: 3.0,
            seed: 0,
            workers: 1,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_workers(mut self, workers: usize) -> Self {
        self.workers = workers;
        self
    }

    pub fn with_delta(mut self, delta: f64) -> Self {
        self.delta = delta;
        self
    }

    pub fn with_zeta(mut self, zeta: f64) -> Self {
        self.zeta = zeta;
        self
    }

    /// `L = m·N`.
    pub fn half_side(&self) -> u64 {
        self.multiplier * self.torus_side
    }

    /// `N^d`; only meaningful for validated configurations.
    pub fn torus_volume(&self) -> u64 {
        torus_volume(self.d, self.torus_side).unwrap_or(u64::MAX)
    }

    /// `A` as the exact ratio `(L², N^d)`.
    pub fn scaling_ratio(&self) -> (u128, u128) {
        let l = self.half_side() as u128;
        let vol = (0..self.d).fold(1u128, |acc, _| acc.saturating_mul(self.torus_side as u128));
        (l * l, vol)
    }

    /// `A = m²·N^{2-d} = L²/N^d`.
    pub fn scaling(&self) -> f64 {
        let (num, den) = self.scaling_ratio();
        num as f64 / den as f64
    }

    /// `n = ⌊N^δ⌋`, guarded against `powf` landing just below an integer.
    pub fn stretch_len(&self) -> u64 {
        let v = (self.torus_side as f64).powf(self.delta);
        let f = v.floor();
        if f + 1.0 - v < 1e-9 * v.max(1.0) {
            (f + 1.0) as u64
        } else {
            f as u64
        }
    }

    /// The separation radius `g = ⌊N^ζ⌋`.
    pub fn separation_radius(&self) -> u64 {
        (self.torus_side as f64).powf(self.zeta).floor() as u64
    }

    pub fn validate(&self) -> Result<()> {
        let v = validate_params(self);
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidConfig(v))
        }
    }
}

/// One violated parameter constraint.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub name: String,
    pub detail: String,
}

impl Violation {
    fn new(name: &str, detail: String) -> Self {
        Violation {
            name: name.to_string(),
            detail,
        }
    }
}

/// Every violated constraint of `cfg`; empty when the configuration is valid.
pub fn validate_params(cfg: &WalkConfig) -> Vec<Violation> {
    let mut out = Vec::new();
    let d = cfg.d as f64;
    if cfg.d < 3 {
        out.push(Violation::new("d ≥ 3", format!("d = {}", cfg.d)));
    }
    if cfg.torus_side == 0 {
        out.push(Violation::new("N ≥ 1", "N = 0".into()));
    }
    if cfg.multiplier == 0 {
        out.push(Violation::new("m ≥ 1", "m = 0".into()));
    }
    if cfg.half_side() > MAX_HALF_SIDE {
        out.push(Violation::new(
            "L ≤ 2^20",
            format!("L = {}", cfg.half_side()),
        ));
    }
    match torus_volume(cfg.d, cfg.torus_side) {
        Some(v) if v <= MAX_TORUS_VOLUME => {}
        _ => out.push(Violation::new(
            "N^d ≤ 2^32",
            format!("N = {}, d = {}", cfg.torus_side, cfg.d),
        )),
    }
    if !(cfg.delta > 2.0 && cfg.delta < d) {
        out.push(Violation::new(
            "2 < δ < d",
            format!("δ = {}, d = {}", cfg.delta, cfg.d),
        ));
    }
    if cfg.d >= 2 && !(2.0 * cfg.delta > d * d / (d - 1.0)) {
        out.push(Violation::new(
            "2δ > d²/(d−1)",
            format!(
                "2δ = {} but d²/(d−1) = {}",
                2.0 * cfg.delta,
                d * d / (d - 1.0)
            ),
        ));
    }
    if !(cfg.zeta > 0.0 && cfg.zeta < cfg.delta / d) {
        out.push(Violation::new(
            "0 < ζ < δ/d",
            format!("ζ = {}, δ/d = {}", cfg.zeta, cfg.delta / d),
        ));
    }
    if !(cfg.zeta * (d - 2.0) > d - cfg.delta) {
        out.push(Violation::new(
            "ζ(d−2) > d−δ",
            format!("ζ(d−2) = {}, d−δ = {}", cfg.zeta * (d - 2.0), d - cfg.delta),
        ));
    }
    if !(cfg.c1.is_finite() && cfg.c1 > 0.0) {
        out.push(Violation::new("C1 > 0", format!("C1 = {}", cfg.c1)));
    }
    if cfg.workers == 0 {
        out.push(Violation::new("workers ≥ 1", "workers = 0".into()));
    }
    out
}
