//! Lazy simple random walk on `Z^d` stopped at the exit time of `(-L, L)^d`.
//!
//! A run starts at the origin, records the exit time `T`, keeps stepping
//! until the first multiple of the stretch length `n` that lies outside the
//! box (this multiple is `S·n`), and meanwhile tracks which torus sites the
//! projected pre-exit trajectory touched.

use rand::RngCore;

use crate::error::{Error, Result};
use crate::lattice::{enumerate_index, project, translate, LatticePoint, TorusPoint, WalkConfig};
use crate::potential::PatternSet;

/// The lazy kernel: hold with probability 1/2, otherwise move to one of the
/// `2d` neighbours uniformly.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepLaw {
    d: usize,
}

impl StepLaw {
    pub fn new(d: usize) -> Self {
        assert!(d >= 1);
        StepLaw { d }
    }

    pub fn stay_prob(&self) -> f64 {
        0.5
    }

    pub fn neighbor_prob(&self) -> f64 {
        1.0 / (4 * self.d) as f64
    }

    /// Per-coordinate variance of one step, `1/(2d)`.
    pub fn step_variance(&self) -> f64 {
        1.0 / (2 * self.d) as f64
    }

    /// One draw split into `4d` equal cells: the first `2d` cells hold, the
    /// rest select `(axis, ±1)`.
    #[inline]
    pub fn sample<R: RngCore + ?Sized>(&self, rng: &mut R) -> Option<(usize, i64)> {
        let cells = 4 * self.d as u128;
        let j = ((rng.next_u64() as u128 * cells) >> 64) as usize;
        if j < 2 * self.d {
            None
        } else {
            let k = j - 2 * self.d;
            Some((k >> 1, if k & 1 == 0 { 1 } else { -1 }))
        }
    }
}

/// One step of the lazy walk from `pos`.
pub fn lazy_step<R: RngCore + ?Sized>(pos: &LatticePoint, rng: &mut R) -> LatticePoint {
    let mut c = pos.coords().to_vec();
    if let Some((axis, sign)) = StepLaw::new(c.len()).sample(rng) {
        c[axis] += sign;
    }
    LatticePoint::new(c)
}

/// The torus sites of `translation + project(pattern)`, as a per-site bit mask
/// over pattern members.
#[derive(Clone, Debug)]
pub struct TorusTarget {
    masks: Vec<u32>,
    len: usize,
}

impl TorusTarget {
    pub const MAX_POINTS: usize = 32;

    pub fn new(pattern: &PatternSet, translation: &TorusPoint) -> Result<Self> {
        let side = translation.side();
        let d = translation.dim();
        if pattern.dim() != d {
            return Err(Error::Dimension {
                expected: format!("d = {d}"),
                found: format!("d = {}", pattern.dim()),
            });
        }
        if pattern.len() > Self::MAX_POINTS {
            return Err(Error::InvalidInput(format!(
                "patterns tracked along a walk hold at most {} points",
                Self::MAX_POINTS
            )));
        }
        let vol = crate::lattice::torus_volume(d, side)
            .ok_or_else(|| Error::Overflow("N^d".into()))? as usize;
        let mut masks = vec![0u32; vol];
        for (i, p) in pattern.points().iter().enumerate() {
            let site = translate(&project(p, side), translation)?;
            masks[enumerate_index(&site) as usize] |= 1 << i;
        }
        Ok(TorusTarget {
            masks,
            len: pattern.len(),
        })
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    fn mask(&self, index: usize) -> u32 {
        self.masks[index]
    }
}

/// One stopped trajectory.
#[derive(Clone, Debug, PartialEq)]
pub struct RunSummary {
    /// `T`, the first step outside `(-L, L)^d`.
    pub exit_time: u64,
    pub exit_point: LatticePoint,
    /// `S`, the first `ℓ` with `Y_{nℓ}` outside the box.
    pub stretches: u64,
    /// `Y_n, Y_{2n}, …, Y_{Sn}`.
    pub stretch_endpoints: Vec<LatticePoint>,
    pub hit_pattern: bool,
    /// Bit `i` is set when pattern member `i` was hit before `T`.
    pub hit_mask: u32,
    /// Distinct torus sites visited by `φ_N(Y_t)`, `0 ≤ t < T`.
    pub visited_count: u64,
}

/// A reusable simulator for stopped runs under one configuration.
///
/// Holds per-worker scratch (a generation-stamped visit table over the
/// torus) so repeated runs do not allocate.
pub struct StoppedWalk {
    law: StepLaw,
    half_side: i64,
    stretch: u64,
    side: i64,
    strides: Vec<usize>,
    origin_index: usize,
    target: Option<TorusTarget>,
    stamps: Vec<u32>,
    generation: u32,
}

impl StoppedWalk {
    pub fn new(cfg: &WalkConfig, target: Option<TorusTarget>) -> Result<Self> {
        cfg.validate()?;
        let side = cfg.torus_side;
        let vol = cfg.torus_volume() as usize;
        let mut strides = Vec::with_capacity(cfg.d);
        let mut s = 1usize;
        for _ in 0..cfg.d {
            strides.push(s);
            s *= side as usize;
        }
        let origin_index = enumerate_index(&TorusPoint::origin(cfg.d, side)) as usize;
        if let Some(t) = &target {
            if t.masks.len() != vol {
                return Err(Error::Dimension {
                    expected: format!("torus volume {vol}"),
                    found: format!("target volume {}", t.masks.len()),
                });
            }
        }
        Ok(StoppedWalk {
            law: StepLaw::new(cfg.d),
            half_side: cfg.half_side() as i64,
            stretch: cfg.stretch_len().max(1),
            side: side as i64,
            strides,
            origin_index,
            target,
            stamps: vec![0; vol],
            generation: 0,
        })
    }

    fn next_generation(&mut self) -> u32 {
        if self.generation == u32::MAX {
            self.stamps.iter_mut().for_each(|s| *s = 0);
            self.generation = 0;
        }
        self.generation += 1;
        self.generation
    }

    /// Simulates one run; `visit` sees every pre-exit position `Y_t`, `t < T`.
    pub fn run_with<R, F>(&mut self, rng: &mut R, mut visit: F) -> RunSummary
    where
        R: RngCore + ?Sized,
        F: FnMut(&[i64]),
    {
        let d = self.strides.len();
        let gen = self.next_generation();
        let half = self.half_side;
        let side = self.side;
        let off = side / 2;
        let mut pos = vec![0i64; d];
        // offset residues y_j + ⌊N/2⌋ ∈ [0, N)
        let mut res = vec![off; d];
        let mut idx = self.origin_index;
        let mut visited = 0u64;
        let mut hit_mask = 0u32;
        let mut endpoints = Vec::new();

        let mut t: u64 = 0;
        let mut next_mark = self.stretch;

        // t = 0 is always inside since L ≥ 1
        visit(&pos);
        self.stamps[idx] = gen;
        visited += 1;
        if let Some(target) = &self.target {
            hit_mask |= target.mask(idx);
        }

        let exit_time = loop {
            t += 1;
            if let Some((axis, sign)) = self.law.sample(rng) {
                pos[axis] += sign;
                let r = res[axis] + sign;
                let stride = self.strides[axis];
                if r == side {
                    res[axis] = 0;
                    idx -= (side as usize - 1) * stride;
                } else if r < 0 {
                    res[axis] = side - 1;
                    idx += (side as usize - 1) * stride;
                } else {
                    res[axis] = r;
                    if sign > 0 {
                        idx += stride;
                    } else {
                        idx -= stride;
                    }
                }
                if pos[axis].abs() >= half {
                    break t;
                }
            }
            visit(&pos);
            if self.stamps[idx] != gen {
                self.stamps[idx] = gen;
                visited += 1;
            }
            if let Some(target) = &self.target {
                hit_mask |= target.mask(idx);
            }
            if t == next_mark {
                endpoints.push(LatticePoint::new(pos.clone()));
                next_mark += self.stretch;
            }
        };
        let exit_point = LatticePoint::new(pos.clone());

        // continue to the first multiple of n that lands outside the box
        loop {
            if t == next_mark {
                let outside = pos.iter().any(|c| c.abs() >= half);
                endpoints.push(LatticePoint::new(pos.clone()));
                if outside {
                    break;
                }
                next_mark += self.stretch;
            }
            t += 1;
            if let Some((axis, sign)) = self.law.sample(rng) {
                pos[axis] += sign;
            }
        }

        RunSummary {
            exit_time,
            exit_point,
            stretches: next_mark / self.stretch,
            stretch_endpoints: endpoints,
            hit_pattern: hit_mask != 0,
            hit_mask,
            visited_count: visited,
        }
    }

    pub fn run<R: RngCore + ?Sized>(&mut self, rng: &mut R) -> RunSummary {
        self.run_with(rng, |_| {})
    }
}

/// Simulates one stopped run; a convenience wrapper around [`StoppedWalk`].
pub fn run_stopped<R: RngCore + ?Sized>(
    cfg: &WalkConfig,
    pattern: Option<&PatternSet>,
    translation: Option<&TorusPoint>,
    rng: &mut R,
) -> Result<RunSummary> {
    let target = match pattern {
        Some(k) => {
            let origin = TorusPoint::origin(cfg.d, cfg.torus_side);
            Some(TorusTarget::new(k, translation.unwrap_or(&origin))?)
        }
        None => None,
    };
    let mut walk = StoppedWalk::new(cfg, target)?;
    Ok(walk.run(rng))
}

/// Displacement thresholds for classifying stretches.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StretchClassifier {
    /// `C₁·√(log N)·√n`
    pub good_threshold: f64,
    /// `10·√n·log log n`
    pub bad_threshold: f64,
}

impl StretchClassifier {
    pub fn new(cfg: &WalkConfig) -> Result<Self> {
        let n = cfg.stretch_len();
        if n < 16 {
            return Err(Error::InvalidInput(format!(
                "stretch length n = {n} must be at least 16 so that log log n > 0"
            )));
        }
        if cfg.torus_side < 3 {
            return Err(Error::InvalidInput("N ≥ 3 required".into()));
        }
        let sqrt_n = (n as f64).sqrt();
        Ok(StretchClassifier {
            good_threshold: cfg.c1 * (cfg.torus_side as f64).ln().sqrt() * sqrt_n,
            bad_threshold: 10.0 * sqrt_n * (n as f64).ln().ln(),
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StretchStats {
    /// `|Y_{nℓ} − Y_{n(ℓ−1)}|` for `ℓ = 1..=S`.
    pub displacements: Vec<f64>,
    pub over_good: usize,
    pub over_bad: usize,
    /// `n·S/N^d`
    pub scaled_exit: f64,
}

pub fn stretch_summary(run: &RunSummary, cfg: &WalkConfig) -> Result<StretchStats> {
    let class = StretchClassifier::new(cfg)?;
    let mut prev = LatticePoint::origin(cfg.d);
    let displacements: Vec<f64> = run
        .stretch_endpoints
        .iter()
        .map(|p| {
            let disp = p.sub(&prev).norm();
            prev = p.clone();
            disp
        })
        .collect();
    Ok(StretchStats {
        over_good: displacements
            .iter()
            .filter(|&&x| x > class.good_threshold)
            .count(),
        over_bad: displacements
            .iter()
            .filter(|&&x| x > class.bad_threshold)
            .count(),
        scaled_exit: (cfg.stretch_len() * run.stretches) as f64 / cfg.torus_volume() as f64,
        displacements,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, Domain};

    fn cfg_3d(n: u64, m: u64) -> WalkConfig {
        WalkConfig::new(3, n, m).with_delta(2.625).with_zeta(0.5)
    }

    #[test]
    fn kernel_probabilities() {
        let law = StepLaw::new(3);
        assert_eq!(law.stay_prob(), 0.5);
        assert!((law.neighbor_prob() - 1.0 / 12.0).abs() < 1e-15);
        assert_eq!(law.stay_prob() + 6.0 * law.neighbor_prob(), 1.0);
        assert!((law.step_variance() - 1.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn empirical_step_law() {
        let d = 3;
        let law = StepLaw::new(d);
        let mut rng = stream(1, Domain::Scratch, 0);
        let steps = 1_000_000u64;
        let mut stays = 0u64;
        let mut sum = [0i64; 3];
        let mut per_dir = [0u64; 6];
        for _ in 0..steps {
            match law.sample(&mut rng) {
                None => stays += 1,
                Some((axis, sign)) => {
                    sum[axis] += sign;
                    per_dir[2 * axis + usize::from(sign < 0)] += 1;
                }
            }
        }
        let f = stays as f64 / steps as f64;
        assert!(
            (f - 0.5).abs() <= 4.0 * (0.25 / steps as f64).sqrt(),
            "stay {f}"
        );
        let tol = 4.0 * (1.0 / (2.0 * d as f64 * steps as f64)).sqrt();
        for s in sum {
            assert!((s as f64 / steps as f64).abs() <= tol);
        }
        let p = 1.0 / 12.0;
        for c in per_dir {
            let f = c as f64 / steps as f64;
            assert!((f - p).abs() <= 4.0 * (p * (1.0 - p) / steps as f64).sqrt());
        }
    }

    #[test]
    fn lazy_step_moves_at_most_one() {
        let mut rng = stream(2, Domain::Scratch, 0);
        let mut p = LatticePoint::origin(4);
        for _ in 0..1000 {
            let q = lazy_step(&p, &mut rng);
            assert!(q.l1_distance(&p) <= 1);
            p = q;
        }
    }

    #[test]
    fn degenerate_box_gives_geometric_exit_time() {
        // L = 1: the box is {o}, so T is the first non-lazy step.
        let cfg = cfg_3d(1, 1);
        // N = 1 violates nothing except stretch arithmetic; n = 1.
        let mut walk = StoppedWalk::new(&cfg, None).unwrap();
        let runs = 200_000;
        let mut total = 0u64;
        let mut ones = 0u64;
        for i in 0..runs {
            let r = walk.run(&mut stream(3, Domain::Scratch, i));
            total += r.exit_time;
            ones += u64::from(r.exit_time == 1);
            assert!(r.exit_time >= 1);
            assert_eq!(r.exit_point.l1_distance(&LatticePoint::origin(3)), 1);
        }
        let mean = total as f64 / runs as f64;
        // Var T = 2 for a geometric(1/2) variable
        assert!(
            (mean - 2.0).abs() < 4.0 * (2.0 / runs as f64).sqrt(),
            "mean {mean}"
        );
        let p1 = ones as f64 / runs as f64;
        assert!((p1 - 0.5).abs() < 4.0 * (0.25 / runs as f64).sqrt());
    }

    #[test]
    fn run_invariants() {
        let cfg = cfg_3d(5, 2);
        let half = cfg.half_side() as i64;
        let n = cfg.stretch_len();
        let mut walk = StoppedWalk::new(&cfg, None).unwrap();
        for i in 0..300 {
            let mut path = Vec::new();
            let r = walk.run_with(&mut stream(4, Domain::Scratch, i), |p| {
                path.push(LatticePoint::new(p.to_vec()))
            });
            assert_eq!(path.len() as u64, r.exit_time);
            assert!(path.iter().all(|p| p.in_open_box(half)));
            assert!(!r.exit_point.in_open_box(half));
            assert!(r.exit_time <= r.stretches * n);
            assert_eq!(r.stretch_endpoints.len() as u64, r.stretches);
            let (last, earlier) = r.stretch_endpoints.split_last().unwrap();
            assert!(!last.in_open_box(half));
            assert!(earlier.iter().all(|p| p.in_open_box(half)));
            assert!(r.visited_count <= r.exit_time);
            assert!(!r.hit_pattern);
            // endpoints before T lie on the recorded path; later ones may
            // have re-entered the box after the exit
            for (l, e) in earlier.iter().enumerate() {
                if let Some(p) = path.get(((l as u64 + 1) * n) as usize) {
                    assert_eq!(p, e);
                }
            }
            let distinct: std::collections::HashSet<_> =
                path.iter().map(|p| project(p, cfg.torus_side)).collect();
            assert_eq!(distinct.len() as u64, r.visited_count);
        }
    }

    #[test]
    fn pattern_hits_match_recorded_path() {
        let cfg = cfg_3d(5, 2);
        let pattern = PatternSet::preset("plus-shape", 3).unwrap();
        let x = TorusPoint::new(vec![2, -2, 1], 5).unwrap();
        let target = TorusTarget::new(&pattern, &x).unwrap();
        let sites: Vec<TorusPoint> = pattern
            .points()
            .iter()
            .map(|p| translate(&project(p, 5), &x).unwrap())
            .collect();
        let mut walk = StoppedWalk::new(&cfg, Some(target)).unwrap();
        let mut hits = 0;
        for i in 0..300 {
            let mut path = Vec::new();
            let r = walk.run_with(&mut stream(5, Domain::Scratch, i), |p| {
                path.push(project(&LatticePoint::new(p.to_vec()), 5))
            });
            let mut mask = 0u32;
            for p in &path {
                for (k, s) in sites.iter().enumerate() {
                    if p == s {
                        mask |= 1 << k;
                    }
                }
            }
            assert_eq!(mask, r.hit_mask);
            assert_eq!(r.hit_pattern, mask != 0);
            hits += usize::from(r.hit_pattern);
        }
        assert!(hits > 0 && hits < 300);
    }

    #[test]
    fn runs_are_deterministic() {
        let cfg = cfg_3d(9, 3);
        let k = PatternSet::preset("origin", 3).unwrap();
        let x = TorusPoint::far_corner(3, 9);
        let go = || -> Vec<_> {
            (0..20)
                .map(|i| {
                    run_stopped(
                        &cfg,
                        Some(&k),
                        Some(&x),
                        &mut stream(9, Domain::StoppedWalk, i),
                    )
                    .unwrap()
                })
                .collect()
        };
        assert_eq!(go(), go());
    }

    #[test]
    fn no_pattern_never_hits() {
        let cfg = cfg_3d(5, 2);
        for i in 0..100 {
            let r = run_stopped(&cfg, None, None, &mut stream(12, Domain::Scratch, i)).unwrap();
            assert!(!r.hit_pattern);
        }
    }

    #[test]
    fn exit_coordinates_are_centered() {
        let cfg = cfg_3d(6, 2);
        let l = cfg.half_side() as f64;
        let mut walk = StoppedWalk::new(&cfg, None).unwrap();
        let runs = 4000u64;
        let mut sums = [0i64; 3];
        for i in 0..runs {
            let r = walk.run(&mut stream(6, Domain::Scratch, i));
            for (s, c) in sums.iter_mut().zip(r.exit_point.coords()) {
                *s += c;
            }
        }
        for s in sums {
            assert!((s as f64 / runs as f64).abs() <= 4.0 * l / (runs as f64).sqrt());
        }
    }

    #[test]
    fn maximal_inequality_diagnostic() {
        // P[max_{j ≤ t} Y_j^(1) ≥ rσ√t] ≤ 2 e^{-r²/2}
        let law = StepLaw::new(3);
        let t = 10_000u64;
        let runs = 10_000u64;
        let sigma = law.step_variance().sqrt();
        let mut exceed = [0u64; 2];
        for i in 0..runs {
            let mut rng = stream(10, Domain::Scratch, i);
            let (mut x, mut max) = (0i64, 0i64);
            for _ in 0..t {
                if let Some((0, s)) = law.sample(&mut rng) {
                    x += s;
                    max = max.max(x);
                }
            }
            for (k, r) in [2.0f64, 3.0].iter().enumerate() {
                if max as f64 >= r * sigma * (t as f64).sqrt() {
                    exceed[k] += 1;
                }
            }
        }
        for (k, r) in [2.0f64, 3.0].iter().enumerate() {
            let p = exceed[k] as f64 / runs as f64;
            assert!(p <= 2.0 * (-r * r / 2.0).exp(), "r={r} p={p}");
        }
    }

    #[test]
    fn stretch_summary_counts() {
        let cfg = cfg_3d(16, 4);
        let class = StretchClassifier::new(&cfg).unwrap();
        let n = 1448f64;
        assert!((class.good_threshold - 3.0 * 16f64.ln().sqrt() * n.sqrt()).abs() < 1e-9);
        assert!((class.bad_threshold - 10.0 * n.sqrt() * n.ln().ln()).abs() < 1e-9);
        let mut walk = StoppedWalk::new(&cfg, None).unwrap();
        for i in 0..50 {
            let r = walk.run(&mut stream(11, Domain::Scratch, i));
            let s = stretch_summary(&r, &cfg).unwrap();
            assert_eq!(s.displacements.len() as u64, r.stretches);
            assert!(s.over_bad <= s.over_good);
            assert!((s.scaled_exit - 1448.0 * r.stretches as f64 / 4096.0).abs() < 1e-12);
        }
    }

    #[test]
    fn classifier_requires_long_stretches() {
        let cfg = WalkConfig::new(3, 2, 2).with_delta(2.625);
        assert!(StretchClassifier::new(&cfg).is_err());
    }
}
