//! Distributional diagnostics: exit-time scaling, mixing on the torus and
//! stretch displacements.

use serde::Serialize;

use super::run_indexed;
use crate::brownian::ExitLaw;
use crate::error::{Error, Result};
use crate::lattice::{reduce, WalkConfig};
use crate::rng::{stream, Domain};
use crate::stats::ks_distance;
use crate::walk::{stretch_summary, StepLaw, StoppedWalk, StretchClassifier};

/// `P[2dA·σ₁ ≤ s]`, the limit law of `n·S/N^d`.
pub fn exit_time_cdf(cfg: &WalkConfig, s: f64) -> f64 {
    let c = 2.0 * cfg.d as f64 * cfg.scaling();
    ExitLaw::new(cfg.d).cdf(s / c)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct KsReport {
    /// Kolmogorov–Smirnov distance.
    pub d_stat: f64,
    pub samples: u64,
    /// `n·S/N^d` per run, in run order.
    pub values: Vec<f64>,
}

/// KS distance between the law of `n·S/N^d` and that of `2dA·σ₁`.
pub fn ks_exit_time(cfg: &WalkConfig, runs: u64) -> Result<KsReport> {
    cfg.validate()?;
    if runs == 0 {
        return Err(Error::InvalidInput("runs must be positive".into()));
    }
    let scale = cfg.stretch_len() as f64 / cfg.torus_volume() as f64;
    let values = run_indexed(
        cfg.workers,
        runs,
        || StoppedWalk::new(cfg, None),
        |walk, i| {
            let r = walk.run(&mut stream(cfg.seed, Domain::StoppedWalk, i));
            Ok(r.stretches as f64 * scale)
        },
    )?;
    Ok(KsReport {
        d_stat: ks_distance(&values, |s| exit_time_cdf(cfg, s)),
        samples: runs,
        values,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MixingReport {
    pub t: u64,
    pub samples: u64,
    /// `max_x N^d·P̂[φ_N(Y_t) = x]`
    pub max_scaled: f64,
    /// `min_x N^d·P̂[φ_N(Y_t) = x]`
    pub min_scaled: f64,
    /// Counts per torus site in row-major order.
    pub histogram: Vec<u64>,
}

const MIXING_BLOCK: u64 = 4096;

/// Histogram of the projected lazy walk at time `t`.
pub fn mixing_check(cfg: &WalkConfig, t: u64, samples: u64) -> Result<MixingReport> {
    cfg.validate()?;
    let n = cfg.stretch_len();
    if t < n {
        return Err(Error::InvalidInput(format!(
            "t = {t} must be at least n = {n}"
        )));
    }
    let vol = cfg.torus_volume();
    if samples < 100 * vol {
        return Err(Error::InvalidInput(format!(
            "{samples} samples are too few to resolve {vol} sites (need ≥ 100·N^d)"
        )));
    }
    let side = cfg.torus_side;
    let off = (side / 2) as i64;
    let law = StepLaw::new(cfg.d);
    let blocks = samples.div_ceil(MIXING_BLOCK);
    let sites: Vec<Vec<u32>> = run_indexed(
        cfg.workers,
        blocks,
        || Ok(vec![0i64; cfg.d]),
        |pos, b| {
            let mut rng = stream(cfg.seed, Domain::Mixing, b);
            let count = MIXING_BLOCK.min(samples - b * MIXING_BLOCK);
            let out = (0..count)
                .map(|_| {
                    pos.iter_mut().for_each(|c| *c = 0);
                    for _ in 0..t {
                        if let Some((axis, sign)) = law.sample(&mut rng) {
                            pos[axis] += sign;
                        }
                    }
                    pos.iter()
                        .rev()
                        .fold(0u64, |acc, &c| acc * side + (reduce(c, side) + off) as u64)
                        as u32
                })
                .collect();
            Ok(out)
        },
    )?;
    let mut histogram = vec![0u64; vol as usize];
    for s in sites.iter().flatten() {
        histogram[*s as usize] += 1;
    }
    let scale = vol as f64 / samples as f64;
    let max = histogram.iter().copied().max().unwrap_or(0);
    let min = histogram.iter().copied().min().unwrap_or(0);
    Ok(MixingReport {
        t,
        samples,
        max_scaled: max as f64 * scale,
        min_scaled: min as f64 * scale,
        histogram,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StretchReport {
    pub n: u64,
    pub good_threshold: f64,
    pub bad_threshold: f64,
    pub runs: u64,
    pub stretches: u64,
    pub over_good: u64,
    pub over_bad: u64,
    pub frac_over_good: f64,
    pub frac_over_bad: f64,
    /// Runs with `Sn/N^d > log N`.
    pub runs_above_log: u64,
    /// Runs with `Sn/N^d < 1/√(log log n)`.
    pub runs_below_floor: u64,
    pub frac_above_log: f64,
    pub frac_outside: f64,
    pub mean_s: f64,
}

/// Stretch displacement and exit-scale statistics over `runs` walks.
pub fn bad_stretch_stats(cfg: &WalkConfig, runs: u64) -> Result<StretchReport> {
    cfg.validate()?;
    if runs == 0 {
        return Err(Error::InvalidInput("runs must be positive".into()));
    }
    let class = StretchClassifier::new(cfg)?;
    let n = cfg.stretch_len();
    let per_run = run_indexed(
        cfg.workers,
        runs,
        || StoppedWalk::new(cfg, None),
        |walk, i| {
            let r = walk.run(&mut stream(cfg.seed, Domain::StoppedWalk, i));
            let s = stretch_summary(&r, cfg)?;
            Ok((
                r.stretches,
                s.over_good as u64,
                s.over_bad as u64,
                s.scaled_exit,
            ))
        },
    )?;
    let upper = (cfg.torus_side as f64).ln();
    let lower = 1.0 / (n as f64).ln().ln().sqrt();
    let (mut stretches, mut good, mut bad, mut above, mut below) = (0u64, 0u64, 0u64, 0u64, 0u64);
    for &(s, g, b, scaled) in &per_run {
        stretches += s;
        good += g;
        bad += b;
        above += (scaled > upper) as u64;
        below += (scaled < lower) as u64;
    }
    Ok(StretchReport {
        n,
        good_threshold: class.good_threshold,
        bad_threshold: class.bad_threshold,
        runs,
        stretches,
        over_good: good,
        over_bad: bad,
        frac_over_good: good as f64 / stretches as f64,
        frac_over_bad: bad as f64 / stretches as f64,
        runs_above_log: above,
        runs_below_floor: below,
        frac_above_log: above as f64 / runs as f64,
        frac_outside: (above + below) as f64 / runs as f64,
        mean_s: stretches as f64 / runs as f64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cdf_is_monotone_and_bounded() {
        let cfg = WalkConfig::new(3, 16, 4);
        let mut prev = 0.0;
        for i in 0..400 {
            let f = exit_time_cdf(&cfg, i as f64 * 0.05);
            assert!((0.0..=1.0).contains(&f));
            assert!(f >= prev);
            prev = f;
        }
        assert!(prev > 0.999);
    }

    #[test]
    fn ks_small_config() {
        let cfg = WalkConfig::new(3, 9, 1).with_seed(2);
        let a = ks_exit_time(&cfg, 200).unwrap();
        assert_eq!(a.values.len(), 200);
        assert!(a.d_stat >= 0.0 && a.d_stat <= 1.0);
        let b = ks_exit_time(&cfg.clone().with_workers(2), 200).unwrap();
        assert_eq!(a, b);
        assert!(ks_exit_time(&cfg, 0).is_err());
    }

    #[test]
    fn mixing_errors_and_mass() {
        let cfg = WalkConfig::new(3, 6, 4);
        let n = cfg.stretch_len();
        assert_eq!(n, 110);
        assert!(mixing_check(&cfg, n - 1, 1_000_000).is_err());
        assert!(mixing_check(&cfg, n, 100 * 216 - 1).is_err());
        let r = mixing_check(&cfg, n, 100 * 216).unwrap();
        assert_eq!(r.histogram.iter().sum::<u64>(), 21_600);
        assert_eq!(r.histogram.len(), 216);
        assert!(r.min_scaled <= 1.0 && r.max_scaled >= 1.0);
    }

    #[test]
    fn stretch_report_consistency() {
        let cfg = WalkConfig::new(3, 9, 1).with_seed(4);
        let r = bad_stretch_stats(&cfg, 100).unwrap();
        assert!(r.bad_threshold >= r.good_threshold || r.over_bad <= r.over_good);
        if r.bad_threshold >= r.good_threshold {
            assert!(r.frac_over_bad <= r.frac_over_good);
        }
        for f in [
            r.frac_over_good,
            r.frac_over_bad,
            r.frac_above_log,
            r.frac_outside,
        ] {
            assert!((0.0..=1.0).contains(&f));
        }
        assert!(r.mean_s >= 1.0);
    }
}
