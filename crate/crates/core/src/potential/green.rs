//! Green's function of simple random walk.
//!
//! The discrete-time walk and the rate-one continuous-time walk share their
//! Green's function. In continuous time the coordinates are independent
//! rate-`1/d` walks on `Z`, each with transition law `e^{-s} I_k(s)` at
//! internal time `s = t/d`, so
//!
//! ```text
//! G(x) = d ∫_0^∞ Π_j e^{-s} I_{|x_j|}(s) ds .
//! ```
//!
//! This is the `d`-dimensional Fourier integral with every angular variable
//! integrated out. The integrand is evaluated with a Miller backward
//! recurrence for the scaled modified Bessel functions, integrated by
//! double-exponential quadrature over dyadic panels up to a cut `s₁`, and the
//! tail beyond `s₁` (which decays like `s^{-d/2}`) is integrated term by term
//! from the large-argument expansion of `I_k`.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::lattice::LatticePoint;

/// Tightest tolerance the quadrature can honour.
pub const MIN_GREEN_TOL: f64 = 1e-13;

/// Terms kept in the large-argument expansion used for the tail.
const TAIL_TERMS: usize = 40;

/// `e^{-s} I_k(s)` for `k = 0..out.len()`.
fn scaled_bessel_i(s: f64, out: &mut [f64]) {
    let kmax = out.len() - 1;
    if s == 0.0 {
        out.iter_mut().for_each(|v| *v = 0.0);
        out[0] = 1.0;
        return;
    }
    if s <= 1.0 {
        // power series, e^{-s} Σ_j (s/2)^{2j+k} / (j! (j+k)!)
        let half = 0.5 * s;
        let q = half * half;
        let damp = (-s).exp();
        let mut lead = 1.0; // (s/2)^k / k!
        for (k, v) in out.iter_mut().enumerate() {
            if k > 0 {
                lead *= half / k as f64;
            }
            let mut term = lead;
            let mut sum = lead;
            let mut j = 1.0;
            while term > sum * 1e-18 && term > 0.0 {
                term *= q / (j * (j + k as f64));
                sum += term;
                j += 1.0;
            }
            *v = damp * sum;
        }
        return;
    }
    // Miller's backward recurrence I_{k-1} = I_{k+1} + (2k/s) I_k,
    // normalised by e^{-s} (I_0 + 2 Σ_{k≥1} I_k) = 1.
    let start = kmax + 16 + (80.0 * s).sqrt().ceil() as usize;
    let mut next = 0.0f64; // b_{k+1}
    let mut cur = 1e-280f64; // b_k
    let mut norm = 0.0f64;
    out.iter_mut().for_each(|v| *v = 0.0);
    for k in (1..=start).rev() {
        if k <= kmax {
            out[k] = cur;
        }
        norm += 2.0 * cur;
        let prev = next + (2.0 * k as f64 / s) * cur;
        next = cur;
        cur = prev;
        if cur > 1e250 {
            let scale = 1e-250;
            cur *= scale;
            next *= scale;
            norm *= scale;
            for v in out.iter_mut().skip(k) {
                *v *= scale;
            }
        }
    }
    out[0] = cur;
    norm += cur;
    out.iter_mut().for_each(|v| *v /= norm);
}

/// Coefficients of `√(2πs) e^{-s} I_k(s) ~ Σ_m c_m s^{-m}`.
fn bessel_asymptotic(k: u64, terms: usize) -> Vec<f64> {
    let mu = 4.0 * (k as f64) * (k as f64);
    let mut c = Vec::with_capacity(terms);
    let mut a = 1.0;
    c.push(1.0);
    for m in 1..terms {
        let odd = (2 * m - 1) as f64;
        a *= -(mu - odd * odd) / (m as f64 * 8.0);
        c.push(a);
    }
    c
}

/// `d ∫_{s₁}^∞ Π_j e^{-s} I_{k_j}(s) ds` from the product of expansions.
fn tail_integral(ks: &[u64], s1: f64) -> f64 {
    let d = ks.len();
    let mut prod = vec![0.0; TAIL_TERMS];
    prod[0] = 1.0;
    for &k in ks {
        let c = bessel_asymptotic(k, TAIL_TERMS);
        let mut next = vec![0.0; TAIL_TERMS];
        for (i, pi) in prod.iter().enumerate() {
            for (j, cj) in c.iter().enumerate().take(TAIL_TERMS - i) {
                next[i + j] += pi * cj;
            }
        }
        prod = next;
    }
    let half_d = d as f64 / 2.0;
    let mut sum = 0.0;
    let mut smallest = f64::INFINITY;
    for (m, cm) in prod.iter().enumerate() {
        let term = cm * s1.powf(1.0 - half_d - m as f64) / (half_d + m as f64 - 1.0);
        // stop at the smallest term of the asymptotic series
        if term.abs() > smallest {
            break;
        }
        smallest = term.abs();
        sum += term;
    }
    d as f64 * sum / (2.0 * std::f64::consts::PI).powf(half_d)
}

fn canonical(x: &[i64]) -> Vec<u64> {
    let mut k: Vec<u64> = x.iter().map(|c| c.unsigned_abs()).collect();
    k.sort_unstable();
    k
}

fn green_canonical(ks: &[u64], tol: f64) -> Result<f64> {
    let d = ks.len();
    let kmax = *ks.iter().max().unwrap_or(&0);
    let s1 = (2.0 * (kmax * kmax) as f64).max(40.0);
    let orders = kmax as usize + 1;
    let integrand = |s: f64| -> f64 {
        let mut b = vec![0.0; orders];
        scaled_bessel_i(s, &mut b);
        ks.iter().map(|&k| b[k as usize]).product::<f64>()
    };

    let mut edges = vec![0.0, 1.0];
    while *edges.last().unwrap() * 2.0 < s1 {
        let next = edges.last().unwrap() * 2.0;
        edges.push(next);
    }
    edges.push(s1);
    let panel_tol = tol / (10.0 * edges.len() as f64);
    let mut body = 0.0;
    for w in edges.windows(2) {
        let out = quadrature::double_exponential::integrate(integrand, w[0], w[1], panel_tol);
        if !(out.error_estimate <= panel_tol * 10.0) || !out.integral.is_finite() {
            return Err(Error::Accuracy(format!(
                "Green quadrature on [{}, {}] reached only {:e}",
                w[0], w[1], out.error_estimate
            )));
        }
        body += out.integral;
    }
    Ok(d as f64 * body + tail_integral(ks, s1))
}

/// `G(x)` for simple random walk in dimension `x.dim() ≥ 3`, to absolute
/// accuracy `tol`.
pub fn green_srw(x: &LatticePoint, tol: f64) -> Result<f64> {
    if x.dim() < 3 {
        return Err(Error::InvalidInput(format!(
            "the Green's function is finite only for d ≥ 3 (got d = {})",
            x.dim()
        )));
    }
    if !(tol >= MIN_GREEN_TOL) {
        return Err(Error::Accuracy(format!(
            "requested tolerance {tol:e} is below the achievable {MIN_GREEN_TOL:e}"
        )));
    }
    green_canonical(&canonical(x.coords()), tol)
}

/// Memoises `G` up to lattice symmetry (coordinate permutations and signs).
#[derive(Clone, Debug)]
pub struct GreenCache {
    tol: f64,
    values: HashMap<Vec<u64>, f64>,
}

impl GreenCache {
    pub fn new(tol: f64) -> Result<Self> {
        if !(tol >= MIN_GREEN_TOL) {
            return Err(Error::Accuracy(format!(
                "requested tolerance {tol:e} is below the achievable {MIN_GREEN_TOL:e}"
            )));
        }
        Ok(GreenCache {
            tol,
            values: HashMap::new(),
        })
    }

    pub fn get(&mut self, x: &[i64]) -> Result<f64> {
        if x.len() < 3 {
            return Err(Error::InvalidInput("d ≥ 3 required".into()));
        }
        let key = canonical(x);
        if let Some(&v) = self.values.get(&key) {
            return Ok(v);
        }
        let v = green_canonical(&key, self.tol)?;
        self.values.insert(key, v);
        Ok(v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use statrs::function::gamma::{gamma, ln_gamma};

    const WATSON: f64 = 1.516_386_059_151_978;

    fn lp(c: &[i64]) -> LatticePoint {
        LatticePoint::new(c.to_vec())
    }

    #[test]
    fn watson_closed_form_oracle() {
        // G(0) for the cubic lattice as a product of Gamma values
        let w = 6f64.sqrt() / (32.0 * std::f64::consts::PI.powi(3))
            * gamma(1.0 / 24.0)
            * gamma(5.0 / 24.0)
            * gamma(7.0 / 24.0)
            * gamma(11.0 / 24.0);
        assert!((w - WATSON).abs() < 1e-12, "{w}");
        let g0 = green_srw(&lp(&[0, 0, 0]), 1e-12).unwrap();
        assert!((g0 - w).abs() < 1e-9, "G(0) = {g0}");
    }

    #[test]
    fn harmonicity_at_origin() {
        let g0 = green_srw(&lp(&[0, 0, 0]), 1e-12).unwrap();
        let g1 = green_srw(&lp(&[1, 0, 0]), 1e-12).unwrap();
        assert!((g0 - 1.0 - g1).abs() < 1e-9);
        // G is harmonic off the origin too: G(x) = mean of neighbours
        let g = |c: &[i64]| green_srw(&lp(c), 1e-12).unwrap();
        let x = [2i64, 1, 0];
        let mean =
            (g(&[3, 1, 0]) + g(&[1, 1, 0]) + g(&[2, 2, 0]) + g(&[2, 0, 0]) + 2.0 * g(&[2, 1, 1]))
                / 6.0;
        assert!((g(&x) - mean).abs() < 1e-9);
    }

    #[test]
    fn symmetry() {
        let a = green_srw(&lp(&[2, -1, 3]), 1e-10).unwrap();
        let b = green_srw(&lp(&[-3, 2, 1]), 1e-10).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn rejects_low_dimension_and_tolerance() {
        assert!(green_srw(&lp(&[0, 0]), 1e-8).is_err());
        assert!(matches!(
            green_srw(&lp(&[0, 0, 0]), 1e-16),
            Err(Error::Accuracy(_))
        ));
    }

    #[test]
    fn bessel_against_series() {
        // e^{-s} I_k(s) by the power series with log-gamma weights
        let series = |k: u64, s: f64| -> f64 {
            (0..400)
                .map(|j| {
                    let j = j as f64;
                    ((2.0 * j + k as f64) * (s / 2.0).ln()
                        - ln_gamma(j + 1.0)
                        - ln_gamma(j + k as f64 + 1.0)
                        - s)
                        .exp()
                })
                .sum()
        };
        for &s in &[0.3, 1.0, 2.5, 10.0, 37.0] {
            let mut b = vec![0.0; 12];
            scaled_bessel_i(s, &mut b);
            for k in 0..12u64 {
                let want = series(k, s);
                assert!(
                    (b[k as usize] - want).abs() < 1e-13 * want.max(1e-300) + 1e-300,
                    "s={s} k={k}"
                );
            }
        }
    }

    #[test]
    fn decay_bound() {
        let mut cache = GreenCache::new(1e-10).unwrap();
        let mut worst: f64 = 0.0;
        for r in [2i64, 3, 5, 8, 13, 21, 32] {
            for x in [[r, 0, 0], [r, r / 2, 0], [r / 2 + 1, r / 2, r / 3]] {
                let norm = ((x[0] * x[0] + x[1] * x[1] + x[2] * x[2]) as f64).sqrt();
                if !(2.0..=32.0).contains(&norm) {
                    continue;
                }
                let g = cache.get(&x).unwrap();
                assert!(g > 0.0);
                worst = worst.max(g * norm);
            }
        }
        // G(x) ~ 3/(2π|x|) ≈ 0.477/|x|
        assert!(worst < 0.6, "{worst}");
        let far = cache.get(&[32, 0, 0]).unwrap() * 32.0;
        assert!((far - 1.5 / std::f64::consts::PI).abs() < 2e-3, "{far}");
    }

    /// `Σ_t p_t(o, x)` for simple random walk in d = 3, summed exactly up to
    /// `horizon` from binomial decompositions and completed with the local CLT.
    fn green_by_transition_sum(x: [i64; 3], horizon: usize) -> f64 {
        let ln_binom = |n: usize, k: usize| {
            ln_gamma(n as f64 + 1.0) - ln_gamma(k as f64 + 1.0) - ln_gamma((n - k) as f64 + 1.0)
        };
        // one-dimensional ±1 walk
        let q = |s: usize, k: i64| -> f64 {
            let k = k.unsigned_abs() as usize;
            if k > s || (s + k) % 2 == 1 {
                return 0.0;
            }
            (ln_binom(s, (s + k) / 2) - s as f64 * 2f64.ln()).exp()
        };
        // planar walk via the rotation (a, b) -> (a + b, a - b)
        let plane: Vec<f64> = (0..=horizon)
            .map(|u| q(u, x[1] + x[2]) * q(u, x[1] - x[2]))
            .collect();
        let mut total = 0.0;
        for t in 0..=horizon {
            let mut p = 0.0;
            for t1 in 0..=t {
                let w = ln_binom(t, t1)
                    + t1 as f64 * (1.0f64 / 3.0).ln()
                    + (t - t1) as f64 * (2.0f64 / 3.0).ln();
                let a = q(t1, x[0]);
                if a > 0.0 && plane[t - t1] > 0.0 {
                    p += (w).exp() * a * plane[t - t1];
                }
            }
            total += p;
        }
        // p_t ≈ 2 (3/(2πt))^{3/2} on every other t
        let c = 2.0 * (3.0 / (2.0 * std::f64::consts::PI)).powf(1.5);
        let tail: f64 = ((horizon + 1)..(horizon + 2_000_000))
            .filter(|t| (*t as i64 - x.iter().sum::<i64>()).rem_euclid(2) == 0)
            .map(|t| {
                c * (t as f64).powf(-1.5)
                    * (-1.5 * (x.iter().map(|v| v * v).sum::<i64>()) as f64 / t as f64).exp()
            })
            .sum();
        let far = c * 0.5 * 2.0 / ((horizon + 2_000_000) as f64).sqrt();
        total + tail + far
    }

    #[test]
    fn transition_sum_cross_check() {
        for x in [[0i64, 0, 0], [1, 0, 0], [1, 1, 0], [2, 1, 1]] {
            let oracle = green_by_transition_sum(x, 1500);
            let g = green_srw(&lp(&x), 1e-12).unwrap();
            assert!((g - oracle).abs() < 2e-5, "x={x:?} G={g} oracle={oracle}");
        }
    }
}
