//! The law of `σ₁`, the exit time of standard Brownian motion from `(-1, 1)^d`.
//!
//! The coordinates are independent, so `P[σ₁ > t] = P[τ > t]^d` where `τ` is
//! the one-dimensional exit time from `(-1, 1)`, whose survival function has
//! the eigenfunction expansion
//!
//! ```text
//! P[τ > t] = (4/π) Σ_{k≥0} (−1)^k / (2k+1) · exp(−(2k+1)² π² t / 8).
//! ```
//!
//! The series converges quickly for moderate and large `t` but poorly as
//! `t → 0`. Below `t_floor` the survival function is within
//! `4d·√t·φ(1/√t)` of one (reflection bound), so integrals over `[0, t_floor]`
//! are done in closed form with that bound charged to the error budget.

use std::f64::consts::PI;

use rand::Rng;

use crate::error::{Error, Result};

pub const DEFAULT_SERIES_TERMS: usize = 40;
pub const DEFAULT_T_FLOOR: f64 = 0.02;
pub const DEFAULT_T_CEILING: f64 = 40.0;

/// Bisection tolerance, in time units, of [`sample_sigma1`].
pub const SAMPLE_TOL: f64 = 1e-10;

const SAMPLE_T_LO: f64 = 0.005;
const SAMPLE_T_HI: f64 = 60.0;

#[inline]
fn decay(k: usize, t: f64) -> f64 {
    let odd = (2 * k + 1) as f64;
    (-odd * odd * PI * PI * t / 8.0).exp()
}

/// `P[τ > t]` from the first `terms` terms of the series.
pub fn survival_1d(t: f64, terms: usize) -> Result<f64> {
    if terms == 0 {
        return Err(Error::InvalidInput(
            "at least one series term is required".into(),
        ));
    }
    if !(t > 0.0) {
        return Err(Error::InvalidInput(format!("t must be positive, got {t}")));
    }
    let s: f64 = (0..terms)
        .map(|k| {
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            sign * decay(k, t) / (2 * k + 1) as f64
        })
        .sum();
    Ok((4.0 / PI * s).clamp(0.0, 1.0))
}

/// `P[σ₁ > t] = P[τ > t]^d`.
pub fn survival_cube(t: f64, d: usize, terms: usize) -> Result<f64> {
    if d == 0 {
        return Err(Error::InvalidInput("d must be positive".into()));
    }
    Ok(survival_1d(t, terms)?.powi(d as i32))
}

/// Series survival summed until the terms fall below `1e-18`.
fn survival_1d_fast(t: f64) -> f64 {
    let mut s = 0.0;
    for k in 0..400 {
        let term = decay(k, t) / (2 * k + 1) as f64;
        s += if k % 2 == 0 { term } else { -term };
        if term < 1e-18 {
            break;
        }
    }
    (4.0 / PI * s).clamp(0.0, 1.0)
}

/// Density of `τ`, `(π/2) Σ (−1)^k (2k+1) exp(−(2k+1)² π² t / 8)`.
fn density_1d(t: f64, terms: usize) -> f64 {
    let s: f64 = (0..terms)
        .map(|k| {
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            sign * (2 * k + 1) as f64 * decay(k, t)
        })
        .sum();
    PI / 2.0 * s
}

/// Configuration for σ₁ numerics.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExitLaw {
    pub d: usize,
    pub series_terms: usize,
    pub t_floor: f64,
    pub t_ceiling: f64,
}

impl ExitLaw {
    pub fn new(d: usize) -> Self {
        ExitLaw {
            d,
            series_terms: DEFAULT_SERIES_TERMS,
            t_floor: DEFAULT_T_FLOOR,
            t_ceiling: DEFAULT_T_CEILING,
        }
    }

    pub fn survival(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 1.0;
        }
        survival_1d_fast(t).powi(self.d as i32)
    }

    pub fn cdf(&self, t: f64) -> f64 {
        1.0 - self.survival(t)
    }

    /// Upper bound on `P[σ₁ ≤ t_floor]`: each coordinate leaves `(−1, 1)` by
    /// time `t` with probability at most `4·P[B_t > 1] ≤ 4√t·φ(1/√t)`.
    pub fn floor_mass_bound(&self) -> f64 {
        let t = self.t_floor;
        let phi = (-1.0 / (2.0 * t)).exp() / (2.0 * PI).sqrt();
        4.0 * self.d as f64 * t.sqrt() * phi
    }

    /// `∫_{t_ceiling}^∞ e^{−λt} P[σ₁ > t] dt` from the leading eigenvalue.
    fn tail(&self, lambda: f64) -> f64 {
        let rate = lambda + self.d as f64 * PI * PI / 8.0;
        (4.0 / PI).powi(self.d as i32) * (-rate * self.t_ceiling).exp() / rate
    }

    fn panels(&self) -> Vec<f64> {
        let mut e = vec![self.t_floor];
        for b in [0.1, 0.25, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0] {
            if b > self.t_floor && b < self.t_ceiling {
                e.push(b);
            }
        }
        e.push(self.t_ceiling);
        e
    }

    fn integrate<F: Fn(f64) -> f64>(&self, f: F, tol: f64) -> Result<f64> {
        let edges = self.panels();
        let panel_tol = tol / (4.0 * edges.len() as f64);
        let mut total = 0.0;
        for w in edges.windows(2) {
            let out = quadrature::double_exponential::integrate(&f, w[0], w[1], panel_tol);
            if !(out.error_estimate <= 10.0 * panel_tol) || !out.integral.is_finite() {
                return Err(Error::Accuracy(format!(
                    "quadrature on [{}, {}] reached only {:e}",
                    w[0], w[1], out.error_estimate
                )));
            }
            total += out.integral;
        }
        Ok(total)
    }

    /// Density of σ₁ for `t ≥ t_floor`.
    pub fn density(&self, t: f64) -> Result<f64> {
        if !(t >= self.t_floor) {
            return Err(Error::InvalidInput(format!(
                "density requested at t = {t} below t_floor = {}",
                self.t_floor
            )));
        }
        let s = survival_1d(t, self.series_terms)?;
        let f = density_1d(t, self.series_terms);
        Ok((self.d as f64 * f * s.powi(self.d as i32 - 1)).max(0.0))
    }

    /// `E[e^{−λσ₁}] = 1 − λ ∫_0^∞ e^{−λt} P[σ₁ > t] dt`.
    pub fn laplace(&self, lambda: f64, tol: f64) -> Result<f64> {
        if !(lambda >= 0.0) || !lambda.is_finite() {
            return Err(Error::InvalidInput(format!(
                "λ must be finite and ≥ 0, got {lambda}"
            )));
        }
        if lambda == 0.0 {
            return Ok(1.0);
        }
        let floor_err = lambda * self.t_floor * self.floor_mass_bound();
        if floor_err > tol / 2.0 {
            return Err(Error::Accuracy(format!(
                "tolerance {tol:e} below the small-time truncation error {floor_err:e}"
            )));
        }
        // survival is 1 on [0, t_floor] up to floor_err
        let head = (1.0 - (-lambda * self.t_floor).exp()) / lambda;
        let body = self.integrate(
            |t| (-lambda * t).exp() * self.survival(t),
            tol / (2.0 * lambda),
        )?;
        let v = 1.0 - lambda * (head + body + self.tail(lambda));
        Ok(v.clamp(0.0, 1.0))
    }

    /// `E[g(σ₁)]` by integrating against the density, with the mass below
    /// `t_floor` assigned the value `g(0)`.
    pub fn expect_with_density<F: Fn(f64) -> f64>(&self, g: F, tol: f64) -> Result<f64> {
        let below = 1.0 - self.survival(self.t_floor);
        let body = self.integrate(
            |t| {
                let s = survival_1d_fast(t);
                let f = density_1d(t, self.series_terms);
                g(t) * self.d as f64 * f * s.powi(self.d as i32 - 1)
            },
            tol,
        )?;
        Ok(below * g(0.0) + body)
    }

    /// `E[σ₁] = ∫_0^∞ P[σ₁ > t] dt`.
    pub fn mean(&self) -> f64 {
        let body = self
            .integrate(|t| self.survival(t), 1e-12)
            .expect("survival quadrature converges");
        self.t_floor + body + self.tail(0.0)
    }

    /// Inverse-CDF sample.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u: f64 = 1.0 - rng.gen::<f64>(); // (0, 1]
        let (mut lo, mut hi) = (SAMPLE_T_LO, SAMPLE_T_HI);
        if self.survival(lo) <= u {
            return lo;
        }
        while hi - lo > SAMPLE_TOL {
            let mid = 0.5 * (lo + hi);
            if self.survival(mid) > u {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }
}

/// Density of σ₁ at `t ≥ t_floor` (default floor).
pub fn density_sigma1(t: f64, d: usize, terms: usize) -> Result<f64> {
    if terms == 0 {
        return Err(Error::InvalidInput(
            "at least one series term is required".into(),
        ));
    }
    ExitLaw {
        series_terms: terms,
        ..ExitLaw::new(d)
    }
    .density(t)
}

pub fn laplace_sigma1(lambda: f64, d: usize, tol: f64) -> Result<f64> {
    if d == 0 {
        return Err(Error::InvalidInput("d must be positive".into()));
    }
    ExitLaw::new(d).laplace(lambda, tol)
}

pub fn sample_sigma1<R: Rng + ?Sized>(d: usize, rng: &mut R) -> f64 {
    ExitLaw::new(d).sample(rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, Domain};

    #[test]
    fn survival_1d_values() {
        let s = survival_1d(1.0, 3).unwrap();
        assert!((s - 0.37082).abs() < 1e-4, "{s}");
        // first omitted term bounds the error of an alternating series
        let s1 = survival_1d(1.0, 1).unwrap();
        assert!((s1 - s).abs() < 4.0 / PI * decay(1, 1.0) / 3.0 + 1e-15);
        assert!(survival_1d(8.0, 40).unwrap() <= 4.0 / PI * (-PI * PI).exp());
        assert!(survival_1d(8.0, 40).unwrap() <= 6.6e-5);
        let a = survival_1d(0.5, 40).unwrap();
        let b = survival_1d(1.0, 40).unwrap();
        let c = survival_1d(2.0, 40).unwrap();
        assert!(a > b && b > c);
    }

    #[test]
    fn survival_errors() {
        assert!(survival_1d(1.0, 0).is_err());
        assert!(survival_1d(0.0, 5).is_err());
        assert!(survival_cube(1.0, 0, 5).is_err());
    }

    #[test]
    fn survival_cube_values() {
        assert_eq!(
            survival_cube(0.7, 1, 40).unwrap(),
            survival_1d(0.7, 40).unwrap()
        );
        let s = survival_cube(1.0, 3, 40).unwrap();
        assert!((s - 0.05100).abs() < 5e-4);
        for t in [0.05, 0.3, 1.0, 3.0] {
            assert!(survival_cube(t, 3, 40).unwrap() <= survival_cube(t, 1, 40).unwrap());
        }
    }

    #[test]
    fn density_integrates_to_one() {
        let law = ExitLaw::new(3);
        let mass = law.integrate(|t| law.density(t).unwrap(), 1e-10).unwrap();
        assert!((mass - 1.0).abs() < 1e-6, "{mass}");
        let want = law.survival(law.t_floor) - law.survival(law.t_ceiling);
        assert!((mass - want).abs() < 1e-9);
    }

    #[test]
    fn density_nonnegative_and_matches_derivative() {
        let law = ExitLaw::new(3);
        for i in 0..1000 {
            let t = law.t_floor + (law.t_ceiling - law.t_floor) * i as f64 / 999.0;
            assert!(law.density(t).unwrap() >= 0.0);
        }
        let h = 1e-5;
        for t in [0.5, 1.0, 2.0] {
            let fd = -(law.survival(t + h) - law.survival(t - h)) / (2.0 * h);
            assert!((fd - law.density(t).unwrap()).abs() < 1e-5);
        }
        assert!(law.density(0.01).is_err());
    }

    #[test]
    fn laplace_matches_closed_form_in_one_dimension() {
        for lambda in [0.1, 0.5, 1.0, 2.0, 5.0] {
            let v = laplace_sigma1(lambda, 1, 1e-11).unwrap();
            let want = 1.0 / (2.0 * lambda).sqrt().cosh();
            assert!((v - want).abs() <= 1e-8, "λ={lambda}: {v} vs {want}");
        }
        assert!((laplace_sigma1(0.5, 1, 1e-10).unwrap() - 0.648054).abs() < 1e-6);
        assert_eq!(laplace_sigma1(0.0, 3, 1e-10).unwrap(), 1.0);
    }

    #[test]
    fn laplace_is_decreasing_and_convex() {
        let vals: Vec<f64> = (0..=40)
            .map(|i| laplace_sigma1(0.25 * i as f64, 3, 1e-11).unwrap())
            .collect();
        for w in vals.windows(2) {
            assert!(w[1] < w[0]);
        }
        for w in vals.windows(3) {
            assert!(w[0] - 2.0 * w[1] + w[2] >= -1e-8);
        }
    }

    #[test]
    fn laplace_forms_agree() {
        let law = ExitLaw::new(3);
        for lambda in [0.3, 1.978, 4.0] {
            let a = law.laplace(lambda, 1e-11).unwrap();
            let b = law
                .expect_with_density(|t| (-lambda * t).exp(), 1e-11)
                .unwrap();
            assert!((a - b).abs() < 1e-6, "{a} {b}");
        }
    }

    #[test]
    fn laplace_rejects_bad_input() {
        assert!(laplace_sigma1(-1.0, 3, 1e-8).is_err());
        assert!(laplace_sigma1(f64::NAN, 3, 1e-8).is_err());
        assert!(matches!(
            laplace_sigma1(1.0, 3, 1e-30),
            Err(Error::Accuracy(_))
        ));
    }

    #[test]
    fn mean_exit_time() {
        assert!((ExitLaw::new(1).mean() - 1.0).abs() < 1e-9);
        let m3 = ExitLaw::new(3).mean();
        let by_density = ExitLaw::new(3).expect_with_density(|t| t, 1e-11).unwrap();
        assert!((m3 - by_density).abs() < 1e-7, "{m3} {by_density}");
    }

    #[test]
    fn samples_are_positive_with_correct_mean() {
        for (d, seed) in [(1usize, 1u64), (3, 2)] {
            let law = ExitLaw::new(d);
            let mut rng = stream(seed, Domain::Sigma1, 0);
            let n = 100_000;
            let xs: Vec<f64> = (0..n).map(|_| law.sample(&mut rng)).collect();
            assert!(xs.iter().all(|&x| x > 0.0));
            let mean = xs.iter().sum::<f64>() / n as f64;
            let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
            let se = (var / n as f64).sqrt();
            assert!((mean - law.mean()).abs() < 3.0 * se, "d={d} mean={mean}");
            if d == 1 {
                assert!((mean - 1.0).abs() < 0.02);
            }
        }
    }

    #[test]
    fn laplace_monte_carlo_cross_check() {
        let law = ExitLaw::new(3);
        let lambda = 0.659463 * 3.0;
        let exact = law.laplace(lambda, 1e-11).unwrap();
        let mut rng = stream(3, Domain::Sigma1, 0);
        let n = 100_000;
        let ys: Vec<f64> = (0..n)
            .map(|_| (-lambda * law.sample(&mut rng)).exp())
            .collect();
        let mean = ys.iter().sum::<f64>() / n as f64;
        let var = ys.iter().map(|y| (y - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        assert!((mean - exact).abs() < 3.0 * (var / n as f64).sqrt());
    }
}
