//! Small statistical helpers shared by the experiments.

use serde::{Deserialize, Serialize};

/// A Monte Carlo proportion or mean with its standard error.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub std_error: f64,
    pub samples: usize,
    pub seed: u64,
}

impl Estimate {
    /// Proportion `count / samples` with the binomial standard error.
    pub fn proportion(count: usize, samples: usize, seed: u64) -> Estimate {
        let p = if samples == 0 {
            0.0
        } else {
            count as f64 / samples as f64
        };
        let se = if samples == 0 {
            0.0
        } else {
            (p * (1.0 - p) / samples as f64).sqrt()
        };
        Estimate {
            mean: p,
            std_error: se,
            samples,
            seed,
        }
    }

    /// Sample mean with the standard error from the unbiased variance.
    pub fn from_values(values: &[f64], seed: u64) -> Estimate {
        let (mean, var) = mean_var(values);
        Estimate {
            mean,
            std_error: (var / values.len().max(1) as f64).sqrt(),
            samples: values.len(),
            seed,
        }
    }
}

/// Sample mean and unbiased variance; variance is zero for fewer than two values.
pub fn mean_var(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (0.0, 0.0);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, var)
}

/// One-sample Kolmogorov–Smirnov distance `sup_t |F_n(t) − F(t)|`.
///
/// Tied sample values are handled by comparing `F` against the empirical CDF
/// just before and just after each distinct value.
pub fn ks_distance<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> f64 {
    let mut xs = samples.to_vec();
    xs.sort_by(|a, b| a.total_cmp(b));
    let n = xs.len() as f64;
    let mut d: f64 = 0.0;
    let mut i = 0;
    while i < xs.len() {
        let x = xs[i];
        let mut j = i;
        while j < xs.len() && xs[j] == x {
            j += 1;
        }
        let f = cdf(x);
        d = d
            .max((f - i as f64 / n).abs())
            .max((j as f64 / n - f).abs());
        i = j;
    }
    d
}

/// Pearson chi-square statistic for observed counts against probabilities.
pub fn chi_square(observed: &[u64], probs: &[f64]) -> f64 {
    let n: u64 = observed.iter().sum();
    observed
        .iter()
        .zip(probs)
        .filter(|(_, &p)| p > 0.0)
        .map(|(&o, &p)| {
            let e = p * n as f64;
            (o as f64 - e).powi(2) / e
        })
        .sum()
}

/// Round to six decimals for output.
pub fn round6(x: f64) -> f64 {
    (x * 1e6).round() / 1e6
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ks_uniform_grid() {
        let xs: Vec<f64> = (1..=10).map(|i| i as f64 / 10.0).collect();
        let d = ks_distance(&xs, |t| t.clamp(0.0, 1.0));
        assert!((d - 0.1).abs() < 1e-12);
    }

    #[test]
    fn ks_with_ties() {
        // all mass at 0.5 against uniform: jump from 0 to 1 at 0.5
        let xs = vec![0.5; 4];
        let d = ks_distance(&xs, |t| t);
        assert!((d - 0.5).abs() < 1e-12);
    }

    #[test]
    fn chi_square_exact_fit_is_zero() {
        assert_eq!(chi_square(&[25, 25, 50], &[0.25, 0.25, 0.5]), 0.0);
        assert!((chi_square(&[30, 20], &[0.5, 0.5]) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn estimates() {
        let e = Estimate::proportion(25, 100, 0);
        assert_eq!(e.mean, 0.25);
        assert!((e.std_error - (0.25f64 * 0.75 / 100.0).sqrt()).abs() < 1e-15);
        let e = Estimate::from_values(&[1.0, 2.0, 3.0], 0);
        assert_eq!(e.mean, 2.0);
        assert!((e.std_error - (1.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert_eq!(round6(0.1234565), 0.123457);
    }
}
