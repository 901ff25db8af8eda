//! Summation, power means in log space, bootstrap intervals and a few
//! closed-form distribution helpers.

use rand::Rng;
use rayon::prelude::*;

use crate::rng::Stream;

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct NeumaierSum {
    sum: f64,
    comp: f64,
}

impl NeumaierSum {
    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn sum(&self) -> f64 {
        self.sum + self.comp
    }
}

pub fn compensated_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut acc = NeumaierSum::default();
    for v in values {
        acc.add(v);
    }
    acc.sum()
}

pub fn mean(values: &[f64]) -> f64 {
    compensated_sum(values.iter().copied()) / values.len() as f64
}

/// Unbiased sample variance.
pub fn variance(values: &[f64]) -> f64 {
    let m = mean(values);
    compensated_sum(values.iter().map(|v| (v - m) * (v - m))) / (values.len() as f64 - 1.0)
}

/// `[mean(x_i^ell)]^{1/ell}` for nonnegative `x_i`, computed in log space
/// so that large exponents neither overflow nor lose the small terms.
#[derive(Debug, Clone)]
pub struct PowerMean {
    ell: f64,
    shift: f64,
    scaled: Vec<f64>,
}

impl PowerMean {
    pub fn new(magnitudes: &[f64], ell: f64) -> Self {
        assert!(ell > 0.0);
        let logs: Vec<f64> = magnitudes
            .iter()
            .map(|&x| {
                debug_assert!(x >= 0.0 || x.is_nan());
                ell * x.ln()
            })
            .collect();
        let shift = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let scaled = if shift == f64::NEG_INFINITY {
            vec![0.0; logs.len()]
        } else {
            logs.iter().map(|l| (l - shift).exp()).collect()
        };
        Self { ell, shift, scaled }
    }

    fn finish(&self, mean_scaled: f64) -> f64 {
        if self.shift == f64::NEG_INFINITY || mean_scaled == 0.0 {
            return 0.0;
        }
        ((self.shift + mean_scaled.ln()) / self.ell).exp()
    }

    pub fn estimate(&self) -> f64 {
        self.finish(mean(&self.scaled))
    }

    /// Percentile bootstrap interval at confidence `level` (e.g. 0.99).
    pub fn bootstrap_ci(&self, resamples: usize, level: f64, stream: Stream) -> (f64, f64) {
        let n = self.scaled.len();
        if self.shift == f64::NEG_INFINITY {
            return (0.0, 0.0);
        }
        let mut stats: Vec<f64> = (0..resamples as u64)
            .into_par_iter()
            .map(|b| {
                let mut rng = stream.at(b);
                let mut acc = NeumaierSum::default();
                for _ in 0..n {
                    acc.add(self.scaled[rng.random_range(0..n)]);
                }
                self.finish(acc.sum() / n as f64)
            })
            .collect();
        stats.sort_by(f64::total_cmp);
        let tail = 0.5 * (1.0 - level);
        (quantile_sorted(&stats, tail), quantile_sorted(&stats, 1.0 - tail))
    }
}

/// Linear-interpolated quantile of an ascending slice.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty());
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] + frac * (sorted[hi] - sorted[lo])
}

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

/// `P(lo < X < hi)` for `X ~ N(mean, sd^2)`, computed from whichever tail is
/// more accurate.
pub fn normal_interval_mass(lo: f64, hi: f64, mean: f64, sd: f64) -> f64 {
    let a = (lo - mean) / sd;
    let b = (hi - mean) / sd;
    if a >= 0.0 {
        normal_cdf(-a) - normal_cdf(-b)
    } else {
        normal_cdf(b) - normal_cdf(a)
    }
}

/// Standard error of a binomial proportion.
pub fn binomial_stderr(p: f64, n: usize) -> f64 {
    (p * (1.0 - p) / n as f64).sqrt()
}

/// Least-squares fit `y ≈ intercept + slope·x`.
pub fn ols(x: &[f64], y: &[f64]) -> (f64, f64) {
    assert_eq!(x.len(), y.len());
    let mx = mean(x);
    let my = mean(y);
    let sxy = compensated_sum(x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)));
    let sxx = compensated_sum(x.iter().map(|a| (a - mx) * (a - mx)));
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SeedKey;

    #[test]
    fn neumaier_recovers_cancelled_terms() {
        let v = [1.0, 1e100, 1.0, -1e100];
        assert_eq!(compensated_sum(v), 2.0);
    }

    #[test]
    fn power_mean_matches_naive_on_small_values() {
        let xs = [0.5, 1.0, 2.0, 3.0];
        let pm = PowerMean::new(&xs, 3.0);
        let naive = (xs.iter().map(|x: &f64| x.powi(3)).sum::<f64>() / 4.0).cbrt();
        assert!((pm.estimate() - naive).abs() < 1e-14);
    }

    #[test]
    fn power_mean_survives_overflowing_powers() {
        let xs = [1e40, 2e40];
        let pm = PowerMean::new(&xs, 16.0);
        let want = 1e40 * ((1.0 + 2f64.powi(16)) / 2.0).powf(1.0 / 16.0);
        assert!(((pm.estimate() - want) / want).abs() < 1e-12);
    }

    #[test]
    fn power_mean_of_zeros_is_zero() {
        let pm = PowerMean::new(&[0.0, 0.0], 2.0);
        assert_eq!(pm.estimate(), 0.0);
        let s = SeedKey::new(0).stream(0);
        assert_eq!(pm.bootstrap_ci(10, 0.99, s), (0.0, 0.0));
    }

    #[test]
    fn bootstrap_ci_brackets_estimate() {
        let xs: Vec<f64> = (1..=500).map(|i| (i as f64).sqrt()).collect();
        let pm = PowerMean::new(&xs, 2.0);
        let (lo, hi) = pm.bootstrap_ci(200, 0.99, SeedKey::new(3).stream(0));
        let est = pm.estimate();
        assert!(lo < est && est < hi, "{lo} {est} {hi}");
    }

    #[test]
    fn normal_cdf_reference_values() {
        assert!((normal_cdf(0.0) - 0.5).abs() < 1e-16);
        assert!((2.0 * normal_cdf(1.0) - 1.0 - 0.682_689_492_137_085_9).abs() < 1e-15);
        assert!((normal_cdf(-8.0) - 6.220_960_574_271_785e-16).abs() < 1e-28);
    }

    #[test]
    fn ols_exact_line() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let y: Vec<f64> = x.iter().map(|v| 0.5 + 1.25 * v).collect();
        let (s, b) = ols(&x, &y);
        assert!((s - 1.25).abs() < 1e-14 && (b - 0.5).abs() < 1e-14);
    }
}
