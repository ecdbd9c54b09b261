//! Summary statistics with compensated summation, intervals and fits.

use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{Error, Result};

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

pub fn compensated_sum(xs: impl IntoIterator<Item = f64>) -> f64 {
    let mut s = CompensatedSum::default();
    for x in xs {
        s.add(x);
    }
    s.value()
}

/// Sample moments of a finite data set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Moments {
    pub count: usize,
    pub mean: f64,
    /// Unbiased sample variance.
    pub variance: f64,
    /// `m3 / m2^{3/2}` with central moments `m_k`.
    pub skewness: f64,
    /// `m4 / m2^2 - 3`.
    pub excess_kurtosis: f64,
}

impl Moments {
    pub fn of(xs: &[f64]) -> Result<Self> {
        let n = xs.len();
        if n < 2 {
            return Err(Error::InsufficientData(format!(
                "need at least 2 values, got {n}"
            )));
        }
        if xs.iter().any(|x| !x.is_finite()) {
            return Err(Error::Domain("non-finite value in sample".into()));
        }
        let nf = n as f64;
        let mean = compensated_sum(xs.iter().copied()) / nf;
        let m2 = compensated_sum(xs.iter().map(|x| (x - mean).powi(2))) / nf;
        let m3 = compensated_sum(xs.iter().map(|x| (x - mean).powi(3))) / nf;
        let m4 = compensated_sum(xs.iter().map(|x| (x - mean).powi(4))) / nf;
        let (skewness, excess_kurtosis) = if m2 > 0.0 {
            (m3 / m2.powf(1.5), m4 / (m2 * m2) - 3.0)
        } else {
            (0.0, 0.0)
        };
        Ok(Moments {
            count: n,
            mean,
            variance: m2 * nf / (nf - 1.0),
            skewness,
            excess_kurtosis,
        })
    }

    pub fn std_error(&self) -> f64 {
        (self.variance / self.count as f64).sqrt()
    }

    /// Standard error of the sample skewness under normality.
    pub fn skewness_se(&self) -> f64 {
        let n = self.count as f64;
        (6.0 * n * (n - 1.0) / ((n - 2.0) * (n + 1.0) * (n + 3.0))).sqrt()
    }

    /// Standard error of the sample excess kurtosis under normality.
    pub fn kurtosis_se(&self) -> f64 {
        let n = self.count as f64;
        2.0 * self.skewness_se() * ((n * n - 1.0) / ((n - 3.0) * (n + 5.0))).sqrt()
    }

    /// One-sided lower confidence bound for the variance.
    pub fn variance_lower_bound(&self, confidence: f64) -> Result<f64> {
        let dof = (self.count - 1) as f64;
        let chi = ChiSquared::new(dof).map_err(|e| Error::Domain(e.to_string()))?;
        Ok(dof * self.variance / chi.inverse_cdf(confidence))
    }
}

/// Wilson score interval for a binomial proportion.
pub fn wilson_interval(successes: usize, trials: usize, z: f64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let centre = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

/// Least-squares slope of `ys` against `xs`.
pub fn ols_slope(xs: &[f64], ys: &[f64]) -> Option<f64> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return None;
    }
    let n = xs.len() as f64;
    let mx = compensated_sum(xs.iter().copied()) / n;
    let my = compensated_sum(ys.iter().copied()) / n;
    let sxy = compensated_sum(xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)));
    let sxx = compensated_sum(xs.iter().map(|x| (x - mx).powi(2)));
    if sxx == 0.0 {
        None
    } else {
        Some(sxy / sxx)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compensated_sum_recovers_small_terms() {
        let xs = [1e16, 1.0, -1e16, 1.0];
        assert_eq!(compensated_sum(xs), 2.0);
    }

    #[test]
    fn moments_of_small_sample() {
        let m = Moments::of(&[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(m.mean, 2.5);
        assert!((m.variance - 5.0 / 3.0).abs() < 1e-15);
        assert!(m.skewness.abs() < 1e-15);
        assert!((m.excess_kurtosis - (-1.36)).abs() < 1e-12);
        assert!(Moments::of(&[1.0]).is_err());
    }

    #[test]
    fn wilson_interval_brackets_estimate() {
        let (lo, hi) = wilson_interval(30, 100, 1.96);
        assert!(lo < 0.3 && hi > 0.3);
        assert!((lo - 0.2189).abs() < 1e-3 && (hi - 0.3958).abs() < 1e-3);
        let (lo, _) = wilson_interval(0, 100, 1.96);
        assert_eq!(lo, 0.0);
    }

    #[test]
    fn slope_of_line() {
        let xs = [0.0, 1.0, 2.0, 3.0];
        let ys: Vec<f64> = xs.iter().map(|x| 2.0 - 3.0 * x).collect();
        assert!((ols_slope(&xs, &ys).unwrap() + 3.0).abs() < 1e-12);
        assert!(ols_slope(&[1.0], &[1.0]).is_none());
    }

    #[test]
    fn variance_lower_bound_below_estimate() {
        let xs: Vec<f64> = (0..50).map(|i| (i as f64 * 0.37).sin()).collect();
        let m = Moments::of(&xs).unwrap();
        let lb = m.variance_lower_bound(0.95).unwrap();
        assert!(lb > 0.0 && lb < m.variance);
    }
}
