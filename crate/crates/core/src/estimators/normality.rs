//! Kolmogorov-Smirnov testing against the standard normal, with a
//! simulated Lilliefors null for standardized samples.

use statrs::function::erf::erfc;

use crate::error::{Error, Result};
use crate::rng::CounterRng;

use super::stats::Moments;

pub fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

pub fn normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// Sup distance between the empirical CDF of `xs` and `Phi`.
pub fn ks_statistic(xs: &[f64]) -> f64 {
    let mut sorted = xs.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let n = sorted.len() as f64;
    sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = normal_cdf(x);
            let above = (i + 1) as f64 / n - f;
            let below = f - i as f64 / n;
            above.max(below)
        })
        .fold(0.0, f64::max)
}

/// Asymptotic Kolmogorov survival function `P(K > lambda)`.
pub fn kolmogorov_survival(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 1.0;
    }
    if lambda < 1.18 {
        let pi2 = std::f64::consts::PI.powi(2);
        let mut cdf = 0.0;
        for k in 1..=20 {
            let j = (2 * k - 1) as f64;
            cdf += (-j * j * pi2 / (8.0 * lambda * lambda)).exp();
        }
        cdf *= (2.0 * std::f64::consts::PI).sqrt() / lambda;
        (1.0 - cdf).clamp(0.0, 1.0)
    } else {
        let mut q = 0.0;
        for k in 1..=100 {
            let kf = k as f64;
            let term = (-2.0 * kf * kf * lambda * lambda).exp();
            q += if k % 2 == 1 { term } else { -term };
            if term < 1e-17 {
                break;
            }
        }
        (2.0 * q).clamp(0.0, 1.0)
    }
}

/// Asymptotic p-value for statistic `d` at sample size `n`, with the
/// usual small-sample scaling of the argument.
pub fn ks_pvalue(d: f64, n: usize) -> f64 {
    let sn = (n as f64).sqrt();
    kolmogorov_survival((sn + 0.12 + 0.11 / sn) * d)
}

/// Values standardized by their own mean and standard deviation.
pub fn standardize(xs: &[f64]) -> Result<Vec<f64>> {
    let m = Moments::of(xs)?;
    let sd = m.variance.sqrt();
    if sd <= 0.0 {
        return Err(Error::Domain("sample has zero variance".into()));
    }
    Ok(xs.iter().map(|x| (x - m.mean) / sd).collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KsResult {
    pub statistic: f64,
    /// Asymptotic Kolmogorov p-value (conservative for standardized data).
    pub p_value: f64,
}

/// KS test of standardized `xs` against `N(0,1)`.
pub fn ks_test_standardized(xs: &[f64]) -> Result<KsResult> {
    let z = standardize(xs)?;
    let d = ks_statistic(&z);
    Ok(KsResult {
        statistic: d,
        p_value: ks_pvalue(d, z.len()),
    })
}

/// Simulated null distribution of the KS statistic for standardized
/// normal samples of one size.
#[derive(Debug, Clone)]
pub struct LillieforsNull {
    pub sample_size: usize,
    sorted: Vec<f64>,
}

impl LillieforsNull {
    pub fn simulate(sample_size: usize, simulations: usize, seed: u64) -> Result<Self> {
        if sample_size < 5 || simulations < 10 {
            return Err(Error::InsufficientData(
                "Lilliefors null needs sample size >= 5 and >= 10 simulations".into(),
            ));
        }
        let mut rng = CounterRng::new(seed ^ (sample_size as u64).wrapping_mul(0x9E37_79B9));
        let mut buf = vec![0.0; sample_size];
        let mut sorted: Vec<f64> = (0..simulations)
            .map(|_| {
                for v in &mut buf {
                    *v = rng.next_normal();
                }
                let z = standardize(&buf).expect("simulated sample has spread");
                ks_statistic(&z)
            })
            .collect();
        sorted.sort_by(|a, b| a.total_cmp(b));
        Ok(LillieforsNull {
            sample_size,
            sorted,
        })
    }

    /// Upper `alpha` critical value.
    pub fn critical_value(&self, alpha: f64) -> f64 {
        let m = self.sorted.len();
        let idx = (((1.0 - alpha) * m as f64).ceil() as usize).clamp(1, m) - 1;
        self.sorted[idx]
    }

    /// Monte Carlo p-value `(1 + #{D* >= d}) / (1 + M)`.
    pub fn p_value(&self, d: f64) -> f64 {
        let below = self.sorted.partition_point(|&x| x < d);
        let at_or_above = self.sorted.len() - below;
        (1 + at_or_above) as f64 / (1 + self.sorted.len()) as f64
    }
}
