//! Monte Carlo estimators and analytic reference values.

pub mod arm;
pub mod decay;
pub mod kac_rice;
pub mod normality;
pub mod stats;

use crate::error::{Error, Result};
use crate::geometry::Functional;

pub use arm::{arm_decay, ArmOptions, ArmRow, ArmTable};
pub use decay::{
    delta_moment_decay, perturbation_decay, DecayOptions, DecayRow, DecayTable, PerturbationDecay,
};
pub use kac_rice::{kac_rice_ec, kac_rice_sa};
pub use normality::{ks_test_standardized, LillieforsNull};
pub use stats::Moments;

/// One replicate's value of one functional.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct FunctionalRecord {
    pub star: Functional,
    pub level: f64,
    pub n: f64,
    pub epsilon: f64,
    pub replicate: u64,
    pub value: f64,
}

/// Mean of `mu / (2n)^d` and its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CStarEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub count: usize,
}

impl CStarEstimate {
    /// Normal-approximation two-sided interval.
    pub fn interval(&self, z: f64) -> (f64, f64) {
        (
            self.mean - z * self.std_error,
            self.mean + z * self.std_error,
        )
    }
}

/// Estimates the first-order constant from records sharing `(star, level, n, eps)`.
pub fn estimate_c_star(records: &[FunctionalRecord], dim: usize) -> Result<CStarEstimate> {
    let first = records
        .first()
        .ok_or_else(|| Error::InsufficientData("no records".into()))?;
    if records.iter().any(|r| {
        r.star != first.star
            || r.level != first.level
            || r.n != first.n
            || r.epsilon != first.epsilon
    }) {
        return Err(Error::Domain(
            "records mix functionals, levels, box sizes or epsilons".into(),
        ));
    }
    let scale = (2.0 * first.n).powi(dim as i32);
    let xs: Vec<f64> = records.iter().map(|r| r.value / scale).collect();
    let m = Moments::of(&xs)?;
    Ok(CStarEstimate {
        mean: m.mean,
        std_error: m.std_error(),
        count: m.count,
    })
}

#[derive(Debug, Clone, Copy, Default)]
pub struct CltOptions {
    /// Simulations for the Lilliefors null; zero skips the calibrated test.
    pub lilliefors_simulations: usize,
    pub seed: u64,
}

/// Per-`n` statistics of one functional.
#[derive(Debug, Clone, PartialEq)]
pub struct CltRow {
    pub n: f64,
    pub moments: Moments,
    /// `Var / (2n)^d`.
    pub vnorm: f64,
    pub ks: f64,
    /// Asymptotic Kolmogorov p-value.
    pub ks_p: f64,
    /// Lilliefors (simulated null) p-value.
    pub lilliefors_p: Option<f64>,
    /// Lilliefors critical value at the 1% level.
    pub lilliefors_critical_01: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CltReport {
    pub rows: Vec<CltRow>,
}

impl CltReport {
    /// `v_{n_{i+1}} / v_{n_i}` for consecutive box sizes.
    pub fn vnorm_ratios(&self) -> Vec<f64> {
        self.rows
            .windows(2)
            .map(|w| w[1].vnorm / w[0].vnorm)
            .collect()
    }

    pub fn row(&self, n: f64) -> Option<&CltRow> {
        self.rows.iter().find(|r| r.n == n)
    }
}

/// Minimum replicates per box size accepted by [`clt_report`].
pub const MIN_CLT_REPLICATES: usize = 100;

/// Variance scaling and normality diagnostics across box sizes.
pub fn clt_report(
    records: &[FunctionalRecord],
    dim: usize,
    options: CltOptions,
) -> Result<CltReport> {
    let mut ns: Vec<f64> = records.iter().map(|r| r.n).collect();
    ns.sort_by(|a, b| a.total_cmp(b));
    ns.dedup();
    if ns.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "need at least 2 distinct n, got {}",
            ns.len()
        )));
    }
    let mut rows = Vec::with_capacity(ns.len());
    for n in ns {
        let mut group: Vec<&FunctionalRecord> = records.iter().filter(|r| r.n == n).collect();
        group.sort_by_key(|r| r.replicate);
        if group.len() < MIN_CLT_REPLICATES {
            return Err(Error::InsufficientData(format!(
                "n = {n}: {} replicates, need at least {MIN_CLT_REPLICATES}",
                group.len()
            )));
        }
        let xs: Vec<f64> = group.iter().map(|r| r.value).collect();
        let moments = Moments::of(&xs)?;
        let (ks, ks_p, lp, crit) = match normality::standardize(&xs) {
            Ok(z) => {
                let d = normality::ks_statistic(&z);
                let (lp, crit) = if options.lilliefors_simulations > 0 {
                    let null = LillieforsNull::simulate(
                        z.len(),
                        options.lilliefors_simulations,
                        options.seed,
                    )?;
                    (Some(null.p_value(d)), Some(null.critical_value(0.01)))
                } else {
                    (None, None)
                };
                (d, normality::ks_pvalue(d, z.len()), lp, crit)
            }
            // A constant sample is maximally non-normal.
            Err(_) => (1.0, 0.0, Some(0.0), None),
        };
        rows.push(CltRow {
            n,
            vnorm: moments.variance / (2.0 * n).powi(dim as i32),
            moments,
            ks,
            ks_p,
            lilliefors_p: lp,
            lilliefors_critical_01: crit,
        });
    }
    Ok(CltReport { rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Exp, StandardNormal};

    fn records(values: &[f64], n: f64) -> Vec<FunctionalRecord> {
        values
            .iter()
            .enumerate()
            .map(|(i, &v)| FunctionalRecord {
                star: Functional::Vol,
                level: -0.5,
                n,
                epsilon: 0.25,
                replicate: i as u64,
                value: v,
            })
            .collect()
    }

    #[test]
    fn c_star_mean_and_error() {
        let recs = records(&[16.0, 32.0, 48.0], 2.0);
        let est = estimate_c_star(&recs, 2).unwrap();
        assert!((est.mean - 2.0).abs() < 1e-15);
        assert!((est.std_error - (1.0f64 / 3.0).sqrt()).abs() < 1e-12);
        assert!(estimate_c_star(&[], 2).is_err());
        let mut mixed = recs.clone();
        mixed[0].level = 0.0;
        assert!(estimate_c_star(&mixed, 2).is_err());
    }

    #[test]
    fn clt_needs_two_box_sizes() {
        let recs = records(&[1.0; 20], 2.0);
        assert!(matches!(
            clt_report(&recs, 2, CltOptions::default()),
            Err(Error::InsufficientData(_))
        ));
    }

    #[test]
    fn normal_input_is_rarely_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut accepted = 0;
        for _ in 0..100 {
            let a: Vec<f64> = (0..200).map(|_| StandardNormal.sample(&mut rng)).collect();
            let b: Vec<f64> = (0..200).map(|_| StandardNormal.sample(&mut rng)).collect();
            let mut recs = records(&a, 1.0);
            recs.extend(records(&b, 2.0));
            let rep = clt_report(&recs, 2, CltOptions::default()).unwrap();
            if rep.rows[0].ks_p > 0.05 {
                accepted += 1;
            }
        }
        assert!(accepted >= 90, "{accepted}");
    }

    #[test]
    fn exponential_input_is_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let exp = Exp::new(1.0).unwrap();
        let a: Vec<f64> = (0..500).map(|_| exp.sample(&mut rng)).collect();
        let mut recs = records(&a, 1.0);
        recs.extend(records(&a, 2.0));
        let opts = CltOptions {
            lilliefors_simulations: 500,
            seed: 1,
        };
        let rep = clt_report(&recs, 2, opts).unwrap();
        assert!(rep.rows[0].ks_p < 0.01);
        assert!(rep.rows[0].lilliefors_p.unwrap() < 0.01);
    }

    #[test]
    fn gaussian_moments_within_four_standard_errors() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let a: Vec<f64> = (0..2000).map(|_| StandardNormal.sample(&mut rng)).collect();
        let b: Vec<f64> = (0..2000).map(|_| StandardNormal.sample(&mut rng)).collect();
        let mut recs = records(&a, 1.0);
        recs.extend(records(&b, 2.0));
        let rep = clt_report(&recs, 2, CltOptions::default()).unwrap();
        for row in &rep.rows {
            let m = &row.moments;
            assert!(m.skewness.abs() < 4.0 * m.skewness_se());
            assert!(m.excess_kurtosis.abs() < 4.0 * m.kurtosis_se());
        }
        // Variance 1 at both sizes: vnorm = 1/4 and 1/16.
        let r = rep.vnorm_ratios();
        assert!((r[0] - 0.25).abs() < 0.05);
    }
}
