//! Truncated arm (connection) probabilities.

use std::ops::Range;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::field::FieldSampler;
use crate::geometry::{arm_events, connection_event, label_with_selection, Selection};

use super::stats::{ols_slope, wilson_interval};

#[derive(Debug, Clone, PartialEq)]
pub struct ArmOptions {
    pub level: f64,
    pub radii: Vec<f64>,
    /// Normal quantile for the Wilson intervals.
    pub z: f64,
}

impl Default for ArmOptions {
    fn default() -> Self {
        ArmOptions {
            level: -0.5,
            radii: vec![2.0, 4.0, 8.0],
            z: 1.96,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArmRow {
    pub m: f64,
    pub trials: usize,
    pub events: usize,
    pub p_hat: f64,
    pub se: f64,
    pub wilson_lo: f64,
    pub wilson_hi: f64,
    /// Events `Lambda_1 <-> ∂Lambda_m` without the bounded-component restriction.
    pub connections: usize,
    pub p_connect: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ArmTable {
    pub rows: Vec<ArmRow>,
    /// Slope of `log p_hat` against `m` over rows with at least one event.
    pub slope: Option<f64>,
    /// Same fit for the unrestricted connection probability.
    pub connect_slope: Option<f64>,
    /// No arm event was seen at any radius.
    pub censored: bool,
}

fn log_linear_slope(ms: &[f64], ps: &[f64]) -> Option<f64> {
    let (xs, ys): (Vec<f64>, Vec<f64>) = ms
        .iter()
        .zip(ps)
        .filter(|(_, &p)| p > 0.0)
        .map(|(&m, &p)| (m, p.ln()))
        .unzip();
    ols_slope(&xs, &ys)
}

pub fn arm_decay(
    sampler: &FieldSampler,
    master_seed: u64,
    replicates: Range<u64>,
    options: &ArmOptions,
) -> Result<ArmTable> {
    if options.radii.is_empty() {
        return Err(Error::Domain("no radii given".into()));
    }
    if replicates.is_empty() {
        return Err(Error::InsufficientData("no replicates".into()));
    }
    let per_rep: Vec<(Vec<bool>, Vec<bool>)> = replicates
        .into_par_iter()
        .map(|rep| -> Result<_> {
            let f = sampler.sample(master_seed, rep);
            let lab = label_with_selection(&f, options.level, Selection::Finitary);
            let arms = arm_events(&lab, &options.radii)?;
            let conns = options
                .radii
                .iter()
                .map(|&m| connection_event(&lab, m))
                .collect::<Result<Vec<_>>>()?;
            Ok((arms, conns))
        })
        .collect::<Result<_>>()?;

    let trials = per_rep.len();
    let rows: Vec<ArmRow> = options
        .radii
        .iter()
        .enumerate()
        .map(|(i, &m)| {
            let events = per_rep.iter().filter(|(a, _)| a[i]).count();
            let connections = per_rep.iter().filter(|(_, c)| c[i]).count();
            let n = trials as f64;
            let p = events as f64 / n;
            let (lo, hi) = wilson_interval(events, trials, options.z);
            ArmRow {
                m,
                trials,
                events,
                p_hat: p,
                se: (p * (1.0 - p) / n).sqrt(),
                wilson_lo: lo,
                wilson_hi: hi,
                connections,
                p_connect: connections as f64 / n,
            }
        })
        .collect();
    let ms: Vec<f64> = rows.iter().map(|r| r.m).collect();
    let ps: Vec<f64> = rows.iter().map(|r| r.p_hat).collect();
    let pc: Vec<f64> = rows.iter().map(|r| r.p_connect).collect();
    Ok(ArmTable {
        censored: rows.iter().all(|r| r.events == 0),
        slope: log_linear_slope(&ms, &ps),
        connect_slope: log_linear_slope(&ms, &pc),
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::{KernelFamily, KernelSpec};

    fn sampler() -> FieldSampler {
        let k = KernelSpec::new(KernelFamily::BargmannFock, 2, 0.5).unwrap();
        FieldSampler::new(&k, 6.0, 0.25).unwrap()
    }

    #[test]
    fn very_low_level_is_censored() {
        let o = ArmOptions {
            level: -8.0,
            radii: vec![2.0, 4.0],
            z: 1.96,
        };
        let t = arm_decay(&sampler(), 1, 0..10, &o).unwrap();
        assert!(t.censored);
        assert!(t.slope.is_none());
        assert!(t.rows.iter().all(|r| r.p_hat == 0.0 && r.p_connect == 1.0));
    }

    #[test]
    fn arm_implies_connection_and_rows_are_consistent() {
        let o = ArmOptions {
            level: 0.5,
            radii: vec![2.0, 3.0, 5.0],
            z: 1.96,
        };
        let t = arm_decay(&sampler(), 2, 0..40, &o).unwrap();
        for r in &t.rows {
            assert_eq!(r.trials, 40);
            assert!(r.events <= r.connections);
            assert!(r.wilson_lo <= r.p_hat && r.p_hat <= r.wilson_hi);
        }
        // Connection to a larger box implies connection to a smaller one.
        assert!(t.rows[0].connections >= t.rows[2].connections);
    }

    #[test]
    fn radius_outside_box_is_rejected() {
        let o = ArmOptions {
            radii: vec![6.0],
            ..ArmOptions::default()
        };
        assert!(arm_decay(&sampler(), 1, 0..2, &o).is_err());
    }
}
