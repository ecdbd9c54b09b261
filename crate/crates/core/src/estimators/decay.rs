//! Local-resampling decay: how far the effect of redrawing the noise on one
//! unit cube reaches.

use std::ops::Range;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::field::FieldSampler;
use crate::geometry::{cube_values, label_with_selection, Functional, Selection};
use crate::lattice::SiteBox;

use super::stats::{ols_slope, CompensatedSum};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayOptions {
    pub functional: Functional,
    pub level: f64,
    pub selection: Selection,
    /// Cubes `B_w` with `|w|` up to this distance are tabulated.
    pub max_distance: f64,
    /// Exponent of the higher moment `E|Delta|^p`.
    pub moment_exponent: f64,
    /// Distances used for the log-log fit (inclusive).
    pub fit_range: (f64, f64),
    /// Redraw `B_0` with the `W` stream itself, which must give `Delta = 0`.
    pub reuse_noise: bool,
}

impl Default for DecayOptions {
    fn default() -> Self {
        DecayOptions {
            functional: Functional::Vol,
            level: -0.5,
            selection: Selection::Finitary,
            max_distance: 10.0,
            moment_exponent: 2.5,
            fit_range: (2.0, 10.0),
            reuse_noise: false,
        }
    }
}

/// One distance bin (`|w|` rounded to the nearest integer).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayRow {
    pub distance: f64,
    pub count: usize,
    pub mean_abs: f64,
    pub mean_pow: f64,
    /// Standard error of `mean_abs`.
    pub se: f64,
    pub max_abs: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecayTable {
    pub rows: Vec<DecayRow>,
    /// Slope of `log mean_abs` against `log(1 + |w|)`; `None` when fewer than
    /// two bins in the fit range have a non-zero mean.
    pub slope: Option<f64>,
    /// Every recorded `Delta` was exactly zero.
    pub degenerate: bool,
    pub max_abs: f64,
}

impl DecayTable {
    /// Adjacent bins where the mean goes up by more than `z` combined standard errors.
    pub fn inversions(&self, z: f64) -> usize {
        self.rows
            .windows(2)
            .filter(|w| {
                let se = (w[0].se.powi(2) + w[1].se.powi(2)).sqrt();
                w[1].mean_abs - w[0].mean_abs > z * se
            })
            .count()
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct Bin {
    abs: CompensatedSum,
    pow: CompensatedSum,
    sq: CompensatedSum,
    count: usize,
    max: f64,
}

impl Bin {
    fn push(&mut self, x: f64, p: f64) {
        let a = x.abs();
        self.abs.add(a);
        self.pow.add(a.powf(p));
        self.sq.add(a * a);
        self.count += 1;
        self.max = self.max.max(a);
    }

    fn merge(&mut self, o: &Bin) {
        self.abs.add(o.abs.value());
        self.pow.add(o.pow.value());
        self.sq.add(o.sq.value());
        self.count += o.count;
        self.max = self.max.max(o.max);
    }
}

fn cube_grid(sampler: &FieldSampler, max_distance: f64) -> Result<(SiteBox, usize)> {
    let g = sampler.geometry();
    if g.inner_sites % g.sites_per_unit != 0 {
        return Err(Error::Domain(format!(
            "n = {} is not a whole number of unit cubes",
            g.n
        )));
    }
    let half = g.inner_sites / g.sites_per_unit;
    if !(max_distance.is_finite() && max_distance >= 0.0) || max_distance.ceil() as i64 >= half {
        return Err(Error::Domain(format!(
            "max distance {max_distance} does not fit inside Lambda_n with n = {}",
            g.n
        )));
    }
    let side = (2 * half) as usize;
    Ok((
        SiteBox::new(g.dim, [-half; 3], [side; 3]),
        max_distance.round() as usize + 1,
    ))
}

fn norm(v: [i64; 3], dim: usize) -> f64 {
    (0..dim).map(|k| (v[k] * v[k]) as f64).sum::<f64>().sqrt()
}

/// Tabulates `E|Delta_0(B_w)|` and `E|Delta_0(B_w)|^p` by distance, where
/// `Delta_0(B_w)` is the change in the cube-`w` share of the functional when
/// the noise on `B_0` is redrawn.
pub fn delta_moment_decay(
    sampler: &FieldSampler,
    master_seed: u64,
    replicates: Range<u64>,
    options: &DecayOptions,
) -> Result<DecayTable> {
    let (cubes, bins) = cube_grid(sampler, options.max_distance)?;
    let dim = sampler.geometry().dim;
    let per_rep: Vec<Vec<Bin>> = replicates
        .into_par_iter()
        .map(|rep| -> Result<Vec<Bin>> {
            let f = sampler.sample(master_seed, rep);
            let key = match (options.reuse_noise, f.noise()) {
                (true, Some(n)) => n.w_key,
                (false, Some(n)) => n.w_prime_key,
                (_, None) => unreachable!("sampled fields carry noise provenance"),
            };
            let g = f.resample_cube_with_key([0; 3], key)?;
            let a = cube_values(
                &label_with_selection(&f, options.level, options.selection),
                &f,
                options.functional,
            )?;
            let b = cube_values(
                &label_with_selection(&g, options.level, options.selection),
                &g,
                options.functional,
            )?;
            let mut out = vec![Bin::default(); bins];
            for w in cubes.points() {
                let r = norm(w, dim);
                if r > options.max_distance {
                    continue;
                }
                let i = cubes.index_of(w);
                out[r.round() as usize].push(a.values[i] - b.values[i], options.moment_exponent);
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;

    let mut total = vec![Bin::default(); bins];
    for rep in &per_rep {
        for (t, b) in total.iter_mut().zip(rep) {
            t.merge(b);
        }
    }
    let rows: Vec<DecayRow> = total
        .iter()
        .enumerate()
        .filter(|(_, b)| b.count > 0)
        .map(|(d, b)| {
            let n = b.count as f64;
            let mean = b.abs.value() / n;
            let var = if b.count > 1 {
                ((b.sq.value() - n * mean * mean) / (n - 1.0)).max(0.0)
            } else {
                0.0
            };
            DecayRow {
                distance: d as f64,
                count: b.count,
                mean_abs: mean,
                mean_pow: b.pow.value() / n,
                se: (var / n).sqrt(),
                max_abs: b.max,
            }
        })
        .collect();
    let max_abs = rows.iter().map(|r| r.max_abs).fold(0.0, f64::max);
    let degenerate = max_abs == 0.0;
    let slope = if degenerate {
        None
    } else {
        let (lo, hi) = options.fit_range;
        let (xs, ys): (Vec<f64>, Vec<f64>) = rows
            .iter()
            .filter(|r| r.distance >= lo && r.distance <= hi && r.mean_abs > 0.0)
            .map(|r| ((1.0 + r.distance).ln(), r.mean_abs.ln()))
            .unzip();
        if xs.len() >= 2 {
            ols_slope(&xs, &ys)
        } else {
            None
        }
    };
    Ok(DecayTable {
        rows,
        slope,
        degenerate,
        max_abs,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerturbationRow {
    pub distance: f64,
    pub count: usize,
    /// Mean over replicates and cubes of `max_{B_w} |p_0|`.
    pub mean_max_abs: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PerturbationDecay {
    pub rows: Vec<PerturbationRow>,
    /// Slope of `log mean_max_abs` against `log |w|` over the fit range.
    pub slope: Option<f64>,
}

/// Decay of `max_{B_w} |p_0|` in `|w|`.
pub fn perturbation_decay(
    sampler: &FieldSampler,
    master_seed: u64,
    replicates: Range<u64>,
    max_distance: f64,
    fit_range: (f64, f64),
) -> Result<PerturbationDecay> {
    let (cubes, bins) = cube_grid(sampler, max_distance)?;
    let geom = *sampler.geometry();
    let per_rep: Vec<Vec<Bin>> = replicates
        .into_par_iter()
        .map(|rep| -> Result<Vec<Bin>> {
            let f = sampler.sample(master_seed, rep);
            let p = f.perturbation([0; 3])?;
            let mut max = vec![0.0f64; cubes.size()];
            for (idx, x) in p.region.points().enumerate() {
                if geom.in_inner(x) {
                    let c = cubes.index_of(geom.cube_of(x));
                    max[c] = max[c].max(p.values[idx].abs());
                }
            }
            let mut out = vec![Bin::default(); bins];
            for w in cubes.points() {
                let r = norm(w, geom.dim);
                if r <= max_distance {
                    out[r.round() as usize].push(max[cubes.index_of(w)], 1.0);
                }
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;
    let mut total = vec![Bin::default(); bins];
    for rep in &per_rep {
        for (t, b) in total.iter_mut().zip(rep) {
            t.merge(b);
        }
    }
    let rows: Vec<PerturbationRow> = total
        .iter()
        .enumerate()
        .filter(|(_, b)| b.count > 0)
        .map(|(d, b)| PerturbationRow {
            distance: d as f64,
            count: b.count,
            mean_max_abs: b.abs.value() / b.count as f64,
        })
        .collect();
    let (xs, ys): (Vec<f64>, Vec<f64>) = rows
        .iter()
        .filter(|r| r.distance >= fit_range.0 && r.distance <= fit_range.1 && r.mean_max_abs > 0.0)
        .map(|r| (r.distance.ln(), r.mean_max_abs.ln()))
        .unzip();
    let slope = if xs.len() >= 2 {
        ols_slope(&xs, &ys)
    } else {
        None
    };
    Ok(PerturbationDecay { rows, slope })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::{KernelFamily, KernelSpec};

    fn sampler() -> FieldSampler {
        let k = KernelSpec::new(KernelFamily::BargmannFock, 2, 0.5).unwrap();
        FieldSampler::new(&k, 5.0, 0.25).unwrap()
    }

    fn opts() -> DecayOptions {
        DecayOptions {
            max_distance: 4.0,
            fit_range: (1.0, 4.0),
            ..DecayOptions::default()
        }
    }

    #[test]
    fn same_stream_gives_zero_and_is_flagged() {
        let o = DecayOptions {
            reuse_noise: true,
            ..opts()
        };
        let t = delta_moment_decay(&sampler(), 1, 0..4, &o).unwrap();
        assert!(t.degenerate);
        assert!(t.slope.is_none());
        assert!(t
            .rows
            .iter()
            .all(|r| r.mean_abs == 0.0 && r.mean_pow == 0.0));
    }

    #[test]
    fn volume_change_per_cube_is_at_most_one() {
        let t = delta_moment_decay(&sampler(), 2, 0..8, &opts()).unwrap();
        assert!(!t.degenerate);
        assert!(t.max_abs <= 1.0);
        assert_eq!(t.rows[0].distance, 0.0);
        assert_eq!(t.rows[0].count, 8);
        assert!(t.rows[0].mean_abs > 0.0);
    }

    #[test]
    fn bins_cover_every_cube_once() {
        let t = delta_moment_decay(&sampler(), 3, 0..1, &opts()).unwrap();
        // Integer points with |w| <= 4 in the plane.
        let total: usize = t.rows.iter().map(|r| r.count).sum();
        assert_eq!(total, 49);
    }

    #[test]
    fn distance_must_fit_in_box() {
        let o = DecayOptions {
            max_distance: 5.0,
            ..opts()
        };
        assert!(delta_moment_decay(&sampler(), 1, 0..1, &o).is_err());
    }

    #[test]
    fn perturbation_is_largest_at_its_own_cube() {
        let d = perturbation_decay(&sampler(), 4, 0..4, 4.0, (1.0, 4.0)).unwrap();
        assert!(d.rows[0].mean_max_abs > d.rows[2].mean_max_abs);
        assert!(d.slope.unwrap() < 0.0);
    }
}
