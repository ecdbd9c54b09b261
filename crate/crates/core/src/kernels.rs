//! Convolution kernels `q` and their covariances `K = q * q`.
//!
//! A [`KernelSpec`] is always tied to a lattice spacing: the kernel is
//! truncated to a ball of radius `R` and rescaled so that the sampled field
//! has unit variance on that lattice.

use std::f64::consts::PI;
use std::sync::{Arc, OnceLock};

use rustfft::num_complex::Complex64;
use rustfft::FftDirection;
use statrs::function::gamma::gamma;

use crate::error::{Error, Result};
use crate::lattice::{fft_friendly_len, FftNd, SiteBox};

/// Relative tail q²-mass allowed outside the truncation radius.
pub const DEFAULT_TAIL_TOLERANCE: f64 = 1e-8;

/// Largest number of lattice sites we are willing to tabulate for a kernel.
const MAX_TABLE_SITES: usize = 60_000_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KernelFamily {
    /// `q(x) = (2/pi)^{d/4} exp(-|x|^2)`, `K(x) = exp(-|x|^2 / 2)`.
    BargmannFock,
    /// Spectral density `rho(t) ∝ (1 + |t|^2)^{-nu - d/2}`; `q` is the inverse
    /// lattice Fourier transform of `sqrt(rho)`.
    Matern { nu: f64 },
    /// `q(x) = (1 + |x|^2)^{-beta/2}`, requires `beta > d`.
    Rational { beta: f64 },
    /// Single-tap kernel: the field is the normalized white noise itself.
    Point,
}

impl KernelFamily {
    /// Polynomial decay exponent of `q` and its derivatives, `None` when
    /// the kernel decays faster than any power.
    pub fn decay_exponent(&self) -> Option<f64> {
        match self {
            KernelFamily::Rational { beta } => Some(*beta),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            KernelFamily::BargmannFock => "bargmann_fock",
            KernelFamily::Matern { .. } => "matern",
            KernelFamily::Rational { .. } => "rational",
            KernelFamily::Point => "point",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelOptions {
    pub tail_tolerance: f64,
    /// Truncate no closer than this radius (field units).
    pub min_radius: Option<f64>,
    /// Smoothness index `k` of the covariance, used for threshold warnings.
    pub smoothness: Option<u32>,
}

impl Default for KernelOptions {
    fn default() -> Self {
        KernelOptions {
            tail_tolerance: DEFAULT_TAIL_TOLERANCE,
            min_radius: None,
            smoothness: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct KernelSpec {
    family: KernelFamily,
    dimension: usize,
    spacing: f64,
    truncation_radius: f64,
    c_norm: f64,
    tail_fraction: f64,
    smoothness: Option<u32>,
    radius_sites: i64,
    /// `c_norm * q` on `SiteBox::centered(d, radius_sites)`, zero outside the ball.
    table: Arc<Vec<f64>>,
    autocov: Arc<OnceLock<Vec<f64>>>,
}

impl KernelSpec {
    pub fn new(family: KernelFamily, dimension: usize, spacing: f64) -> Result<Self> {
        Self::with_options(family, dimension, spacing, KernelOptions::default())
    }

    pub fn with_options(
        family: KernelFamily,
        dimension: usize,
        spacing: f64,
        options: KernelOptions,
    ) -> Result<Self> {
        validate(family, dimension, spacing, &options)?;
        let d = dimension;
        let h = spacing;
        let hd = h.powi(d as i32);

        let (ext_sites, raw, analytic_tail) = raw_table(family, d, h, options.min_radius)?;
        let ext_box = SiteBox::centered(d, ext_sites);

        // q² mass per squared integer radius.
        let max_r2 = (d as i64) * ext_sites * ext_sites;
        let mut shell = vec![0.0f64; max_r2 as usize + 1];
        for (idx, p) in ext_box.points().enumerate() {
            let r2 = p[0] * p[0] + p[1] * p[1] + p[2] * p[2];
            shell[r2 as usize] += hd * raw[idx] * raw[idx];
        }
        let total: f64 = shell.iter().sum::<f64>() + analytic_tail;

        // Smallest squared radius whose outside mass is below tolerance.
        let mut tail = analytic_tail;
        let mut cutoff_r2 = max_r2;
        for r2 in (0..=max_r2).rev() {
            if tail + shell[r2 as usize] >= options.tail_tolerance * total {
                cutoff_r2 = r2;
                break;
            }
            tail += shell[r2 as usize];
            cutoff_r2 = r2;
        }
        if let Some(min_r) = options.min_radius {
            let min_r2 = ((min_r / h) * (min_r / h) + 1e-9).floor() as i64;
            if min_r2 > cutoff_r2 {
                cutoff_r2 = min_r2.min(max_r2);
            }
        }
        let tail_fraction =
            (shell[cutoff_r2 as usize + 1..].iter().sum::<f64>() + analytic_tail).max(0.0) / total;
        let radius_sites = ((cutoff_r2 as f64).sqrt() + 1e-9).floor() as i64;
        let truncation_radius = (cutoff_r2 as f64).sqrt() * h;

        let table_box = SiteBox::centered(d, radius_sites);
        let mut table = vec![0.0; table_box.size()];
        let mut kept = 0.0;
        for (idx, p) in table_box.points().enumerate() {
            let r2 = p[0] * p[0] + p[1] * p[1] + p[2] * p[2];
            if r2 <= cutoff_r2 {
                let v = raw[ext_box.index_of(p)];
                table[idx] = v;
                kept += hd * v * v;
            }
        }
        let c_norm = 1.0 / kept.sqrt();
        for v in &mut table {
            *v *= c_norm;
        }

        Ok(KernelSpec {
            family,
            dimension: d,
            spacing: h,
            truncation_radius,
            c_norm,
            tail_fraction,
            smoothness: options.smoothness,
            radius_sites,
            table: Arc::new(table),
            autocov: Arc::new(OnceLock::new()),
        })
    }

    pub fn family(&self) -> KernelFamily {
        self.family
    }
    pub fn dimension(&self) -> usize {
        self.dimension
    }
    pub fn spacing(&self) -> f64 {
        self.spacing
    }
    pub fn truncation_radius(&self) -> f64 {
        self.truncation_radius
    }
    pub fn c_norm(&self) -> f64 {
        self.c_norm
    }
    /// Relative q²-mass discarded by truncation.
    pub fn tail_fraction(&self) -> f64 {
        self.tail_fraction
    }
    pub fn smoothness(&self) -> Option<u32> {
        self.smoothness
    }
    /// Truncation radius in lattice sites (max |offset| per axis).
    pub fn radius_sites(&self) -> i64 {
        self.radius_sites
    }

    pub fn table_box(&self) -> SiteBox {
        SiteBox::centered(self.dimension, self.radius_sites)
    }

    /// Normalized truncated kernel values on [`Self::table_box`].
    pub fn table(&self) -> &[f64] {
        &self.table
    }

    /// Normalized, truncated `q` at an integer lattice offset.
    #[inline]
    pub fn tap(&self, offset: [i64; 3]) -> f64 {
        let b = self.table_box();
        if b.contains(offset) {
            self.table[b.index_of(offset)]
        } else {
            0.0
        }
    }

    /// `c_norm * q(x)`. Closed-form families are evaluated anywhere (without
    /// truncation); lattice-defined families only at lattice points.
    pub fn evaluate_q(&self, x: &[f64]) -> Result<f64> {
        self.check_point(x)?;
        // Sorted so that signed permutations of x give bit-identical results.
        let mut sq: Vec<f64> = x.iter().map(|v| v * v).collect();
        sq.sort_by(f64::total_cmp);
        let r2: f64 = sq.iter().sum();
        let d = self.dimension as f64;
        match self.family {
            KernelFamily::BargmannFock => Ok(self.c_norm * (2.0 / PI).powf(d / 4.0) * (-r2).exp()),
            KernelFamily::Rational { beta } => Ok(self.c_norm * (1.0 + r2).powf(-beta / 2.0)),
            KernelFamily::Matern { .. } | KernelFamily::Point => {
                let offset = self.lattice_offset(x).ok_or_else(|| {
                    Error::UnsupportedEvaluation(format!(
                        "{} kernel is only defined on lattice points (spacing {})",
                        self.family.name(),
                        self.spacing
                    ))
                })?;
                Ok(self.tap(offset))
            }
        }
    }

    /// Covariance at an integer lattice lag.
    pub fn covariance_lag(&self, lag: [i64; 3]) -> f64 {
        match self.family {
            KernelFamily::BargmannFock => {
                let r2 = (lag[0] * lag[0] + lag[1] * lag[1] + lag[2] * lag[2]) as f64
                    * self.spacing
                    * self.spacing;
                (-0.5 * r2).exp()
            }
            _ => {
                let b = SiteBox::centered(self.dimension, 2 * self.radius_sites);
                if b.contains(lag) {
                    self.autocovariance()[b.index_of(lag)]
                } else {
                    0.0
                }
            }
        }
    }

    /// `K(x) = E[f(x) f(0)]`. Bargmann-Fock uses the closed form; other
    /// families use the lattice autoconvolution and need a lattice point.
    pub fn covariance_k(&self, x: &[f64]) -> Result<f64> {
        self.check_point(x)?;
        if let KernelFamily::BargmannFock = self.family {
            let r2: f64 = x.iter().map(|v| v * v).sum();
            return Ok((-0.5 * r2).exp());
        }
        let lag = self.lattice_offset(x).ok_or_else(|| {
            Error::UnsupportedEvaluation(format!(
                "lattice covariance needs a multiple of the spacing {}",
                self.spacing
            ))
        })?;
        Ok(self.covariance_lag(lag))
    }

    /// Second spectral moment `-d²K/dx_1²(0)`.
    pub fn lambda2(&self) -> f64 {
        match self.family {
            KernelFamily::BargmannFock => 1.0,
            _ => {
                let h = self.spacing;
                2.0 * (self.covariance_lag([0, 0, 0]) - self.covariance_lag([1, 0, 0])) / (h * h)
            }
        }
    }

    /// `h^d * sum (c_norm q)^2` over the truncated lattice kernel.
    pub fn lattice_variance(&self) -> f64 {
        let hd = self.spacing.powi(self.dimension as i32);
        hd * self.table.iter().map(|v| v * v).sum::<f64>()
    }

    fn autocovariance(&self) -> &[f64] {
        self.autocov.get_or_init(|| {
            let d = self.dimension;
            let r = self.radius_sites;
            let side = fft_friendly_len((4 * r + 1) as usize);
            let mut dims = vec![side; d];
            dims.truncate(d);
            let fft = FftNd::new(&dims);
            let padded = SiteBox::new(d, [0; 3], [side; 3]);
            let wrap = |p: [i64; 3]| {
                let mut q = [0i64; 3];
                for k in 0..d {
                    q[k] = p[k].rem_euclid(side as i64);
                }
                padded.index_of(q)
            };
            let mut buf = vec![Complex64::default(); fft.len()];
            let tb = self.table_box();
            for (idx, p) in tb.points().enumerate() {
                buf[wrap(p)] = Complex64::new(self.table[idx], 0.0);
            }
            fft.process(&mut buf, FftDirection::Forward);
            for v in &mut buf {
                *v = Complex64::new(v.norm_sqr(), 0.0);
            }
            fft.process(&mut buf, FftDirection::Inverse);
            let scale = self.spacing.powi(d as i32) / fft.len() as f64;
            let out_box = SiteBox::centered(d, 2 * r);
            out_box.points().map(|p| buf[wrap(p)].re * scale).collect()
        })
    }

    fn check_point(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dimension {
            return Err(Error::Domain(format!(
                "point has {} coordinates, kernel dimension is {}",
                x.len(),
                self.dimension
            )));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("point must be finite".into()));
        }
        Ok(())
    }

    fn lattice_offset(&self, x: &[f64]) -> Option<[i64; 3]> {
        let mut out = [0i64; 3];
        for (k, &v) in x.iter().enumerate() {
            let s = v / self.spacing;
            let r = s.round();
            if (s - r).abs() > 1e-9 {
                return None;
            }
            out[k] = r as i64;
        }
        Some(out)
    }
}

/// Decay thresholds `(beta_vol, beta_ec, beta_sa)` for smoothness index `k`.
pub fn beta_thresholds(k: u32, d: usize) -> Result<(f64, f64, f64)> {
    if k < 4 {
        return Err(Error::Domain(format!(
            "smoothness index k must be >= 4, got {k}"
        )));
    }
    let k = k as f64;
    let d = d as f64;
    let vol = 3.0 * d;
    let ec = (k - 1.0) / (k - 3.0) * 3.0 * d;
    let sa = (9.0 * k * (k + 1.0) - 42.0) / (k * (k + 1.0) - 8.0) * d;
    Ok((vol, ec, sa))
}

fn validate(family: KernelFamily, d: usize, h: f64, options: &KernelOptions) -> Result<()> {
    if !(2..=3).contains(&d) {
        return Err(Error::config(
            "kernel.dimension",
            format!("must be 2 or 3, got {d}"),
        ));
    }
    if !(h.is_finite() && h > 0.0) {
        return Err(Error::config("field.spacing", "must be positive"));
    }
    if !(options.tail_tolerance > 0.0 && options.tail_tolerance < 1.0) {
        return Err(Error::config("kernel.tail_tolerance", "must lie in (0, 1)"));
    }
    if let Some(r) = options.min_radius {
        if !(r.is_finite() && r >= 0.0) {
            return Err(Error::config(
                "kernel.truncation_radius",
                "must be non-negative",
            ));
        }
    }
    match family {
        KernelFamily::Matern { nu } if !(nu.is_finite() && nu > 0.0) => {
            Err(Error::config("kernel.nu", "must be positive"))
        }
        KernelFamily::Rational { beta } if !(beta.is_finite() && beta > d as f64) => Err(
            Error::config("kernel.beta", format!("must exceed the dimension {d}")),
        ),
        _ => Ok(()),
    }
}

/// Raw (unnormalized) kernel on an extended centered box, plus the continuum
/// q²-mass beyond that box.
fn raw_table(
    family: KernelFamily,
    d: usize,
    h: f64,
    min_radius: Option<f64>,
) -> Result<(i64, Vec<f64>, f64)> {
    let min_r = min_radius.unwrap_or(0.0);
    let check_size = |sites: i64| -> Result<()> {
        let n = (2 * sites + 1) as usize;
        let count = n.pow(d as u32);
        if count > MAX_TABLE_SITES {
            Err(Error::Resource {
                required_bytes: (count * 8) as u64,
                budget_bytes: (MAX_TABLE_SITES * 8) as u64,
            })
        } else {
            Ok(())
        }
    };
    match family {
        KernelFamily::Point => Ok((0, vec![1.0], 0.0)),
        KernelFamily::BargmannFock => {
            let ext = ((6.5f64).max(min_r + 1.0) / h).ceil() as i64;
            check_size(ext)?;
            let b = SiteBox::centered(d, ext);
            let pre = (2.0 / PI).powf(d as f64 / 4.0);
            let vals = b
                .points()
                .map(|p| {
                    let r2 = (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]) as f64 * h * h;
                    pre * (-r2).exp()
                })
                .collect();
            Ok((ext, vals, 0.0))
        }
        KernelFamily::Rational { beta } => {
            let df = d as f64;
            let sphere = 2.0 * PI.powf(df / 2.0) / gamma(df / 2.0);
            let continuum_total = PI.powf(df / 2.0) * gamma(beta - df / 2.0) / gamma(beta);
            let tail_beyond = |r: f64| sphere * r.powf(df - 2.0 * beta) / (2.0 * beta - df);
            let mut r_ext = 8.0f64;
            while tail_beyond(r_ext) > 1e-3 * DEFAULT_TAIL_TOLERANCE * continuum_total {
                r_ext *= 1.25;
                if r_ext > 1e6 {
                    break;
                }
            }
            let ext = (r_ext.max(min_r + 1.0) / h).ceil() as i64;
            check_size(ext)?;
            let b = SiteBox::centered(d, ext);
            let vals = b
                .points()
                .map(|p| {
                    let r2 = (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]) as f64 * h * h;
                    (1.0 + r2).powf(-beta / 2.0)
                })
                .collect();
            Ok((ext, vals, tail_beyond(ext as f64 * h)))
        }
        KernelFamily::Matern { nu } => {
            let period = if d == 2 { 64.0 } else { 40.0f64 }.max(2.0 * (min_r + 2.0));
            let mut m = fft_friendly_len((period / h).ceil() as usize);
            if m % 2 == 1 {
                m = fft_friendly_len(m + 1);
            }
            let count = m.pow(d as u32);
            if count > MAX_TABLE_SITES {
                return Err(Error::Resource {
                    required_bytes: (count * 16) as u64,
                    budget_bytes: (MAX_TABLE_SITES * 16) as u64,
                });
            }
            let dims = vec![m; d];
            let grid = SiteBox::new(d, [0; 3], [m; 3]);
            let dt = 2.0 * PI / (m as f64 * h);
            let exponent = -(nu + d as f64 / 2.0) / 2.0;
            let centered = |k: i64| if k <= m as i64 / 2 { k } else { k - m as i64 };
            let mut buf: Vec<Complex64> = grid
                .points()
                .map(|p| {
                    let t2: f64 = (0..d).map(|k| (centered(p[k]) as f64 * dt).powi(2)).sum();
                    Complex64::new((1.0 + t2).powf(exponent), 0.0)
                })
                .collect();
            FftNd::new(&dims).process(&mut buf, FftDirection::Inverse);
            let ext = m as i64 / 2 - 1;
            let b = SiteBox::centered(d, ext);
            let vals = b
                .points()
                .map(|p| {
                    let mut q = [0i64; 3];
                    for k in 0..d {
                        q[k] = p[k].rem_euclid(m as i64);
                    }
                    buf[grid.index_of(q)].re
                })
                .collect();
            Ok((ext, vals, 0.0))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn signed_permutations(d: usize) -> Vec<(Vec<usize>, Vec<f64>)> {
        let perms: Vec<Vec<usize>> = if d == 2 {
            vec![vec![0, 1], vec![1, 0]]
        } else {
            vec![
                vec![0, 1, 2],
                vec![0, 2, 1],
                vec![1, 0, 2],
                vec![1, 2, 0],
                vec![2, 0, 1],
                vec![2, 1, 0],
            ]
        };
        let mut out = Vec::new();
        for p in perms {
            for mask in 0..(1 << d) {
                let signs = (0..d)
                    .map(|k| if mask & (1 << k) != 0 { -1.0 } else { 1.0 })
                    .collect();
                out.push((p.clone(), signs));
            }
        }
        out
    }

    fn families() -> Vec<KernelFamily> {
        vec![
            KernelFamily::BargmannFock,
            KernelFamily::Matern { nu: 8.0 },
            KernelFamily::Rational { beta: 7.0 },
        ]
    }

    #[test]
    fn normalization_gives_unit_lattice_variance() {
        for fam in families() {
            for h in [0.5, 0.25, 0.125] {
                let spec = KernelSpec::new(fam, 2, h).unwrap();
                assert!(
                    (spec.lattice_variance() - 1.0).abs() < 1e-10,
                    "{fam:?} h={h}"
                );
                assert!(
                    spec.tail_fraction() < 1e-8,
                    "{fam:?} h={h} tail {}",
                    spec.tail_fraction()
                );
            }
        }
        let spec = KernelSpec::new(KernelFamily::Rational { beta: 7.0 }, 3, 0.5).unwrap();
        assert!((spec.lattice_variance() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn bargmann_fock_origin_value() {
        let spec = KernelSpec::new(KernelFamily::BargmannFock, 2, 0.25).unwrap();
        let q0 = spec.evaluate_q(&[0.0, 0.0]).unwrap();
        assert!((q0 - spec.c_norm() * (2.0 / PI).sqrt()).abs() < 1e-15);
        assert!((q0 - spec.c_norm() * 0.797_884_560_802_865_4).abs() < 1e-12);
        // The Gaussian lattice sum is essentially exact; only the 1e-8 tail is cut.
        assert!((spec.c_norm() - 1.0).abs() < 1e-7);
    }

    #[test]
    fn rational_value_at_unit_point() {
        let spec = KernelSpec::new(KernelFamily::Rational { beta: 7.0 }, 2, 0.25).unwrap();
        let q = spec.evaluate_q(&[1.0, 0.0]).unwrap();
        assert!((q - spec.c_norm() * 2f64.powf(-3.5)).abs() < 1e-15);
        // c_norm is the inverse root of the truncated lattice sum of q².
        let b = spec.table_box();
        let mut sum = 0.0;
        for p in b.points() {
            let r2 = (p[0] * p[0] + p[1] * p[1]) as f64 * 0.0625;
            if r2.sqrt() <= spec.truncation_radius() + 1e-12 {
                sum += 0.0625 * (1.0 + r2).powf(-7.0);
            }
        }
        assert!((spec.c_norm() - 1.0 / sum.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn matern_rejects_off_lattice_points() {
        let spec = KernelSpec::new(KernelFamily::Matern { nu: 8.0 }, 2, 0.25).unwrap();
        assert!(spec.evaluate_q(&[0.25, 0.5]).is_ok());
        assert!(matches!(
            spec.evaluate_q(&[0.1, 0.0]),
            Err(Error::UnsupportedEvaluation(_))
        ));
    }

    #[test]
    fn kernels_are_invariant_under_signed_permutations() {
        // Deterministic pseudo-random points.
        let mut rng = crate::rng::CounterRng::new(11);
        for d in [2usize, 3] {
            for fam in families() {
                let h = if d == 2 { 0.25 } else { 0.5 };
                let spec = KernelSpec::new(fam, d, h).unwrap();
                let lattice = matches!(fam, KernelFamily::Matern { .. });
                for _ in 0..100 {
                    let x: Vec<f64> = (0..d)
                        .map(|_| {
                            let u = 6.0 * rng.next_f64() - 3.0;
                            if lattice {
                                (u / h).round() * h
                            } else {
                                u
                            }
                        })
                        .collect();
                    let base = spec.evaluate_q(&x).unwrap();
                    for (perm, signs) in signed_permutations(d) {
                        let y: Vec<f64> = (0..d).map(|k| signs[k] * x[perm[k]]).collect();
                        let v = spec.evaluate_q(&y).unwrap();
                        if lattice {
                            assert!((v - base).abs() <= 1e-12, "{fam:?} {x:?}");
                        } else {
                            assert_eq!(v, base, "{fam:?} {x:?}");
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn bargmann_fock_covariance_closed_form() {
        let spec = KernelSpec::new(KernelFamily::BargmannFock, 2, 0.25).unwrap();
        assert_eq!(spec.covariance_k(&[0.0, 0.0]).unwrap(), 1.0);
        assert!((spec.covariance_k(&[1.0, 0.0]).unwrap() - 0.606_530_659_712_633_4).abs() < 1e-15);
        assert_eq!(spec.lambda2(), 1.0);
    }

    #[test]
    fn lattice_covariance_matches_direct_double_sum() {
        let spec = KernelSpec::new(KernelFamily::Rational { beta: 7.0 }, 2, 0.25).unwrap();
        let b = spec.table_box();
        let h2 = 0.0625;
        let oracle = |lag: [i64; 3]| {
            let mut acc = 0.0;
            for p in b.points() {
                let q = [p[0] - lag[0], p[1] - lag[1], 0];
                acc += spec.tap(p) * spec.tap(q);
            }
            h2 * acc
        };
        for lag in [[0, 0, 0], [1, 0, 0], [2, 3, 0], [-4, 1, 0], [7, -7, 0]] {
            let got = spec.covariance_lag(lag);
            let want = oracle(lag);
            assert!(
                ((got - want) / want).abs() < 1e-6,
                "lag {lag:?}: {got} vs {want}"
            );
        }
        assert!((spec.covariance_lag([0, 0, 0]) - 1.0).abs() < 1e-10);
        assert!(spec.covariance_k(&[0.3, 0.0]).is_err());
    }

    #[test]
    fn rational_derivative_decay_slope() {
        let spec = KernelSpec::new(KernelFamily::Rational { beta: 7.0 }, 2, 0.25).unwrap();
        let q = |x: f64, y: f64| spec.evaluate_q(&[x, y]).unwrap();
        let e = 1e-3;
        let max_deriv = |x: f64, y: f64| {
            let dx = (q(x + e, y) - q(x - e, y)) / (2.0 * e);
            let dy = (q(x, y + e) - q(x, y - e)) / (2.0 * e);
            let dxx = (q(x + e, y) - 2.0 * q(x, y) + q(x - e, y)) / (e * e);
            let dyy = (q(x, y + e) - 2.0 * q(x, y) + q(x, y - e)) / (e * e);
            let dxy = (q(x + e, y + e) - q(x + e, y - e) - q(x - e, y + e) + q(x - e, y - e))
                / (4.0 * e * e);
            [q(x, y), dx, dy, dxx, dyy, dxy]
                .iter()
                .fold(0.0f64, |m, v| m.max(v.abs()))
        };
        let r_max = spec.truncation_radius();
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for i in 0..20 {
            let r = 2.0 + (r_max - 2.0) * i as f64 / 19.0;
            for (cx, cy) in [(1.0, 0.0), (0.6, 0.8)] {
                xs.push(r.ln());
                ys.push(max_deriv(cx * r, cy * r).ln());
            }
        }
        let slope = crate::estimators::stats::ols_slope(&xs, &ys).unwrap();
        assert!(slope <= -7.0 + 0.5, "slope {slope}");
    }

    #[test]
    fn threshold_values() {
        let (v, e, s) = beta_thresholds(4, 2).unwrap();
        assert_eq!((v, e, s), (6.0, 18.0, 23.0));
        let (v, e, s) = beta_thresholds(5, 2).unwrap();
        assert_eq!((v, e), (6.0, 12.0));
        assert!((s - 456.0 / 22.0).abs() < 1e-12);
        assert!(beta_thresholds(3, 2).is_err());
        let mut prev = beta_thresholds(4, 2).unwrap();
        for k in 5..2000 {
            let cur = beta_thresholds(k, 2).unwrap();
            assert!(cur.1 <= prev.1 && cur.2 <= prev.2);
            prev = cur;
        }
        assert!((prev.1 - 6.0).abs() < 0.01 && (prev.2 - 18.0).abs() < 0.01);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(KernelSpec::new(KernelFamily::Rational { beta: 1.5 }, 2, 0.25).is_err());
        assert!(KernelSpec::new(KernelFamily::Matern { nu: -1.0 }, 2, 0.25).is_err());
        assert!(KernelSpec::new(KernelFamily::BargmannFock, 4, 0.25).is_err());
    }

    #[test]
    fn min_radius_extends_truncation() {
        let opts = KernelOptions {
            min_radius: Some(12.0),
            ..Default::default()
        };
        let spec =
            KernelSpec::with_options(KernelFamily::Rational { beta: 7.0 }, 2, 0.5, opts).unwrap();
        assert!(spec.truncation_radius() >= 12.0 - 1e-12);
        assert!((spec.lattice_variance() - 1.0).abs() < 1e-10);
    }
}
