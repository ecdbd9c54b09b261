//! White-noise convolution fields `f = q * W` on a lattice, with local
//! resampling of the noise on unit cubes.

use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::FftDirection;

use crate::error::{Error, Result};
use crate::kernels::KernelSpec;
use crate::lattice::{fft_friendly_len, FftNd, SiteBox};
use crate::rng::{derive_seed, normal_at, Stream};

/// Default memory budget for one field sample (bytes).
pub const DEFAULT_MEMORY_BUDGET: u64 = 2 << 30;

/// Where a sampled field's noise came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NoiseProvenance {
    pub master_seed: u64,
    pub replicate: u64,
    pub w_key: u64,
    pub w_prime_key: u64,
}

impl NoiseProvenance {
    pub fn new(master_seed: u64, replicate: u64) -> Self {
        NoiseProvenance {
            master_seed,
            replicate,
            w_key: derive_seed(master_seed, replicate, Stream::W),
            w_prime_key: derive_seed(master_seed, replicate, Stream::WPrime),
        }
    }
}

/// Seeded white noise on a box of sites; each value is `h^{d/2} g(key, site)`.
#[derive(Debug, Clone)]
pub struct NoiseLattice {
    pub spacing: f64,
    pub bounds: SiteBox,
    pub key: u64,
    pub values: Vec<f64>,
}

impl NoiseLattice {
    pub fn generate(bounds: SiteBox, spacing: f64, key: u64) -> Self {
        let sigma = spacing.powf(bounds.dim as f64 / 2.0);
        let values = bounds
            .points()
            .map(|p| sigma * normal_at(key, &p[..bounds.dim]))
            .collect();
        NoiseLattice {
            spacing,
            bounds,
            key,
            values,
        }
    }

    #[inline]
    pub fn value_at(key: u64, p: [i64; 3], dim: usize, spacing: f64) -> f64 {
        spacing.powf(dim as f64 / 2.0) * normal_at(key, &p[..dim])
    }
}

/// Geometry shared by all replicates of one `(kernel, n, epsilon)` setup.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoxGeometry {
    pub dim: usize,
    pub spacing: f64,
    pub n: f64,
    pub epsilon: f64,
    /// `n / h`: `Lambda_n` is the site range `[-inner, inner)` per axis.
    pub inner_sites: i64,
    /// `Lambda_{(1+eps)n}` is the closed site range `[-outer, outer]`.
    pub outer_sites: i64,
    /// Sites per unit length (`1 / h`).
    pub sites_per_unit: i64,
}

impl BoxGeometry {
    pub fn new(dim: usize, n: f64, epsilon: f64, spacing: f64) -> Result<Self> {
        if !(spacing.is_finite() && spacing > 0.0) {
            return Err(Error::config("field.spacing", "must be positive"));
        }
        let per_unit = 1.0 / spacing;
        if (per_unit - per_unit.round()).abs() > 1e-9 || per_unit.round() < 1.0 {
            return Err(Error::config(
                "field.spacing",
                format!("spacing {spacing} must divide 1"),
            ));
        }
        if !(n.is_finite() && n > 0.0) {
            return Err(Error::config("field.n", "must be positive"));
        }
        let inner = n / spacing;
        if (inner - inner.round()).abs() > 1e-9 {
            return Err(Error::config(
                "field.n",
                format!("n = {n} is not a multiple of the spacing {spacing}"),
            ));
        }
        if !(epsilon.is_finite() && epsilon >= 0.0) {
            return Err(Error::config("field.epsilon", "must be non-negative"));
        }
        let inner_sites = inner.round() as i64;
        let outer_sites = (((1.0 + epsilon) * n / spacing) - 1e-9).ceil() as i64;
        Ok(BoxGeometry {
            dim,
            spacing,
            n,
            epsilon,
            inner_sites,
            outer_sites: outer_sites.max(inner_sites),
            sites_per_unit: per_unit.round() as i64,
        })
    }

    pub fn grid(&self) -> SiteBox {
        SiteBox::centered(self.dim, self.outer_sites)
    }

    /// Half-open test for `p` in `Lambda_m`, `m` given in sites.
    #[inline]
    pub fn in_box(&self, p: [i64; 3], half_sites: i64) -> bool {
        (0..self.dim).all(|k| p[k] >= -half_sites && p[k] < half_sites)
    }

    #[inline]
    pub fn in_inner(&self, p: [i64; 3]) -> bool {
        self.in_box(p, self.inner_sites)
    }

    /// Sites of the unit cube `B_v = v + [0,1)^d`.
    pub fn cube_sites(&self, v: [i64; 3]) -> SiteBox {
        let s = self.sites_per_unit;
        let mut lo = [0i64; 3];
        let mut len = [1usize; 3];
        for k in 0..self.dim {
            lo[k] = v[k] * s;
            len[k] = s as usize;
        }
        SiteBox::new(self.dim, lo, len)
    }

    /// Unit cube containing site `p`.
    #[inline]
    pub fn cube_of(&self, p: [i64; 3]) -> [i64; 3] {
        let s = self.sites_per_unit;
        let mut v = [0i64; 3];
        for k in 0..self.dim {
            v[k] = p[k].div_euclid(s);
        }
        v
    }

    pub fn volume_element(&self) -> f64 {
        self.spacing.powi(self.dim as i32)
    }
}

/// A field sampled on `Lambda_{(1+eps)n}`.
#[derive(Debug, Clone)]
pub struct FieldSample {
    geometry: BoxGeometry,
    kernel: Option<KernelSpec>,
    noise: Option<NoiseProvenance>,
    values: Arc<Vec<f64>>,
}

impl FieldSample {
    /// Deterministic field from a closure of the position (test fixtures,
    /// analytic surfaces). Has no noise, so it cannot be resampled.
    pub fn from_fn(
        dim: usize,
        n: f64,
        epsilon: f64,
        spacing: f64,
        f: impl Fn(&[f64]) -> f64,
    ) -> Result<Self> {
        let geometry = BoxGeometry::new(dim, n, epsilon, spacing)?;
        let values = geometry
            .grid()
            .points()
            .map(|p| {
                let x: Vec<f64> = p[..dim].iter().map(|&i| i as f64 * spacing).collect();
                f(&x)
            })
            .collect();
        Ok(FieldSample {
            geometry,
            kernel: None,
            noise: None,
            values: Arc::new(values),
        })
    }

    /// Wraps precomputed values on the grid of `geometry`.
    pub fn from_values(geometry: BoxGeometry, values: Vec<f64>) -> Result<Self> {
        if values.len() != geometry.grid().size() {
            return Err(Error::Domain(format!(
                "expected {} values, got {}",
                geometry.grid().size(),
                values.len()
            )));
        }
        Ok(FieldSample {
            geometry,
            kernel: None,
            noise: None,
            values: Arc::new(values),
        })
    }

    pub fn geometry(&self) -> &BoxGeometry {
        &self.geometry
    }
    pub fn grid(&self) -> SiteBox {
        self.geometry.grid()
    }
    pub fn values(&self) -> &[f64] {
        &self.values
    }
    pub fn kernel(&self) -> Option<&KernelSpec> {
        self.kernel.as_ref()
    }
    pub fn noise(&self) -> Option<&NoiseProvenance> {
        self.noise.as_ref()
    }
    pub fn dim(&self) -> usize {
        self.geometry.dim
    }
    pub fn spacing(&self) -> f64 {
        self.geometry.spacing
    }

    #[inline]
    pub fn at(&self, p: [i64; 3]) -> f64 {
        self.values[self.grid().index_of(p)]
    }

    /// `p_v = q * ((W - W') 1_{B_v})` with the field's own `W'` stream.
    pub fn perturbation(&self, v: [i64; 3]) -> Result<Perturbation> {
        let key = self
            .noise
            .ok_or_else(|| Error::Domain("field has no noise provenance".into()))?
            .w_prime_key;
        self.perturbation_with_key(v, key)
    }

    /// As [`Self::perturbation`] but redrawing `B_v` from an explicit key.
    pub fn perturbation_with_key(&self, v: [i64; 3], prime_key: u64) -> Result<Perturbation> {
        let noise = self
            .noise
            .ok_or_else(|| Error::Domain("field has no noise provenance".into()))?;
        let kernel = self
            .kernel
            .as_ref()
            .ok_or_else(|| Error::Domain("field has no kernel".into()))?;
        let g = &self.geometry;
        let r = kernel.radius_sites();
        let cube = g.cube_sites(v);
        let noise_bounds = SiteBox::centered(g.dim, g.outer_sites + r);
        let last = {
            let mut p = cube.lo;
            for (k, c) in p.iter_mut().enumerate().take(g.dim) {
                *c = cube.hi(k);
            }
            p
        };
        if !noise_bounds.contains(cube.lo) || !noise_bounds.contains(last) {
            return Err(Error::Domain(format!(
                "cube {:?} lies outside the noise lattice",
                &v[..g.dim]
            )));
        }

        let delta: Vec<([i64; 3], f64)> = cube
            .points()
            .map(|y| {
                let w = NoiseLattice::value_at(noise.w_key, y, g.dim, g.spacing);
                let w2 = NoiseLattice::value_at(prime_key, y, g.dim, g.spacing);
                (y, w - w2)
            })
            .collect();

        // Support of p_v: the cube padded by the kernel radius, clipped to the grid.
        let grid = g.grid();
        let mut lo = [0i64; 3];
        let mut len = [1usize; 3];
        for k in 0..g.dim {
            let a = (cube.lo[k] - r).max(grid.lo[k]);
            let b = (cube.hi(k) + r).min(grid.hi(k));
            if b < a {
                return Ok(Perturbation {
                    region: SiteBox::new(g.dim, [0; 3], [0; 3]),
                    values: Vec::new(),
                });
            }
            lo[k] = a;
            len[k] = (b - a + 1) as usize;
        }
        let region = SiteBox::new(g.dim, lo, len);
        let values = region
            .points()
            .map(|x| {
                let mut acc = 0.0;
                for &(y, dw) in &delta {
                    acc += kernel.tap([x[0] - y[0], x[1] - y[1], x[2] - y[2]]) * dw;
                }
                acc
            })
            .collect();
        Ok(Perturbation { region, values })
    }

    /// `f~_v = f - p_v`: the field after redrawing the noise on `B_v`.
    pub fn resample_cube(&self, v: [i64; 3]) -> Result<FieldSample> {
        let p = self.perturbation(v)?;
        Ok(self.apply(&p))
    }

    pub fn resample_cube_with_key(&self, v: [i64; 3], prime_key: u64) -> Result<FieldSample> {
        let p = self.perturbation_with_key(v, prime_key)?;
        Ok(self.apply(&p))
    }

    fn apply(&self, p: &Perturbation) -> FieldSample {
        let grid = self.grid();
        let mut values = self.values.as_ref().clone();
        for (idx, x) in p.region.points().enumerate() {
            values[grid.index_of(x)] -= p.values[idx];
        }
        FieldSample {
            geometry: self.geometry,
            kernel: self.kernel.clone(),
            noise: self.noise,
            values: Arc::new(values),
        }
    }
}

/// `p_v` on the part of the grid where it can be non-zero.
#[derive(Debug, Clone)]
pub struct Perturbation {
    pub region: SiteBox,
    pub values: Vec<f64>,
}

impl Perturbation {
    /// Value at `x`, zero outside the support region.
    pub fn at(&self, x: [i64; 3]) -> f64 {
        if self.region.size() > 0 && self.region.contains(x) {
            self.values[self.region.index_of(x)]
        } else {
            0.0
        }
    }
}

/// Reusable FFT machinery for sampling many replicates of one setup.
#[derive(Debug, Clone)]
pub struct FieldSampler {
    kernel: KernelSpec,
    geometry: BoxGeometry,
    torus: SiteBox,
    fft: FftNd,
    kernel_spectrum: Arc<Vec<Complex64>>,
}

impl FieldSampler {
    pub fn new(kernel: &KernelSpec, n: f64, epsilon: f64) -> Result<Self> {
        Self::with_budget(kernel, n, epsilon, DEFAULT_MEMORY_BUDGET)
    }

    pub fn with_budget(kernel: &KernelSpec, n: f64, epsilon: f64, budget: u64) -> Result<Self> {
        let d = kernel.dimension();
        let geometry = BoxGeometry::new(d, n, epsilon, kernel.spacing())?;
        let required = Self::estimate_bytes(&geometry, kernel.radius_sites());
        if required > budget {
            return Err(Error::Resource {
                required_bytes: required,
                budget_bytes: budget,
            });
        }
        let side = Self::torus_side(&geometry, kernel.radius_sites());
        let torus = SiteBox::new(d, [0; 3], [side; 3]);
        let dims = vec![side; d];
        let fft = FftNd::new(&dims);
        let mut spectrum = vec![Complex64::default(); fft.len()];
        let tb = kernel.table_box();
        for (idx, p) in tb.points().enumerate() {
            let mut q = [0i64; 3];
            for k in 0..d {
                q[k] = p[k].rem_euclid(side as i64);
            }
            spectrum[torus.index_of(q)] = Complex64::new(kernel.table()[idx], 0.0);
        }
        fft.process(&mut spectrum, FftDirection::Forward);
        let scale = 1.0 / fft.len() as f64;
        for v in &mut spectrum {
            *v *= scale;
        }
        Ok(FieldSampler {
            kernel: kernel.clone(),
            geometry,
            torus,
            fft,
            kernel_spectrum: Arc::new(spectrum),
        })
    }

    fn torus_side(g: &BoxGeometry, r: i64) -> usize {
        fft_friendly_len((2 * (g.outer_sites + r) + 1) as usize)
    }

    /// Peak bytes held while sampling one replicate.
    pub fn estimate_bytes(g: &BoxGeometry, r: i64) -> u64 {
        let side = Self::torus_side(g, r) as u64;
        let torus = side.pow(g.dim as u32);
        let grid = g.grid().size() as u64;
        // kernel spectrum + work buffer (complex), field + labels + mask.
        torus * 32 + grid * (8 + 4 + 1 + 8)
    }

    pub fn geometry(&self) -> &BoxGeometry {
        &self.geometry
    }

    pub fn kernel(&self) -> &KernelSpec {
        &self.kernel
    }

    pub fn sample(&self, master_seed: u64, replicate: u64) -> FieldSample {
        let noise = NoiseProvenance::new(master_seed, replicate);
        self.sample_with(noise)
    }

    pub fn sample_with(&self, noise: NoiseProvenance) -> FieldSample {
        let g = &self.geometry;
        let d = g.dim;
        let r = self.kernel.radius_sites();
        let offset = g.outer_sites + r;
        let bounds = SiteBox::centered(d, offset);
        let sigma = g.spacing.powf(d as f64 / 2.0);

        let mut buf = vec![Complex64::default(); self.fft.len()];
        for p in bounds.points() {
            let mut t = [0i64; 3];
            for k in 0..d {
                t[k] = p[k] + offset;
            }
            buf[self.torus.index_of(t)] =
                Complex64::new(sigma * normal_at(noise.w_key, &p[..d]), 0.0);
        }
        self.fft.process(&mut buf, FftDirection::Forward);
        for (b, k) in buf.iter_mut().zip(self.kernel_spectrum.iter()) {
            *b *= k;
        }
        self.fft.process(&mut buf, FftDirection::Inverse);

        let grid = g.grid();
        let values = grid
            .points()
            .map(|p| {
                let mut t = [0i64; 3];
                for k in 0..d {
                    t[k] = p[k] + offset;
                }
                buf[self.torus.index_of(t)].re
            })
            .collect();
        FieldSample {
            geometry: *g,
            kernel: Some(self.kernel.clone()),
            noise: Some(noise),
            values: Arc::new(values),
        }
    }
}

/// One-shot convenience over [`FieldSampler`].
pub fn sample_field(
    kernel: &KernelSpec,
    n: f64,
    epsilon: f64,
    master_seed: u64,
    replicate: u64,
) -> Result<FieldSample> {
    Ok(FieldSampler::new(kernel, n, epsilon)?.sample(master_seed, replicate))
}
