//! Closed-form Kac-Rice densities for the total excursion set of a
//! unit-variance isotropic field.

use statrs::function::gamma::gamma;

use crate::error::{Error, Result};
use crate::kernels::KernelSpec;

use super::normality::normal_pdf;

/// `E|grad f|` for a gradient with iid `N(0, lambda2)` components in `d` dimensions.
pub fn mean_gradient_norm(lambda2: f64, dim: usize) -> f64 {
    let d = dim as f64;
    lambda2.sqrt() * 2f64.sqrt() * gamma((d + 1.0) / 2.0) / gamma(d / 2.0)
}

/// Expected `(d-1)`-volume of `{f = level}` per unit volume.
pub fn level_set_density(lambda2: f64, dim: usize, level: f64) -> f64 {
    mean_gradient_norm(lambda2, dim) * normal_pdf(level)
}

pub fn kac_rice_sa(spec: &KernelSpec, level: f64) -> f64 {
    level_set_density(spec.lambda2(), spec.dimension(), level)
}

/// Expected Euler characteristic of `{f >= level}` per unit area (2-D).
pub fn euler_density_2d(lambda2: f64, level: f64) -> f64 {
    lambda2 * (2.0 * std::f64::consts::PI).powf(-1.5) * level * (-0.5 * level * level).exp()
}

pub fn kac_rice_ec(spec: &KernelSpec, level: f64) -> Result<f64> {
    if spec.dimension() != 2 {
        return Err(Error::UnsupportedDimension(spec.dimension()));
    }
    Ok(euler_density_2d(spec.lambda2(), level))
}
