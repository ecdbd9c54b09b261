//! Smooth stationary Gaussian fields on a lattice, the geometry of their
//! excursion sets, and Monte Carlo estimators for volume, boundary length and
//! Euler characteristic of the boundary-connected excursion component.
//!
//! ```
//! use excursion_lab::field::FieldSampler;
//! use excursion_lab::geometry::{functional_value, label_excursion, Functional};
//! use excursion_lab::kernels::{KernelFamily, KernelSpec};
//!
//! let kernel = KernelSpec::new(KernelFamily::BargmannFock, 2, 0.5).unwrap();
//! let sampler = FieldSampler::new(&kernel, 4.0, 0.25).unwrap();
//! let field = sampler.sample(42, 0);
//! let lab = label_excursion(&field, -0.5);
//! let vol = functional_value(&lab, &field, Functional::Vol).unwrap();
//! assert!((0.0..=64.0).contains(&vol));
//! ```

pub mod error;
pub mod estimators;
pub mod field;
pub mod geometry;
pub mod harness;
pub mod io;
pub mod kernels;
pub mod lattice;
pub mod rng;

pub use error::{Error, Result};
