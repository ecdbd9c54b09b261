//! Excursion-set geometry: labeling, finitary selection and the volume,
//! level-set length and Euler characteristic functionals.

pub mod euler;
pub mod labeling;
pub mod marching;
pub mod oracle;
pub mod union_find;

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::field::FieldSample;
use crate::lattice::SiteBox;

pub use labeling::{
    label_components, label_excursion, label_with_selection, ComponentLabels, LabeledExcursion,
    Selection, BACKGROUND,
};

/// The three geometric functionals.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize, serde::Deserialize,
)]
#[serde(rename_all = "lowercase")]
pub enum Functional {
    Vol,
    Sa,
    Ec,
}

impl Functional {
    pub const ALL: [Functional; 3] = [Functional::Vol, Functional::Sa, Functional::Ec];

    pub fn as_str(&self) -> &'static str {
        match self {
            Functional::Vol => "vol",
            Functional::Sa => "sa",
            Functional::Ec => "ec",
        }
    }
}

impl fmt::Display for Functional {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Functional {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "vol" => Ok(Functional::Vol),
            "sa" => Ok(Functional::Sa),
            "ec" => Ok(Functional::Ec),
            other => Err(Error::Parse(format!("unknown functional {other:?}"))),
        }
    }
}

/// Volume of the selected set: `h^d` times the number of selected sites.
pub fn mu_vol(lab: &LabeledExcursion) -> f64 {
    lab.selected_count() as f64 * lab.geometry().volume_element()
}

/// Length of the selected part of the level set over the cells tiling
/// `Lambda_n` (2-D only).
pub fn mu_sa(lab: &LabeledExcursion, field: &FieldSample) -> Result<f64> {
    if lab.geometry().dim != 2 {
        return Err(Error::UnsupportedDimension(lab.geometry().dim));
    }
    Ok(lab
        .inner_box()
        .points()
        .map(|p| marching::cell_length(field, lab, p))
        .sum())
}

/// Euler characteristic of the selected sites in `Lambda_n`.
pub fn mu_ec(lab: &LabeledExcursion) -> i64 {
    euler::euler_characteristic(lab.inner_box(), |p| lab.is_selected(p))
}

/// Sum of per-site Euler contributions over `Lambda_n`, where neighbouring
/// sites outside `Lambda_n` still count. This drops the box-boundary terms
/// and estimates the Euler characteristic density of the unrestricted set.
pub fn mu_ec_intrinsic(lab: &LabeledExcursion) -> i64 {
    let member = |p: [i64; 3]| lab.in_selected_component(p);
    let dim = lab.geometry().dim;
    lab.inner_box()
        .points()
        .map(|p| euler::local_contribution(dim, p, &member))
        .sum()
}

/// Evaluates one functional on a labeled excursion.
pub fn functional_value(
    lab: &LabeledExcursion,
    field: &FieldSample,
    functional: Functional,
) -> Result<f64> {
    match functional {
        Functional::Vol => Ok(mu_vol(lab)),
        Functional::Sa => mu_sa(lab, field),
        Functional::Ec => Ok(mu_ec(lab) as f64),
    }
}

fn box_sites(lab: &LabeledExcursion, m: f64) -> Result<i64> {
    let g = lab.geometry();
    if !(m.is_finite() && m > 0.0 && m < g.n) {
        return Err(Error::Domain(format!(
            "need 0 < m < n = {}, got m = {m}",
            g.n
        )));
    }
    Ok(((m / g.spacing).round() as i64).max(1))
}

fn boundary_shell(dim: usize, half: i64) -> impl Iterator<Item = [i64; 3]> {
    let side = (2 * half) as usize;
    SiteBox::new(dim, [-half; 3], [side; 3])
        .points()
        .filter(move |p| (0..dim).any(|k| p[k] == -half || p[k] == half - 1))
        .collect::<Vec<_>>()
        .into_iter()
}

fn labels_near_origin(lab: &LabeledExcursion) -> Vec<bool> {
    let g = lab.geometry();
    let s = g.sites_per_unit;
    let mut hit = vec![false; lab.component_count()];
    let side = (2 * s) as usize;
    for p in SiteBox::new(g.dim, [-s; 3], [side; 3]).points() {
        let l = lab.label_at(p);
        if l != BACKGROUND {
            hit[l as usize] = true;
        }
    }
    hit
}

/// Truncated arm events for several radii: a component meets `Lambda_1` and
/// `∂Lambda_m` but does not reach `∂Lambda_{(1+eps)n}`.
pub fn arm_events(lab: &LabeledExcursion, ms: &[f64]) -> Result<Vec<bool>> {
    let halves = ms
        .iter()
        .map(|&m| box_sites(lab, m))
        .collect::<Result<Vec<_>>>()?;
    let near = labels_near_origin(lab);
    let touching = lab.boundary_touching();
    Ok(halves
        .into_iter()
        .map(|half| {
            boundary_shell(lab.geometry().dim, half).any(|p| {
                let l = lab.label_at(p);
                l != BACKGROUND && near[l as usize] && !touching[l as usize]
            })
        })
        .collect())
}

pub fn arm_event(lab: &LabeledExcursion, m: f64) -> Result<bool> {
    Ok(arm_events(lab, &[m])?[0])
}

/// `Lambda_1` connected to `∂Lambda_m` inside the excursion set, with no
/// restriction on the connecting component.
pub fn connection_event(lab: &LabeledExcursion, m: f64) -> Result<bool> {
    let half = box_sites(lab, m)?;
    let near = labels_near_origin(lab);
    Ok(boundary_shell(lab.geometry().dim, half).any(|p| {
        let l = lab.label_at(p);
        l != BACKGROUND && near[l as usize]
    }))
}

/// A functional split over the unit cubes `B_v` tiling `Lambda_n`.
#[derive(Debug, Clone)]
pub struct CubeTable {
    /// Cubes `v` range over `[-half, half)^d`.
    pub half: i64,
    pub cubes: SiteBox,
    pub values: Vec<f64>,
}

impl CubeTable {
    pub fn get(&self, v: [i64; 3]) -> f64 {
        self.values[self.cubes.index_of(v)]
    }

    pub fn total(&self) -> f64 {
        self.values.iter().sum()
    }
}

/// Per-cube share of a functional; the shares add up to the whole-box value.
pub fn cube_values(
    lab: &LabeledExcursion,
    field: &FieldSample,
    functional: Functional,
) -> Result<CubeTable> {
    let g = *lab.geometry();
    if g.inner_sites % g.sites_per_unit != 0 {
        return Err(Error::Domain(format!(
            "n = {} is not a whole number of unit cubes",
            g.n
        )));
    }
    if functional == Functional::Sa && g.dim != 2 {
        return Err(Error::UnsupportedDimension(g.dim));
    }
    let half = g.inner_sites / g.sites_per_unit;
    let side = (2 * half) as usize;
    let cubes = SiteBox::new(g.dim, [-half; 3], [side; 3]);
    let mut values = vec![0.0; cubes.size()];
    let hd = g.volume_element();
    let selected = |p: [i64; 3]| lab.is_selected(p);
    for p in lab.inner_box().points() {
        let c = cubes.index_of(g.cube_of(p));
        values[c] += match functional {
            Functional::Vol => {
                if lab.is_selected(p) {
                    hd
                } else {
                    0.0
                }
            }
            Functional::Ec => euler::local_contribution(g.dim, p, &selected) as f64,
            Functional::Sa => marching::cell_length(field, lab, p),
        };
    }
    Ok(CubeTable {
        half,
        cubes,
        values,
    })
}
