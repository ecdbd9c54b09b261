//! JSON experiment configuration.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::field::{BoxGeometry, FieldSampler, DEFAULT_MEMORY_BUDGET};
use crate::geometry::{Functional, Selection};
use crate::kernels::{
    beta_thresholds, KernelFamily, KernelOptions, KernelSpec, DEFAULT_TAIL_TOLERANCE,
};

/// Smoothness index assumed when the config does not give one.
pub const DEFAULT_SMOOTHNESS: u32 = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Lln,
    Clt,
    ArmDecay,
    DeltaDecay,
    OracleCheck,
}

impl ExperimentKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ExperimentKind::Lln => "lln",
            ExperimentKind::Clt => "clt",
            ExperimentKind::ArmDecay => "arm_decay",
            ExperimentKind::DeltaDecay => "delta_decay",
            ExperimentKind::OracleCheck => "oracle_check",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyName {
    BargmannFock,
    Matern,
    Rational,
    Point,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelConfig {
    pub family: FamilyName,
    #[serde(default = "default_dimension")]
    pub dimension: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nu: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    /// Smoothness index `k` for threshold warnings.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub smoothness: Option<u32>,
    /// Minimum truncation radius in field units.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truncation_radius: Option<f64>,
    #[serde(default = "default_tail")]
    pub tail_tolerance: f64,
}

fn default_dimension() -> usize {
    2
}
fn default_tail() -> f64 {
    DEFAULT_TAIL_TOLERANCE
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldConfig {
    pub n: Vec<f64>,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    pub spacing: f64,
    pub replicates: u64,
    pub seed: u64,
}

fn default_epsilon() -> f64 {
    0.25
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArmConfig {
    pub radii: Vec<f64>,
}

impl Default for ArmConfig {
    fn default() -> Self {
        ArmConfig {
            radii: vec![2.0, 4.0, 8.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecayConfig {
    #[serde(default = "default_max_distance")]
    pub max_distance: f64,
    #[serde(default = "default_moment")]
    pub moment_exponent: f64,
    #[serde(default = "default_fit")]
    pub fit_range: [f64; 2],
}

fn default_max_distance() -> f64 {
    10.0
}
fn default_moment() -> f64 {
    2.5
}
fn default_fit() -> [f64; 2] {
    [2.0, 10.0]
}

impl Default for DecayConfig {
    fn default() -> Self {
        DecayConfig {
            max_distance: default_max_distance(),
            moment_exponent: default_moment(),
            fit_range: default_fit(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleConfig {
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default = "default_mask_side")]
    pub width: usize,
    #[serde(default = "default_mask_side")]
    pub height: usize,
}

fn default_trials() -> usize {
    10_000
}
fn default_mask_side() -> usize {
    8
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig {
            trials: default_trials(),
            width: 8,
            height: 8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub kernel: KernelConfig,
    pub field: FieldConfig,
    #[serde(default = "default_functionals")]
    pub functionals: Vec<Functional>,
    #[serde(default = "default_levels")]
    pub levels: Vec<f64>,
    #[serde(default = "default_selection")]
    pub selection: Selection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(default = "default_budget")]
    pub memory_budget_bytes: u64,
    #[serde(default = "default_lilliefors")]
    pub lilliefors_simulations: usize,
    #[serde(default)]
    pub arm: ArmConfig,
    #[serde(default)]
    pub decay: DecayConfig,
    #[serde(default)]
    pub oracle: OracleConfig,
}

fn default_functionals() -> Vec<Functional> {
    Functional::ALL.to_vec()
}
fn default_levels() -> Vec<f64> {
    vec![-0.5]
}
fn default_selection() -> Selection {
    Selection::Finitary
}
fn default_budget() -> u64 {
    DEFAULT_MEMORY_BUDGET
}
fn default_lilliefors() -> usize {
    2000
}

/// A config that parsed and passed validation, plus non-fatal warnings.
#[derive(Debug, Clone)]
pub struct ValidatedConfig {
    pub config: ExperimentConfig,
    pub kernel: KernelSpec,
    pub warnings: Vec<String>,
}

impl ExperimentConfig {
    /// Parses JSON. Syntax and schema errors carry the line and column.
    pub fn from_json_str(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config {
            field: format!("line {} column {}", e.line(), e.column()),
            message: e.to_string(),
        })
    }

    pub fn family(&self) -> Result<KernelFamily> {
        let k = &self.kernel;
        Ok(match k.family {
            FamilyName::BargmannFock => KernelFamily::BargmannFock,
            FamilyName::Point => KernelFamily::Point,
            FamilyName::Matern => KernelFamily::Matern {
                nu: k
                    .nu
                    .ok_or_else(|| Error::config("kernel.nu", "required for the matern family"))?,
            },
            FamilyName::Rational => KernelFamily::Rational {
                beta: k.beta.ok_or_else(|| {
                    Error::config("kernel.beta", "required for the rational family")
                })?,
            },
        })
    }

    pub fn kernel_spec(&self) -> Result<KernelSpec> {
        let k = &self.kernel;
        let options = KernelOptions {
            tail_tolerance: k.tail_tolerance,
            min_radius: k.truncation_radius,
            smoothness: k.smoothness,
        };
        KernelSpec::with_options(self.family()?, k.dimension, self.field.spacing, options)
    }

    /// SHA-256 of the canonical JSON form (sorted keys, defaults filled in,
    /// output directory left out).
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.out = None;
        let value = serde_json::to_value(&c).expect("config serializes");
        let canonical = serde_json::to_string(&value).expect("value serializes");
        hex::encode(Sha256::digest(canonical.as_bytes()))
    }

    /// Warnings for functionals whose decay threshold exceeds the kernel's
    /// decay exponent.
    pub fn threshold_warnings(&self) -> Result<Vec<String>> {
        let Some(beta) = self.family()?.decay_exponent() else {
            return Ok(Vec::new());
        };
        let k = self.kernel.smoothness.unwrap_or(DEFAULT_SMOOTHNESS);
        let (vol, ec, sa) = beta_thresholds(k, self.kernel.dimension)
            .map_err(|e| Error::config("kernel.smoothness", e.to_string()))?;
        Ok(self
            .functionals
            .iter()
            .filter_map(|&f| {
                let t = match f {
                    Functional::Vol => vol,
                    Functional::Sa => sa,
                    Functional::Ec => ec,
                };
                (beta < t).then(|| {
                    format!(
                        "kernel decay beta = {beta} is below the {f} threshold {t:.4} for k = {k}; \
                         the limit theorems are not guaranteed"
                    )
                })
            })
            .collect())
    }

    /// Full semantic validation, including the memory estimate for every `n`.
    pub fn validate(self) -> Result<ValidatedConfig> {
        let f = &self.field;
        let d = self.kernel.dimension;
        if f.n.is_empty() {
            return Err(Error::config("field.n", "needs at least one box size"));
        }
        for (i, &n) in f.n.iter().enumerate() {
            BoxGeometry::new(d, n, f.epsilon, f.spacing).map_err(|e| match e {
                Error::Config { field, message } if field == "field.n" => {
                    Error::config(format!("field.n[{i}]"), message)
                }
                other => other,
            })?;
        }
        let mut sorted = f.n.clone();
        sorted.sort_by(f64::total_cmp);
        sorted.dedup();
        if sorted.len() != f.n.len() {
            return Err(Error::config("field.n", "box sizes must be distinct"));
        }
        let uses_field = self.kind != ExperimentKind::OracleCheck;
        if uses_field && f.replicates == 0 {
            return Err(Error::config("field.replicates", "must be at least 1"));
        }
        if self.levels.is_empty() && matches!(self.kind, ExperimentKind::Lln | ExperimentKind::Clt)
        {
            return Err(Error::config("levels", "needs at least one level"));
        }
        for (i, l) in self.levels.iter().enumerate() {
            if !l.is_finite() {
                return Err(Error::config(format!("levels[{i}]"), "must be finite"));
            }
        }
        if uses_field && self.functionals.is_empty() && self.kind != ExperimentKind::ArmDecay {
            return Err(Error::config(
                "functionals",
                "needs at least one functional",
            ));
        }
        if d != 2 && self.functionals.contains(&Functional::Sa) && uses_field {
            return Err(Error::config(
                "functionals",
                format!("sa is only available for dimension 2, kernel.dimension is {d}"),
            ));
        }
        match self.kind {
            ExperimentKind::Clt => {
                if f.n.len() < 2 {
                    return Err(Error::config("field.n", "clt needs at least two box sizes"));
                }
                if f.replicates < crate::estimators::MIN_CLT_REPLICATES as u64 {
                    return Err(Error::config(
                        "field.replicates",
                        format!(
                            "clt needs at least {} replicates",
                            crate::estimators::MIN_CLT_REPLICATES
                        ),
                    ));
                }
            }
            ExperimentKind::Lln if f.replicates < 2 => {
                return Err(Error::config(
                    "field.replicates",
                    "lln needs at least 2 replicates",
                ));
            }
            ExperimentKind::ArmDecay | ExperimentKind::DeltaDecay if f.n.len() != 1 => {
                return Err(Error::config(
                    "field.n",
                    format!("{} uses exactly one box size", self.kind.as_str()),
                ));
            }
            _ => {}
        }
        if self.kind == ExperimentKind::ArmDecay {
            if self.arm.radii.is_empty() {
                return Err(Error::config("arm.radii", "needs at least one radius"));
            }
            for (i, &m) in self.arm.radii.iter().enumerate() {
                if !(m > 0.0 && m < f.n[0]) {
                    return Err(Error::config(
                        format!("arm.radii[{i}]"),
                        format!("must lie in (0, n) = (0, {})", f.n[0]),
                    ));
                }
            }
        }
        if self.kind == ExperimentKind::DeltaDecay {
            let dc = &self.decay;
            if !(dc.max_distance >= 0.0 && dc.max_distance.ceil() < f.n[0]) {
                return Err(Error::config(
                    "decay.max_distance",
                    format!("must lie in [0, n - 1] with n = {}", f.n[0]),
                ));
            }
            if !(dc.moment_exponent.is_finite() && dc.moment_exponent > 0.0) {
                return Err(Error::config("decay.moment_exponent", "must be positive"));
            }
            if dc.fit_range[0].partial_cmp(&dc.fit_range[1]) != Some(std::cmp::Ordering::Less) {
                return Err(Error::config("decay.fit_range", "needs lo < hi"));
            }
            if f.n[0].fract() != 0.0 {
                return Err(Error::config(
                    "field.n[0]",
                    "delta_decay needs an integer n",
                ));
            }
        }
        if self.kind == ExperimentKind::OracleCheck {
            let o = &self.oracle;
            if o.trials == 0 || o.width == 0 || o.height == 0 {
                return Err(Error::config(
                    "oracle",
                    "trials, width and height must be positive",
                ));
            }
        }
        if self.kind == ExperimentKind::Clt && self.lilliefors_simulations == 1 {
            return Err(Error::config(
                "lilliefors_simulations",
                "use 0 or at least 2",
            ));
        }
        let kernel = self.kernel_spec()?;
        if uses_field {
            for &n in &f.n {
                FieldSampler::with_budget(&kernel, n, f.epsilon, self.memory_budget_bytes)?;
            }
        }
        let warnings = if uses_field {
            self.threshold_warnings()?
        } else {
            Vec::new()
        };
        Ok(ValidatedConfig {
            config: self,
            kernel,
            warnings,
        })
    }
}
