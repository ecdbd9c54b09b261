//! Experiment execution and summary files.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::estimators::{
    arm_decay, clt_report, delta_moment_decay, estimate_c_star, perturbation_decay, ArmOptions,
    CltOptions, DecayOptions, FunctionalRecord,
};
use crate::field::FieldSampler;
use crate::geometry::oracle::run_mask_suite;
use crate::geometry::{functional_value, label_with_selection, Functional};
use crate::rng::sub_seed;

use super::config::{ExperimentKind, ValidatedConfig};
use super::records::{write_decay_table, write_records, RunRecord};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Worker threads; 0 lets the pool decide.
    pub threads: usize,
    /// Overrides the config's output directory.
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub out_dir: PathBuf,
    pub records: Vec<FunctionalRecord>,
    pub run_records: Vec<RunRecord>,
    /// Files written, relative to `out_dir`, in write order.
    pub files: Vec<String>,
    pub warnings: Vec<String>,
}

#[derive(Serialize)]
struct Sidecar<'a> {
    config_hash: &'a str,
    version: &'a str,
    kind: &'a str,
    threads: usize,
    started_unix: f64,
    finished_unix: f64,
    wall_seconds: f64,
    warnings: &'a [String],
    files: &'a [String],
    run_records: &'a [RunRecord],
}

fn unix_now() -> f64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs_f64())
        .unwrap_or(0.0)
}

/// Master seed for the `i`-th box size, so that box sizes are independent.
pub fn box_seed(master: u64, index: usize) -> u64 {
    sub_seed(master, index as u64)
}

fn level_tag(level: f64) -> String {
    format!("{level}")
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map_or_else(|| "NA".to_string(), |v| v.to_string())
}

struct Outputs {
    dir: PathBuf,
    files: Vec<String>,
}

impl Outputs {
    fn create(&mut self, name: &str) -> Result<BufWriter<File>> {
        self.files.push(name.to_string());
        Ok(BufWriter::new(File::create(self.dir.join(name))?))
    }

    fn csv(&mut self, name: &str, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
        let mut w = csv::Writer::from_writer(self.create(name)?);
        w.write_record(header)?;
        for r in rows {
            w.write_record(r)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Evaluates every (level, functional) pair on every replicate for each box
/// size. Records are ordered by box size, replicate, level, functional.
pub fn compute_records(
    cfg: &ValidatedConfig,
    threads: usize,
) -> Result<(Vec<FunctionalRecord>, Vec<RunRecord>)> {
    let pool = build_pool(threads)?;
    pool.install(|| compute_records_in_pool(cfg))
}

fn build_pool(threads: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Domain(format!("cannot start thread pool: {e}")))
}

fn compute_records_in_pool(
    cfg: &ValidatedConfig,
) -> Result<(Vec<FunctionalRecord>, Vec<RunRecord>)> {
    let c = &cfg.config;
    let hash = c.hash();
    let mut records = Vec::new();
    let mut runs = Vec::new();
    for (i, &n) in c.field.n.iter().enumerate() {
        let sampler =
            FieldSampler::with_budget(&cfg.kernel, n, c.field.epsilon, c.memory_budget_bytes)?;
        let seed = box_seed(c.field.seed, i);
        let per_rep: Vec<RunRecord> = (0..c.field.replicates)
            .into_par_iter()
            .map(|rep| -> Result<RunRecord> {
                let t0 = Instant::now();
                let f = sampler.sample(seed, rep);
                let mut values = Vec::with_capacity(c.levels.len() * c.functionals.len());
                for &level in &c.levels {
                    let lab = label_with_selection(&f, level, c.selection);
                    for &star in &c.functionals {
                        values.push(FunctionalRecord {
                            star,
                            level,
                            n,
                            epsilon: c.field.epsilon,
                            replicate: rep,
                            value: functional_value(&lab, &f, star)?,
                        });
                    }
                }
                Ok(RunRecord {
                    config_hash: hash.clone(),
                    replicate: rep,
                    n,
                    values,
                    wall_seconds: t0.elapsed().as_secs_f64(),
                    version: VERSION.to_string(),
                })
            })
            .collect::<Result<_>>()?;
        for r in &per_rep {
            records.extend_from_slice(&r.values);
        }
        runs.extend(per_rep);
    }
    Ok((records, runs))
}

fn select(
    records: &[FunctionalRecord],
    star: Functional,
    level: f64,
    n: Option<f64>,
) -> Vec<FunctionalRecord> {
    records
        .iter()
        .filter(|r| r.star == star && r.level == level && n.is_none_or(|n| r.n == n))
        .copied()
        .collect()
}

/// Runs one experiment and writes its CSV summaries and `run.json` into the
/// output directory.
pub fn run_experiment(cfg: &ValidatedConfig, options: &RunOptions) -> Result<RunOutput> {
    let started = unix_now();
    let clock = Instant::now();
    let c = &cfg.config;
    let dir = options
        .out
        .clone()
        .or_else(|| c.out.clone())
        .unwrap_or_else(|| PathBuf::from(format!("out-{}", c.kind.as_str())));
    fs::create_dir_all(&dir)?;
    let mut out = Outputs {
        dir: dir.clone(),
        files: Vec::new(),
    };
    let pool = build_pool(options.threads)?;
    let d = c.kernel.dimension;

    let (records, run_records) = match c.kind {
        ExperimentKind::Lln | ExperimentKind::Clt => {
            pool.install(|| compute_records_in_pool(cfg))?
        }
        _ => (Vec::new(), Vec::new()),
    };

    match c.kind {
        ExperimentKind::Lln => {
            write_records(out.create("records.csv")?, &records)?;
            let mut rows = Vec::new();
            for &n in &c.field.n {
                for &level in &c.levels {
                    for &star in &c.functionals {
                        let est = estimate_c_star(&select(&records, star, level, Some(n)), d)?;
                        let (lo, hi) = est.interval(1.96);
                        rows.push(vec![
                            star.to_string(),
                            level.to_string(),
                            n.to_string(),
                            c.field.epsilon.to_string(),
                            est.count.to_string(),
                            est.mean.to_string(),
                            est.std_error.to_string(),
                            lo.to_string(),
                            hi.to_string(),
                        ]);
                    }
                }
            }
            out.csv(
                "lln_summary.csv",
                &[
                    "star", "level", "n", "epsilon", "count", "c_hat", "se", "ci_lo", "ci_hi",
                ],
                &rows,
            )?;
        }
        ExperimentKind::Clt => {
            write_records(out.create("records.csv")?, &records)?;
            let mut summary = Vec::new();
            for &level in &c.levels {
                for &star in &c.functionals {
                    let opts = CltOptions {
                        lilliefors_simulations: c.lilliefors_simulations,
                        seed: sub_seed(c.field.seed, u64::MAX),
                    };
                    let report = clt_report(&select(&records, star, level, None), d, opts)?;
                    let rows: Vec<Vec<String>> = report
                        .rows
                        .iter()
                        .map(|r| {
                            vec![
                                r.n.to_string(),
                                r.moments.mean.to_string(),
                                r.moments.variance.to_string(),
                                r.vnorm.to_string(),
                                r.moments.skewness.to_string(),
                                r.moments.excess_kurtosis.to_string(),
                                r.ks.to_string(),
                                r.ks_p.to_string(),
                            ]
                        })
                        .collect();
                    out.csv(
                        &format!("clt_{star}_{}.csv", level_tag(level)),
                        &["n", "mean", "var", "vnorm", "skew", "kurt", "ks", "ks_p"],
                        &rows,
                    )?;
                    for r in &report.rows {
                        let lower =
                            r.moments.variance_lower_bound(0.95)? / (2.0 * r.n).powi(d as i32);
                        summary.push(vec![
                            star.to_string(),
                            level.to_string(),
                            r.n.to_string(),
                            r.moments.count.to_string(),
                            r.vnorm.to_string(),
                            lower.to_string(),
                            r.moments.skewness.to_string(),
                            r.moments.skewness_se().to_string(),
                            r.moments.excess_kurtosis.to_string(),
                            r.moments.kurtosis_se().to_string(),
                            r.ks.to_string(),
                            r.ks_p.to_string(),
                            fmt_opt(r.lilliefors_p),
                            fmt_opt(r.lilliefors_critical_01),
                        ]);
                    }
                    let ratios: Vec<String> = report
                        .vnorm_ratios()
                        .iter()
                        .map(|x| x.to_string())
                        .collect();
                    summary.push(vec![
                        star.to_string(),
                        level.to_string(),
                        "ratios".into(),
                        String::new(),
                        ratios.join(";"),
                        String::new(),
                        String::new(),
                        String::new(),
                        String::new(),
                        String::new(),
                        String::new(),
                        String::new(),
                        String::new(),
                        String::new(),
                    ]);
                }
            }
            out.csv(
                "clt_summary.csv",
                &[
                    "star",
                    "level",
                    "n",
                    "count",
                    "vnorm",
                    "vnorm_lower95",
                    "skew",
                    "skew_se",
                    "kurt",
                    "kurt_se",
                    "ks",
                    "ks_p",
                    "lilliefors_p",
                    "lilliefors_crit01",
                ],
                &summary,
            )?;
        }
        ExperimentKind::ArmDecay => {
            let sampler = FieldSampler::with_budget(
                &cfg.kernel,
                c.field.n[0],
                c.field.epsilon,
                c.memory_budget_bytes,
            )?;
            let seed = box_seed(c.field.seed, 0);
            let mut summary = Vec::new();
            for &level in &c.levels {
                let opts = ArmOptions {
                    level,
                    radii: c.arm.radii.clone(),
                    z: 1.96,
                };
                let table =
                    pool.install(|| arm_decay(&sampler, seed, 0..c.field.replicates, &opts))?;
                let rows: Vec<Vec<String>> = table
                    .rows
                    .iter()
                    .map(|r| {
                        vec![
                            r.m.to_string(),
                            r.trials.to_string(),
                            r.events.to_string(),
                            r.p_hat.to_string(),
                            r.se.to_string(),
                            r.wilson_lo.to_string(),
                            r.wilson_hi.to_string(),
                            r.connections.to_string(),
                            r.p_connect.to_string(),
                        ]
                    })
                    .collect();
                out.csv(
                    &format!("arm_{}.csv", level_tag(level)),
                    &[
                        "m",
                        "trials",
                        "events",
                        "p_hat",
                        "se",
                        "wilson_lo",
                        "wilson_hi",
                        "connections",
                        "p_connect",
                    ],
                    &rows,
                )?;
                summary.push(vec![
                    level.to_string(),
                    fmt_opt(table.slope),
                    fmt_opt(table.connect_slope),
                    table.censored.to_string(),
                ]);
            }
            out.csv(
                "arm_summary.csv",
                &["level", "slope", "connect_slope", "censored"],
                &summary,
            )?;
        }
        ExperimentKind::DeltaDecay => {
            let sampler = FieldSampler::with_budget(
                &cfg.kernel,
                c.field.n[0],
                c.field.epsilon,
                c.memory_budget_bytes,
            )?;
            let seed = box_seed(c.field.seed, 0);
            let dc = &c.decay;
            let fit = (dc.fit_range[0], dc.fit_range[1]);
            let mut summary = Vec::new();
            for &level in &c.levels {
                for &star in &c.functionals {
                    let opts = DecayOptions {
                        functional: star,
                        level,
                        selection: c.selection,
                        max_distance: dc.max_distance,
                        moment_exponent: dc.moment_exponent,
                        fit_range: fit,
                        reuse_noise: false,
                    };
                    let table = pool.install(|| {
                        delta_moment_decay(&sampler, seed, 0..c.field.replicates, &opts)
                    })?;
                    write_decay_table(
                        out.create(&format!("decay_{star}_{}.csv", level_tag(level)))?,
                        &table.rows,
                    )?;
                    summary.push(vec![
                        star.to_string(),
                        level.to_string(),
                        fmt_opt(table.slope),
                        table.degenerate.to_string(),
                        table.max_abs.to_string(),
                        table.inversions(2.0).to_string(),
                    ]);
                }
            }
            out.csv(
                "decay_summary.csv",
                &[
                    "star",
                    "level",
                    "slope",
                    "degenerate",
                    "max_abs",
                    "inversions",
                ],
                &summary,
            )?;
            let pd = pool.install(|| {
                perturbation_decay(&sampler, seed, 0..c.field.replicates, dc.max_distance, fit)
            })?;
            let mut rows: Vec<Vec<String>> = pd
                .rows
                .iter()
                .map(|r| vec![r.distance.to_string(), r.mean_max_abs.to_string()])
                .collect();
            rows.push(vec!["slope".into(), fmt_opt(pd.slope)]);
            out.csv(
                "perturbation_decay.csv",
                &["distance", "mean_max_abs"],
                &rows,
            )?;
        }
        ExperimentKind::OracleCheck => {
            let o = &c.oracle;
            let tally = run_mask_suite(o.trials, o.width, o.height, c.field.seed);
            out.csv(
                "oracle_check.csv",
                &[
                    "trials",
                    "width",
                    "height",
                    "label_failures",
                    "euler_failures",
                    "passed",
                ],
                &[vec![
                    tally.trials.to_string(),
                    o.width.to_string(),
                    o.height.to_string(),
                    tally.label_failures.to_string(),
                    tally.euler_failures.to_string(),
                    tally.passed().to_string(),
                ]],
            )?;
        }
    }

    let hash = c.hash();
    let files = out.files.clone();
    let sidecar = Sidecar {
        config_hash: &hash,
        version: VERSION,
        kind: c.kind.as_str(),
        threads: pool.current_num_threads(),
        started_unix: started,
        finished_unix: unix_now(),
        wall_seconds: clock.elapsed().as_secs_f64(),
        warnings: &cfg.warnings,
        files: &files,
        run_records: &run_records,
    };
    let mut w = out.create("run.json")?;
    serde_json::to_writer_pretty(&mut w, &sidecar)?;
    w.flush()?;

    Ok(RunOutput {
        out_dir: dir,
        records,
        run_records,
        files: out.files,
        warnings: cfg.warnings.clone(),
    })
}

/// Loads, validates and runs a config file.
pub fn run_config_file(path: &Path, options: &RunOptions) -> Result<RunOutput> {
    let text = fs::read_to_string(path)?;
    let cfg = super::config::ExperimentConfig::from_json_str(&text)?.validate()?;
    run_experiment(&cfg, options)
}
