//! Acceptance checks. Each criterion prints one PASS/FAIL line; the process
//! exits non-zero if any fails. Pass criterion numbers as arguments to run a
//! subset, e.g. `cargo test --test acceptance -- 3 4`.

use std::fs;
use std::path::Path;
use std::process::ExitCode;
use std::time::Instant;

use rayon::prelude::*;

use excursion_lab::estimators::normality::normal_cdf;
use excursion_lab::estimators::stats::{wilson_interval, Moments};
use excursion_lab::estimators::{
    arm_decay, clt_report, delta_moment_decay, estimate_c_star, kac_rice_ec, kac_rice_sa,
    ArmOptions, CltOptions, DecayOptions, FunctionalRecord,
};
use excursion_lab::field::FieldSampler;
use excursion_lab::geometry::oracle::run_mask_suite;
use excursion_lab::geometry::{
    label_with_selection, mu_ec_intrinsic, mu_sa, mu_vol, Functional, Selection,
};
use excursion_lab::harness::{compute_records, run_experiment, ExperimentConfig, RunOptions};
use excursion_lab::kernels::{KernelFamily, KernelOptions, KernelSpec};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn bf(h: f64) -> KernelSpec {
    KernelSpec::new(KernelFamily::BargmannFock, 2, h).unwrap()
}

fn config(json: &str) -> excursion_lab::harness::ValidatedConfig {
    ExperimentConfig::from_json_str(json)
        .unwrap()
        .validate()
        .unwrap()
}

fn geometry_oracle() -> Outcome {
    let t = Instant::now();
    let tally = run_mask_suite(10_000, 8, 8, 20_241);
    let secs = t.elapsed().as_secs_f64();
    outcome(
        tally.passed() && secs < 10.0,
        format!(
            "{} masks, label mismatches {}, euler mismatches {}, {secs:.2}s",
            tally.trials, tally.label_failures, tally.euler_failures
        ),
    )
}

fn marginal_law() -> Outcome {
    let levels = [-1.0, -0.5, 0.0, 0.5];
    let n = 32.0;
    let sampler = FieldSampler::new(&bf(0.25), n, 0.25).unwrap();
    let area = (2.0 * n) * (2.0 * n);
    let per_rep: Vec<Vec<f64>> = (0..200u64)
        .into_par_iter()
        .map(|rep| {
            let f = sampler.sample(31, rep);
            levels
                .iter()
                .map(|&l| mu_vol(&label_with_selection(&f, l, Selection::Full)) / area)
                .collect()
        })
        .collect();
    let mut pass = true;
    let mut parts = Vec::new();
    for (i, &l) in levels.iter().enumerate() {
        let xs: Vec<f64> = per_rep.iter().map(|r| r[i]).collect();
        let m = Moments::of(&xs).unwrap();
        let want = 1.0 - normal_cdf(l);
        let z = (m.mean - want) / m.std_error();
        pass &= z.abs() <= 3.0;
        parts.push(format!("l={l}: {:.4} vs {want:.4} ({z:+.2} SE)", m.mean));
    }
    outcome(pass, parts.join("; "))
}

fn kac_rice_length() -> Outcome {
    let n = 32.0;
    let kernel = bf(0.125);
    let sampler = FieldSampler::new(&kernel, n, 0.25).unwrap();
    let area = (2.0 * n) * (2.0 * n);
    let xs: Vec<f64> = (0..200u64)
        .into_par_iter()
        .map(|rep| {
            let f = sampler.sample(41, rep);
            mu_sa(&label_with_selection(&f, 0.0, Selection::Full), &f).unwrap() / area
        })
        .collect();
    let m = Moments::of(&xs).unwrap();
    let want = kac_rice_sa(&kernel, 0.0);
    let rel = (m.mean - want) / want;
    outcome(
        rel.abs() <= 0.05 && (want - 0.5).abs() < 1e-12,
        format!(
            "length density {:.5} +- {:.5} vs {want}, rel err {:+.2}%",
            m.mean,
            m.std_error(),
            100.0 * rel
        ),
    )
}

fn kac_rice_euler() -> Outcome {
    let n = 32.0;
    let kernel = bf(0.125);
    let sampler = FieldSampler::new(&kernel, n, 0.25).unwrap();
    let area = (2.0 * n) * (2.0 * n);
    let levels = [-1.0, 1.0];
    let per_rep: Vec<[f64; 2]> = (0..200u64)
        .into_par_iter()
        .map(|rep| {
            let f = sampler.sample(42, rep);
            levels.map(|l| {
                mu_ec_intrinsic(&label_with_selection(&f, l, Selection::Full)) as f64 / area
            })
        })
        .collect();
    let mut pass = true;
    let mut parts = Vec::new();
    for (i, &l) in levels.iter().enumerate() {
        let xs: Vec<f64> = per_rep.iter().map(|r| r[i]).collect();
        let m = Moments::of(&xs).unwrap();
        let want = kac_rice_ec(&kernel, l).unwrap();
        let reference = l * (2.0 * std::f64::consts::PI).powf(-1.5) * (-0.5f64).exp();
        let rel = (m.mean - want) / want;
        pass &= rel.abs() <= 0.10 && (want - reference).abs() < 1e-12;
        parts.push(format!(
            "l={l}: {:.5} +- {:.5} vs {want:.5} ({:+.2}%)",
            m.mean,
            m.std_error(),
            100.0 * rel
        ));
    }
    outcome(pass, parts.join("; "))
}

fn lln_bounds() -> Outcome {
    let cfg = config(
        r#"{
            "kind": "lln",
            "kernel": {"family": "bargmann_fock"},
            "field": {"n": [32], "epsilon": 0.25, "spacing": 0.25, "replicates": 200, "seed": 51},
            "functionals": ["vol", "sa", "ec"],
            "levels": [-0.5, -8.0]
        }"#,
    );
    let (records, _) = compute_records(&cfg, 0).unwrap();
    let pick = |star: Functional, level: f64| -> Vec<FunctionalRecord> {
        records
            .iter()
            .filter(|r| r.star == star && r.level == level)
            .copied()
            .collect()
    };
    let vol = estimate_c_star(&pick(Functional::Vol, -0.5), 2).unwrap();
    let vol8 = estimate_c_star(&pick(Functional::Vol, -8.0), 2).unwrap();
    let ec = estimate_c_star(&pick(Functional::Ec, -0.5), 2).unwrap();
    let sa8 = estimate_c_star(&pick(Functional::Sa, -8.0), 2).unwrap();
    let cap = 1.0 - normal_cdf(-0.5);
    let (lo, hi) = vol.interval(1.96);
    let (_, ec_hi) = ec.interval(1.96);
    let checks = [
        lo > 0.0 && hi < cap,
        (vol8.mean - 1.0).abs() <= 3.0 * vol8.std_error,
        ec_hi < 0.0,
        sa8.mean.abs() <= 3.0 * sa8.std_error,
    ];
    outcome(
        checks.iter().all(|&c| c),
        format!(
            "c_vol(-0.5) CI [{lo:.4}, {hi:.4}] in (0, {cap:.4}); c_vol(-8) = {} (SE {}); \
             c_ec(-0.5) CI upper {ec_hi:.5}; c_sa(-8) = {} (SE {})",
            vol8.mean, vol8.std_error, sa8.mean, sa8.std_error
        ),
    )
}

/// Runs the CLT experiment once and evaluates criteria 6 and 7 on it.
fn clt_and_positivity() -> (Outcome, Outcome) {
    let cfg = config(
        r#"{
            "kind": "clt",
            "kernel": {"family": "bargmann_fock"},
            "field": {"n": [16, 32, 64], "epsilon": 0.25, "spacing": 0.25, "replicates": 500, "seed": 61},
            "functionals": ["vol", "sa", "ec"],
            "levels": [-0.5],
            "lilliefors_simulations": 4000
        }"#,
    );
    let (records, _) = compute_records(&cfg, 0).unwrap();
    let mut pass6 = true;
    let mut pass7 = true;
    let mut parts6 = Vec::new();
    let mut parts7 = Vec::new();
    for star in Functional::ALL {
        let recs: Vec<FunctionalRecord> =
            records.iter().filter(|r| r.star == star).copied().collect();
        let opts = CltOptions {
            lilliefors_simulations: 4000,
            seed: 62,
        };
        let report = clt_report(&recs, 2, opts).unwrap();
        let ratios = report.vnorm_ratios();
        let a = ratios.iter().all(|r| (0.85..=1.15).contains(r));
        let last = report.row(64.0).unwrap();
        let lp = last.lilliefors_p.unwrap();
        let b = lp > 0.01;
        let m = &last.moments;
        let c = m.skewness.abs() < 0.3 && m.excess_kurtosis.abs() < 0.6;
        pass6 &= a && b && c;
        parts6.push(format!(
            "{star}: ratios [{}]{} lilliefors p {lp:.3}{} skew {:+.3} kurt {:+.3}{}",
            ratios
                .iter()
                .map(|r| format!("{r:.3}"))
                .collect::<Vec<_>>()
                .join(", "),
            if a { "" } else { " (a FAIL)" },
            if b { "" } else { " (b FAIL)" },
            m.skewness,
            m.excess_kurtosis,
            if c { "" } else { " (c FAIL)" },
        ));
        let lower = m.variance_lower_bound(0.95).unwrap() / (2.0 * 64.0f64).powi(2);
        pass7 &= lower > 0.0;
        parts7.push(format!(
            "{star}: sigma^2 lower bound {lower:.4e} (v_64 {:.4e})",
            last.vnorm
        ));
    }
    (
        outcome(pass6, parts6.join("; ")),
        outcome(pass7, parts7.join("; ")),
    )
}

fn arm_decay_check() -> Outcome {
    let sampler = FieldSampler::new(&bf(0.25), 16.0, 0.25).unwrap();
    let opts = ArmOptions {
        level: -0.5,
        radii: vec![2.0, 4.0, 8.0],
        z: 1.96,
    };
    let t = arm_decay(&sampler, 81, 0..5000, &opts).unwrap();
    let p: Vec<f64> = t.rows.iter().map(|r| r.p_hat).collect();
    let decreasing = p.windows(2).all(|w| w[1] < w[0]);
    let (lo2, _) = wilson_interval(t.rows[0].events, t.rows[0].trials, 1.96);
    let (_, hi8) = wilson_interval(t.rows[2].events, t.rows[2].trials, 1.96);
    outcome(
        decreasing && hi8 < lo2,
        format!(
            "P(arm) = {} at m = 2, 4, 8; Wilson m=2 lower {lo2:.4}, m=8 upper {hi8:.4}",
            t.rows
                .iter()
                .map(|r| format!("{}/{}", r.events, r.trials))
                .collect::<Vec<_>>()
                .join(", ")
        ),
    )
}

fn moment_decay() -> Outcome {
    let options = KernelOptions {
        min_radius: Some(12.0),
        ..KernelOptions::default()
    };
    let kernel =
        KernelSpec::with_options(KernelFamily::Rational { beta: 7.0 }, 2, 0.25, options).unwrap();
    let sampler = FieldSampler::new(&kernel, 12.0, 0.25).unwrap();
    let opts = DecayOptions {
        functional: Functional::Vol,
        level: -0.5,
        selection: Selection::Finitary,
        max_distance: 10.0,
        moment_exponent: 2.5,
        fit_range: (2.0, 10.0),
        reuse_noise: false,
    };
    let t = delta_moment_decay(&sampler, 91, 0..2000, &opts).unwrap();
    let slope = t.slope.unwrap_or(f64::NAN);
    outcome(
        slope <= -2.0 && t.max_abs <= 1.0,
        format!(
            "slope {slope:.3} over |w| in [2, 10]; max |Delta| {:.4}; means {}",
            t.max_abs,
            t.rows
                .iter()
                .map(|r| format!("{}:{:.2e}", r.distance, r.mean_abs))
                .collect::<Vec<_>>()
                .join(" ")
        ),
    )
}

fn csv_bytes(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "csv"))
        .map(|p| {
            (
                p.file_name().unwrap().to_string_lossy().into_owned(),
                fs::read(&p).unwrap(),
            )
        })
        .collect();
    files.sort();
    files
}

fn determinism() -> Outcome {
    let configs = [
        r#"{"kind": "lln", "kernel": {"family": "bargmann_fock"},
            "field": {"n": [4, 6], "spacing": 0.25, "replicates": 24, "seed": 101},
            "levels": [-0.5, 0.0, 0.5]}"#,
        r#"{"kind": "clt", "kernel": {"family": "matern", "nu": 4},
            "field": {"n": [2, 3], "spacing": 0.25, "replicates": 100, "seed": 102},
            "lilliefors_simulations": 200}"#,
        r#"{"kind": "arm_decay", "kernel": {"family": "bargmann_fock"},
            "field": {"n": [6], "spacing": 0.25, "replicates": 40, "seed": 103},
            "arm": {"radii": [2, 4]}}"#,
        r#"{"kind": "delta_decay", "kernel": {"family": "rational", "beta": 7},
            "field": {"n": [5], "spacing": 0.25, "replicates": 16, "seed": 104},
            "functionals": ["vol", "ec"],
            "decay": {"max_distance": 4, "fit_range": [1, 4]}}"#,
        r#"{"kind": "oracle_check", "kernel": {"family": "bargmann_fock"},
            "field": {"n": [2], "spacing": 0.5, "replicates": 1, "seed": 105},
            "oracle": {"trials": 500}}"#,
    ];
    let root = tempfile::tempdir().unwrap();
    let mut pass = true;
    let mut files = 0;
    for (i, text) in configs.iter().enumerate() {
        let cfg = config(text);
        let mut outputs = Vec::new();
        for (tag, threads) in [("serial", 1), ("again", 1), ("eight", 8)] {
            let dir = root.path().join(format!("{i}-{tag}"));
            run_experiment(
                &cfg,
                &RunOptions {
                    threads,
                    out: Some(dir.clone()),
                },
            )
            .unwrap();
            outputs.push(csv_bytes(&dir));
        }
        files += outputs[0].len();
        pass &= !outputs[0].is_empty() && outputs[0] == outputs[1] && outputs[0] == outputs[2];
    }
    outcome(
        pass,
        format!(
            "{} configs, {files} CSV files compared byte-for-byte across 1, 1 and 8 threads",
            configs.len()
        ),
    )
}

type Row = (usize, Outcome);

fn record(results: &mut Vec<Row>, i: usize, name: &str, o: Outcome, timing: String) {
    println!(
        "criterion {i:>2} [{}] {name}: {} [{timing}]",
        if o.pass { "PASS" } else { "FAIL" },
        o.detail
    );
    results.push((i, o));
}

type Check = (usize, &'static str, fn() -> Outcome);

fn main() -> ExitCode {
    let only: Vec<usize> = std::env::args()
        .skip(1)
        .filter_map(|a| a.parse().ok())
        .collect();
    let want = |i: usize| only.is_empty() || only.contains(&i);
    let mut results: Vec<Row> = Vec::new();
    let single: [Check; 5] = [
        (1, "geometry oracle equivalence", geometry_oracle),
        (2, "marginal law of the full excursion volume", marginal_law),
        (3, "level-set length vs Kac-Rice", kac_rice_length),
        (
            4,
            "Euler characteristic density vs Kac-Rice",
            kac_rice_euler,
        ),
        (5, "first-order constant bounds and limits", lln_bounds),
    ];
    let later: [Check; 3] = [
        (8, "truncated arm probability decay", arm_decay_check),
        (9, "resampling moment decay", moment_decay),
        (10, "determinism, serial vs 8 threads", determinism),
    ];
    for (i, name, f) in single {
        if want(i) {
            let t = Instant::now();
            let o = f();
            record(
                &mut results,
                i,
                name,
                o,
                format!("{:.1}s", t.elapsed().as_secs_f64()),
            );
        }
    }
    if want(6) || want(7) {
        let t = Instant::now();
        let (six, seven) = clt_and_positivity();
        let timing = format!("{:.1}s shared", t.elapsed().as_secs_f64());
        if want(6) {
            record(
                &mut results,
                6,
                "CLT variance scaling and normality",
                six,
                timing.clone(),
            );
        }
        if want(7) {
            record(&mut results, 7, "positive limiting variance", seven, timing);
        }
    }
    for (i, name, f) in later {
        if want(i) {
            let t = Instant::now();
            let o = f();
            record(
                &mut results,
                i,
                name,
                o,
                format!("{:.1}s", t.elapsed().as_secs_f64()),
            );
        }
    }

    let failed: Vec<usize> = results.iter().filter(|r| !r.1.pass).map(|r| r.0).collect();
    println!(
        "acceptance: {} passed, {} failed{}",
        results.len() - failed.len(),
        failed.len(),
        if failed.is_empty() {
            String::new()
        } else {
            format!(" {failed:?}")
        }
    );
    if failed.is_empty() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
