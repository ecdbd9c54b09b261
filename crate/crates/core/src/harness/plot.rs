//! Gnuplot-ready TSV from records and decay CSVs.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::estimators::stats::Moments;
use crate::estimators::FunctionalRecord;
use crate::geometry::Functional;

use super::records::DecayPoint;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlotKind {
    Lln,
    Clt,
    Decay,
}

impl std::str::FromStr for PlotKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lln" => Ok(PlotKind::Lln),
            "clt" => Ok(PlotKind::Clt),
            "decay" => Ok(PlotKind::Decay),
            other => Err(Error::Parse(format!("unknown plot kind {other:?}"))),
        }
    }
}

type Key = (Functional, u64, u64);

fn group(records: &[FunctionalRecord]) -> BTreeMap<Key, (f64, f64, Vec<f64>)> {
    // Levels and n are keyed by their bit patterns, ordered by value below.
    let mut map: BTreeMap<Key, (f64, f64, Vec<f64>)> = BTreeMap::new();
    for r in records {
        map.entry((r.star, ordered_bits(r.level), ordered_bits(r.n)))
            .or_insert_with(|| (r.level, r.n, Vec::new()))
            .2
            .push(r.value);
    }
    map
}

/// Maps an f64 to a u64 whose unsigned order matches the numeric order.
fn ordered_bits(x: f64) -> u64 {
    let b = x.to_bits();
    if b >> 63 == 1 {
        !b
    } else {
        b | (1 << 63)
    }
}

/// One block per (functional, level), one row per n: normalized mean and SE.
pub fn lln_tsv(records: &[FunctionalRecord], dim: usize) -> String {
    let mut out = String::from("# star\tlevel\tn\tcount\tc_hat\tse\n");
    for ((star, _, _), (level, n, xs)) in group(records) {
        let scale = (2.0 * n).powi(dim as i32);
        let ys: Vec<f64> = xs.iter().map(|x| x / scale).collect();
        if let Ok(m) = Moments::of(&ys) {
            let _ = writeln!(
                out,
                "{star}\t{level}\t{n}\t{}\t{}\t{}",
                m.count,
                m.mean,
                m.std_error()
            );
        }
    }
    out
}

/// Per (functional, level, n): variance scaling and shape.
pub fn clt_tsv(records: &[FunctionalRecord], dim: usize) -> String {
    let mut out = String::from("# star\tlevel\tn\tcount\tmean\tvar\tvnorm\tskew\tkurt\n");
    for ((star, _, _), (level, n, xs)) in group(records) {
        if let Ok(m) = Moments::of(&xs) {
            let vnorm = m.variance / (2.0 * n).powi(dim as i32);
            let _ = writeln!(
                out,
                "{star}\t{level}\t{n}\t{}\t{}\t{}\t{vnorm}\t{}\t{}",
                m.count, m.mean, m.variance, m.skewness, m.excess_kurtosis
            );
        }
    }
    out
}

/// Decay table with log coordinates; rows with zero mean get no log columns.
pub fn decay_tsv(points: &[DecayPoint]) -> String {
    let mut out =
        String::from("# distance\tmean_abs\tmean_pow\tse\tlog1p_distance\tlog_mean_abs\n");
    for p in points {
        let logs = if p.mean_abs > 0.0 {
            format!("{}\t{}", p.distance.ln_1p(), p.mean_abs.ln())
        } else {
            "NaN\tNaN".to_string()
        };
        let _ = writeln!(
            out,
            "{}\t{}\t{}\t{}\t{logs}",
            p.distance, p.mean_abs, p.mean_pow, p.se
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(star: Functional, level: f64, n: f64, value: f64, replicate: u64) -> FunctionalRecord {
        FunctionalRecord {
            star,
            level,
            n,
            epsilon: 0.25,
            replicate,
            value,
        }
    }

    #[test]
    fn lln_groups_and_sorts_numerically() {
        let recs = vec![
            rec(Functional::Vol, 0.5, 2.0, 8.0, 0),
            rec(Functional::Vol, -0.5, 2.0, 16.0, 0),
            rec(Functional::Vol, -0.5, 2.0, 16.0, 1),
            rec(Functional::Vol, 0.5, 2.0, 8.0, 1),
        ];
        let tsv = lln_tsv(&recs, 2);
        let lines: Vec<&str> = tsv.lines().collect();
        assert_eq!(lines.len(), 3);
        assert_eq!(lines[1], "vol\t-0.5\t2\t2\t1\t0");
        assert_eq!(lines[2], "vol\t0.5\t2\t2\t0.5\t0");
    }

    #[test]
    fn decay_rows_have_logs() {
        let pts = [
            DecayPoint {
                distance: 0.0,
                mean_abs: 1.0,
                mean_pow: 1.0,
                se: 0.0,
            },
            DecayPoint {
                distance: 3.0,
                mean_abs: 0.0,
                mean_pow: 0.0,
                se: 0.0,
            },
        ];
        let tsv = decay_tsv(&pts);
        assert!(tsv.lines().nth(1).unwrap().ends_with("\t0\t0"));
        assert!(tsv.lines().nth(2).unwrap().ends_with("NaN\tNaN"));
    }

    #[test]
    fn ordered_bits_is_monotone() {
        let xs = [-3.0, -0.5, -0.0, 0.0, 0.25, 7.0];
        for w in xs.windows(2) {
            assert!(ordered_bits(w[0]) <= ordered_bits(w[1]));
        }
    }
}
