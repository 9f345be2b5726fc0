//! JSON and CSV output.
//!
//! Floats in CSV are written with 17 significant digits in scientific
//! notation, which parses back to the identical `f64`. Missing statistics
//! are empty cells in CSV and `null` in JSON.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::estimator::ExponentPlan;
use crate::experiments::{CltReport, RateReport, SandwichReport, WeightSumPoint};
use crate::sim::Point;

/// 17 significant digits, e.g. `5.0000000000000000e-1`.
pub fn format_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn opt(v: Option<f64>) -> String {
    v.map(format_f64).unwrap_or_default()
}

/// A flat table with a header row.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Table {
            header: header.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let csv_err = |source| Error::Csv {
            path: path.to_path_buf(),
            source,
        };
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::CRLF)
            .from_path(path)
            .map_err(csv_err)?;
        w.write_record(&self.header).map_err(csv_err)?;
        for row in &self.rows {
            w.write_record(row).map_err(csv_err)?;
        }
        w.flush().map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })
    }
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let io_err = |source| Error::Io {
        path: path.to_path_buf(),
        source,
    };
    let file = File::create(path).map_err(io_err)?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut w, value).map_err(|source| Error::Json {
        path: path.to_path_buf(),
        source,
    })?;
    w.write_all(b"\n").map_err(io_err)?;
    w.flush().map_err(io_err)
}

pub fn points_table(points: &[Point]) -> Table {
    let mut t = Table::new(["x", "y"]);
    for p in points {
        t.push(vec![format_f64(p.x), format_f64(p.y)]);
    }
    t
}

pub fn write_points_csv(path: &Path, points: &[Point]) -> Result<()> {
    points_table(points).write_csv(path)
}

/// One row per `(n, replicate)`.
pub fn clt_errors_table(report: &CltReport) -> Table {
    let mut t = Table::new(["n", "replicate", "standardized_error"]);
    for p in &report.per_n {
        for (i, e) in p.standardized_errors.iter().enumerate() {
            t.push(vec![p.n.to_string(), i.to_string(), format_f64(*e)]);
        }
    }
    t
}

/// One row per `n`.
pub fn clt_summary_table(report: &CltReport) -> Table {
    let mut t = Table::new([
        "n",
        "k",
        "h",
        "error_scale",
        "replicates",
        "mean",
        "sd",
        "ks_distance",
        "sigma_theory",
    ]);
    for p in &report.per_n {
        t.push(vec![
            p.n.to_string(),
            p.k.to_string(),
            format_f64(p.h),
            format_f64(p.error_scale),
            p.replicates.to_string(),
            format_f64(p.mean),
            opt(p.sd),
            format_f64(p.ks_distance),
            format_f64(p.sigma_theory),
        ]);
    }
    t
}

pub fn sandwich_table(report: &SandwichReport) -> Table {
    let mut t = Table::new([
        "n",
        "k",
        "h",
        "gamma",
        "x",
        "replicates",
        "e_n_failures",
        "p_en_fail_hat",
        "lemma2_bound",
        "lemma2_applicable",
        "lemma2_holds",
        "ordering_violations",
        "bracket_checks",
        "mean_estimator_gap",
        "scaled_estimator_gap",
    ]);
    t.push(vec![
        report.n.to_string(),
        report.k.to_string(),
        format_f64(report.h),
        format_f64(report.gamma),
        format_f64(report.x),
        report.replicates.to_string(),
        report.e_n_failures.to_string(),
        format_f64(report.p_en_fail_hat),
        format_f64(report.lemma2_bound),
        report.lemma2_applicable.to_string(),
        report.lemma2_holds.map(|b| b.to_string()).unwrap_or_default(),
        report.ordering_violations.to_string(),
        report.bracket_checks.to_string(),
        format_f64(report.mean_estimator_gap),
        format_f64(report.scaled_estimator_gap),
    ]);
    t
}

pub fn rate_table(report: &RateReport) -> Table {
    let mut t = Table::new([
        "n",
        "k",
        "gamma",
        "replicates",
        "mean_u_gap",
        "gap_std_error",
        "ratio",
        "negative_gaps",
    ]);
    for p in &report.per_n {
        t.push(vec![
            p.n.to_string(),
            p.k.to_string(),
            format_f64(p.gamma),
            p.replicates.to_string(),
            format_f64(p.mean_u_gap),
            opt(p.gap_std_error),
            format_f64(p.ratio),
            p.negative_gaps.to_string(),
        ]);
    }
    t
}

pub fn weight_sum_table(points: &[WeightSumPoint]) -> Table {
    let mut t = Table::new(["n", "k", "h", "weight_sum", "kernel_sum"]);
    for p in points {
        t.push(vec![
            p.n.to_string(),
            p.k.to_string(),
            format_f64(p.h),
            format_f64(p.weight_sum),
            format_f64(p.kernel_sum),
        ]);
    }
    t
}

pub fn plan_table(plan: &ExponentPlan) -> Table {
    let checks = plan.checks.named();
    let mut header = vec!["alpha".to_string(), "a".into(), "b".into()];
    header.extend(checks.iter().map(|(name, _)| name.to_string()));
    header.push("valid".into());
    let mut row = vec![format_f64(plan.alpha), format_f64(plan.a), format_f64(plan.b)];
    row.extend(checks.iter().map(|(_, ok)| ok.to_string()));
    row.push(plan.valid.to_string());
    Table {
        header,
        rows: vec![row],
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn float_format_round_trips(bits in any::<u64>()) {
            let v = f64::from_bits(bits);
            prop_assume!(v.is_finite());
            let s = format_f64(v);
            prop_assert_eq!(s.parse::<f64>().unwrap().to_bits(), v.to_bits());
        }
    }

    #[test]
    fn seventeen_significant_digits() {
        let s = format_f64(0.1);
        let mantissa = s.split('e').next().unwrap().replace(['.', '-'], "");
        assert_eq!(mantissa.len(), 17);
        assert_eq!(format_f64(0.5), "5.0000000000000000e-1");
    }

    #[test]
    fn points_csv_layout() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p.csv");
        write_points_csv(&path, &[Point::new(0.25, 1.0), Point::new(1.0, 0.0)]).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let lines: Vec<&str> = text.split("\r\n").collect();
        assert_eq!(lines[0], "x,y");
        assert_eq!(lines[1], "2.5000000000000000e-1,1.0000000000000000e0");
        assert_eq!(lines.len(), 4);
    }

    #[test]
    fn quoting_follows_rfc4180() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("q.csv");
        let mut t = Table::new(["a", "b"]);
        t.push(vec!["x,y".into(), "say \"hi\"".into()]);
        t.write_csv(&path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text, "a,b\r\n\"x,y\",\"say \"\"hi\"\"\"\r\n");
    }

    #[test]
    fn io_errors_carry_path() {
        let err = write_json(Path::new("/nonexistent-dir/x.json"), &1).unwrap_err();
        assert!(err.to_string().contains("/nonexistent-dir/x.json"));
    }
}
