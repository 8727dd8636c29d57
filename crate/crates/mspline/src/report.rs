//! CSV, JSON and aligned-text output.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::Serialize;

use crate::error::{AppError, AppResult};
use crate::estimator::Estimator;
use crate::noise::ErrorDist;
use crate::rates::RateReport;
use crate::simulate::SimulationReport;

/// Where a report came from.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Provenance {
    pub tool: String,
    pub command: String,
    pub config_sha256: String,
    pub seed: u64,
}

impl Provenance {
    pub fn new(command: &str, config_sha256: &str, seed: u64) -> Self {
        Self {
            tool: format!("mspline {}", env!("CARGO_PKG_VERSION")),
            command: command.to_string(),
            config_sha256: config_sha256.to_string(),
            seed,
        }
    }

    fn banner(&self) -> String {
        format!(
            "# {} {}\n# config sha256: {}\n# seed: {}\n",
            self.tool, self.command, self.config_sha256, self.seed
        )
    }
}

pub fn write_file(path: &Path, contents: &[u8]) -> AppResult<()> {
    fs::write(path, contents).map_err(|e| AppError::io(path, e))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> AppResult<()> {
    let mut s = serde_json::to_string_pretty(value).expect("report types serialize");
    s.push('\n');
    write_file(path, s.as_bytes())
}

/// Builds CSV text with `,` separators, a header row and `\n` endings.
pub fn csv_text(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for r in rows {
        w.write_record(r).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("UTF-8 fields")
}

/// Three significant digits, switching to exponent notation for very
/// large or small magnitudes.
pub fn sig3(x: f64) -> String {
    let a = x.abs();
    if !x.is_finite() {
        format!("{x}")
    } else if a != 0.0 && !(1e-3..1e4).contains(&a) {
        format!("{x:.2e}")
    } else {
        let decimals = if a == 0.0 { 3 } else { (2 - a.log10().floor() as i32).clamp(0, 5) as usize };
        format!("{x:.decimals$}")
    }
}

/// Left-aligned first columns, right-aligned rest.
pub fn aligned_table(header: &[String], rows: &[Vec<String>], left: usize) -> String {
    let ncol = header.len();
    let width: Vec<usize> = (0..ncol)
        .map(|c| rows.iter().map(|r| r[c].chars().count()).chain([header[c].chars().count()]).max().unwrap())
        .collect();
    let mut out = String::new();
    let mut line = |cells: &[String]| {
        let parts: Vec<String> = cells
            .iter()
            .enumerate()
            .map(|(c, s)| {
                if c < left {
                    format!("{s:<w$}", w = width[c])
                } else {
                    format!("{s:>w$}", w = width[c])
                }
            })
            .collect();
        let _ = writeln!(out, "{}", parts.join("  ").trim_end());
    };
    line(header);
    line(&width.iter().map(|w| "-".repeat(*w)).collect::<Vec<_>>());
    for r in rows {
        line(r);
    }
    out
}

pub fn simulation_csv(report: &SimulationReport) -> String {
    let rows: Vec<Vec<String>> = report
        .cells
        .iter()
        .map(|c| {
            vec![
                c.function.clone(),
                c.error.label().to_string(),
                c.estimator.label().to_string(),
                c.replications.to_string(),
                c.failures.to_string(),
                c.mean_mse.to_string(),
                c.se_mse.to_string(),
                c.median_mse.to_string(),
                c.max_mse.to_string(),
            ]
        })
        .collect();
    csv_text(
        &["function", "error", "estimator", "replications", "failures", "mean_mse", "se_mse", "median_mse", "max_mse"],
        &rows,
    )
}

/// One row per (function, error law), one column per estimator, entries
/// `mean (se)`.
pub fn simulation_table(report: &SimulationReport, provenance: &Provenance) -> String {
    let mut functions: Vec<&str> = Vec::new();
    let mut errors: Vec<ErrorDist> = Vec::new();
    let mut estimators: Vec<Estimator> = Vec::new();
    for c in &report.cells {
        if !functions.contains(&c.function.as_str()) {
            functions.push(&c.function);
        }
        if !errors.contains(&c.error) {
            errors.push(c.error);
        }
        if !estimators.contains(&c.estimator) {
            estimators.push(c.estimator);
        }
    }
    let mut header = vec!["function".to_string(), "errors".to_string()];
    header.extend(estimators.iter().map(|e| e.label().to_string()));
    let mut rows = Vec::new();
    let mut failures = 0;
    for f in &functions {
        for e in &errors {
            let mut row = vec![f.to_string(), e.label().to_string()];
            for est in &estimators {
                let cell = report.cell(f, *e, *est).expect("every combination is reported");
                failures += cell.failures;
                let mark = if cell.failures > 0 { "*" } else { "" };
                row.push(format!("{} ({}){mark}", sig3(cell.mean_mse), sig3(cell.se_mse)));
            }
            rows.push(row);
        }
    }
    let mut out = provenance.banner();
    let _ = writeln!(
        out,
        "# mean MSE (standard error) over {} replications, n = {}",
        report.replications, report.n
    );
    out.push_str(&aligned_table(&header, &rows, 2));
    if failures > 0 {
        let _ = writeln!(out, "* cell has failed replications ({failures} in total); see the CSV");
    }
    out
}

pub fn write_simulation(report: &SimulationReport, dir: &Path, provenance: &Provenance) -> AppResult<()> {
    fs::create_dir_all(dir).map_err(|e| AppError::io(dir, e))?;
    write_file(&dir.join("simulation.csv"), simulation_csv(report).as_bytes())?;
    write_file(&dir.join("simulation.txt"), simulation_table(report, provenance).as_bytes())?;
    write_json(&dir.join("provenance.json"), provenance)
}

pub fn rates_csv(report: &RateReport, orders: &[usize]) -> String {
    let mut header = vec!["n", "lambda", "replications", "failures", "median_l2", "median_m_lambda"];
    let names: Vec<String> = orders.iter().map(|j| format!("median_d{j}")).collect();
    header.extend(names.iter().map(String::as_str));
    let rows: Vec<Vec<String>> = report
        .rows
        .iter()
        .map(|r| {
            let mut v = vec![
                r.n.to_string(),
                r.lambda.to_string(),
                r.replications.to_string(),
                r.failures.to_string(),
                r.median_l2.to_string(),
                r.median_m_lambda.to_string(),
            ];
            v.extend(r.median_derivative.iter().map(|x| x.to_string()));
            v
        })
        .collect();
    csv_text(&header, &rows)
}

pub fn slopes_csv(report: &RateReport) -> String {
    let rows: Vec<Vec<String>> = report
        .slopes
        .iter()
        .map(|s| vec![s.norm.clone(), s.slope.to_string(), s.se.to_string(), s.theory.to_string()])
        .collect();
    csv_text(&["norm", "slope", "se", "theory"], &rows)
}

pub fn rates_table(report: &RateReport, orders: &[usize], provenance: &Provenance) -> String {
    let mut out = provenance.banner();
    let _ = writeln!(out, "# lambda = {} * n^(-{})", sig3(report.a), sig3(report.gamma));
    let mut header: Vec<String> = ["n", "lambda", "fails", "median L2", "median m,lambda"].map(String::from).to_vec();
    header.extend(orders.iter().map(|j| format!("median d{j}")));
    let rows: Vec<Vec<String>> = report
        .rows
        .iter()
        .map(|r| {
            let mut v = vec![r.n.to_string(), sig3(r.lambda), r.failures.to_string(), sig3(r.median_l2), sig3(r.median_m_lambda)];
            v.extend(r.median_derivative.iter().map(|x| sig3(*x)));
            v
        })
        .collect();
    out.push_str(&aligned_table(&header, &rows, 0));
    out.push('\n');
    let header: Vec<String> = ["norm", "slope", "se", "theory"].map(String::from).to_vec();
    let rows: Vec<Vec<String>> = report
        .slopes
        .iter()
        .map(|s| vec![s.norm.clone(), format!("{:.3}", s.slope), format!("{:.3}", s.se), format!("{:.3}", s.theory)])
        .collect();
    out.push_str(&aligned_table(&header, &rows, 1));
    out
}

pub fn write_rates(report: &RateReport, orders: &[usize], dir: &Path, provenance: &Provenance) -> AppResult<()> {
    fs::create_dir_all(dir).map_err(|e| AppError::io(dir, e))?;
    write_file(&dir.join("rates.csv"), rates_csv(report, orders).as_bytes())?;
    write_file(&dir.join("slopes.csv"), slopes_csv(report).as_bytes())?;
    write_file(&dir.join("rates.txt"), rates_table(report, orders, provenance).as_bytes())?;
    write_json(&dir.join("provenance.json"), provenance)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_uses_lf_and_header() {
        let s = csv_text(&["a", "b"], &[vec!["1.5".into(), "x".into()]]);
        assert_eq!(s, "a,b\n1.5,x\n");
    }

    #[test]
    fn significant_digits() {
        assert_eq!(sig3(0.0961), "0.0961");
        assert_eq!(sig3(0.664), "0.664");
        assert_eq!(sig3(12.3456), "12.3");
        assert_eq!(sig3(40000.0), "4.00e4");
        assert_eq!(sig3(0.0), "0.000");
    }

    #[test]
    fn alignment() {
        let t = aligned_table(
            &["name".into(), "v".into()],
            &[vec!["a".into(), "10".into()], vec!["bbbbb".into(), "2".into()]],
            1,
        );
        assert_eq!(t, "name    v\n-----  --\na      10\nbbbbb   2\n");
    }
}
