// SPDX-License-Identifier: Apache-2.0

//! Gnuplot-ready series and fitted slopes from a scaling CSV.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::quench::{fit_log_log, ScalingFit};

use super::CliError;

/// Columns that split a scaling CSV into series, when present.
const SERIES_KEYS: [&str; 4] = ["family", "k_order", "N", "W"];

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    /// `key=value` pairs joined by `_`, e.g. `family=invariant_k_order=3`.
    pub label: String,
    pub tau_over_qsl: Vec<f64>,
    pub n: Vec<f64>,
    pub infidelity: Vec<f64>,
    /// `τ/(τ/τ_QSL)` of the first row, when the CSV has a `tau` column.
    pub tau_qsl: Option<f64>,
    pub fit: Option<ScalingFit>,
    pub fit_error: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlotData {
    pub series: Vec<Series>,
    pub files: Vec<PathBuf>,
}

/// Reads a scaling CSV and fits `ln n` against `ln τ/τ_QSL` per series.
pub fn load_series(csv_path: &Path) -> Result<Vec<Series>, CliError> {
    let mut reader = csv::Reader::from_path(csv_path).map_err(|e| CliError::io(csv_path, e))?;
    let headers = reader
        .headers()
        .map_err(|e| CliError::io(csv_path, e))?
        .clone();
    let column = |name: &str| headers.iter().position(|h| h == name);
    let missing: Vec<&str> = ["tau_over_qsl", "n"]
        .into_iter()
        .filter(|c| column(c).is_none())
        .collect();
    if !missing.is_empty() {
        return Err(CliError::Input(format!(
            "{}: missing column(s): {}",
            csv_path.display(),
            missing.join(", ")
        )));
    }
    let x_col = column("tau_over_qsl").unwrap();
    let n_col = column("n").unwrap();
    let inf_col = column("infidelity");
    let tau_col = column("tau");
    let keys: Vec<(usize, &str)> = SERIES_KEYS
        .iter()
        .filter_map(|k| column(k).map(|i| (i, *k)))
        .collect();

    let mut groups: BTreeMap<String, Series> = BTreeMap::new();
    let mut order: Vec<String> = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record.map_err(|e| CliError::io(csv_path, e))?;
        let num = |col: usize, name: &str| -> Result<f64, CliError> {
            record[col].trim().parse::<f64>().map_err(|_| {
                CliError::Input(format!(
                    "{}: row {}: column {name} is not a number",
                    csv_path.display(),
                    line + 2
                ))
            })
        };
        let label = keys
            .iter()
            .filter(|(i, _)| !record[*i].is_empty())
            .map(|(i, k)| format!("{k}={}", &record[*i]))
            .collect::<Vec<_>>()
            .join("_");
        let label = if label.is_empty() {
            "all".to_string()
        } else {
            label
        };
        let x = num(x_col, "tau_over_qsl")?;
        let entry = groups.entry(label.clone()).or_insert_with(|| {
            order.push(label.clone());
            Series {
                label,
                tau_over_qsl: Vec::new(),
                n: Vec::new(),
                infidelity: Vec::new(),
                tau_qsl: None,
                fit: None,
                fit_error: None,
            }
        });
        entry.tau_over_qsl.push(x);
        entry.n.push(num(n_col, "n")?);
        entry.infidelity.push(match inf_col {
            Some(c) => num(c, "infidelity")?,
            None => f64::NAN,
        });
        if entry.tau_qsl.is_none() {
            if let Some(c) = tau_col {
                entry.tau_qsl = Some(num(c, "tau")? / x);
            }
        }
    }
    if order.is_empty() {
        return Err(CliError::Input(format!("{}: no rows", csv_path.display())));
    }
    Ok(order
        .into_iter()
        .map(|label| {
            let mut s = groups.remove(&label).unwrap();
            match fit_log_log(&s.tau_over_qsl, &s.n) {
                Ok(fit) => s.fit = Some(fit),
                Err(e) => s.fit_error = Some(e.to_string()),
            }
            s
        })
        .collect())
}

/// Writes `<stem>.<series>.dat` per series and `<stem>.slopes.txt` next to the CSV
/// (or into `out_dir`).
pub fn emit_plotdata(csv_path: &Path, out_dir: Option<&Path>) -> Result<PlotData, CliError> {
    let series = load_series(csv_path)?;
    let dir = out_dir
        .map(Path::to_path_buf)
        .unwrap_or_else(|| csv_path.parent().map(Path::to_path_buf).unwrap_or_default());
    std::fs::create_dir_all(&dir).map_err(|e| CliError::io(&dir, e))?;
    let stem = csv_path
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("series");
    let mut files = Vec::new();
    for s in &series {
        let mut text = String::from("# tau_over_qsl n infidelity\n");
        for i in 0..s.n.len() {
            writeln!(
                text,
                "{:e} {:e} {:e}",
                s.tau_over_qsl[i], s.n[i], s.infidelity[i]
            )
            .unwrap();
        }
        let path = dir.join(format!("{stem}.{}.dat", file_safe(&s.label)));
        write_file(&path, &text)?;
        files.push(path);
    }
    let path = dir.join(format!("{stem}.slopes.txt"));
    write_file(&path, &slopes_report(&series))?;
    files.push(path);
    Ok(PlotData { series, files })
}

/// Human- and gnuplot-readable summary: one line per series, then `τ_QSL` reference lines.
pub fn slopes_report(series: &[Series]) -> String {
    let mut text = String::from("# series slope slope_stderr intercept points_used\n");
    for s in series {
        match (&s.fit, &s.fit_error) {
            (Some(f), _) => writeln!(
                text,
                "{} {:.6} {:.6} {:.6} {}",
                s.label, f.slope, f.slope_stderr, f.intercept, f.points_used
            )
            .unwrap(),
            (None, Some(e)) => writeln!(text, "# {} not fitted: {e}", s.label).unwrap(),
            (None, None) => {}
        }
    }
    text.push_str("# reference lines: tau/tau_QSL = 1 per series\n# series tau_qsl\n");
    for s in series {
        if let Some(t) = s.tau_qsl {
            writeln!(text, "{} {:e}", s.label, t).unwrap();
        }
    }
    text
}

fn file_safe(label: &str) -> String {
    label
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '.' || c == '-' || c == '=' {
                c
            } else {
                '_'
            }
        })
        .collect()
}

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| CliError::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_power_law_slope() {
        let dir = tempfile::tempdir().unwrap();
        let csv = dir.path().join("scan.csv");
        let mut text = String::from("family,N,k_order,tau,tau_over_qsl,W,n,fidelity,infidelity\n");
        for i in 0..6 {
            let x = 2.0 + i as f64;
            writeln!(
                text,
                "invariant,100,3,{},{x},0,{},1,0",
                3.0 * x,
                0.5 * x.powf(-6.0)
            )
            .unwrap();
        }
        std::fs::write(&csv, text).unwrap();
        let data = emit_plotdata(&csv, None).unwrap();
        assert_eq!(data.series.len(), 1);
        let fit = data.series[0].fit.unwrap();
        assert!((fit.slope + 6.0).abs() < 1e-12);
        assert!((data.series[0].tau_qsl.unwrap() - 3.0).abs() < 1e-12);
        assert!(data.files.iter().all(|f| f.exists()));
    }

    #[test]
    fn empty_csv_reports_no_rows() {
        let dir = tempfile::tempdir().unwrap();
        let csv = dir.path().join("empty.csv");
        std::fs::write(&csv, "tau_over_qsl,n\n").unwrap();
        let err = load_series(&csv).unwrap_err().to_string();
        assert!(err.contains("no rows"), "{err}");
    }

    #[test]
    fn missing_columns_are_named() {
        let dir = tempfile::tempdir().unwrap();
        let csv = dir.path().join("bad.csv");
        std::fs::write(&csv, "tau,fidelity\n1,1\n").unwrap();
        let err = load_series(&csv).unwrap_err().to_string();
        assert!(err.contains("tau_over_qsl") && err.contains(", n"), "{err}");
    }
}
