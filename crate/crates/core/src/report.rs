//! Study reports: aligned text tables and CSV files.

use std::fmt::Write as _;
use std::io::{Read, Write};
use std::time::{SystemTime, UNIX_EPOCH};

use crate::error::{invalid, Error, Result};
use crate::study::{GoldenCheck, StudyResult};

/// One value column with its observed orders.
#[derive(Clone, Debug, PartialEq)]
pub struct ReportColumn {
    pub label: String,
    pub values: Vec<f64>,
    /// `None` at the first level.
    pub orders: Vec<Option<f64>>,
    pub predicted: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct Report {
    pub title: String,
    pub metadata: Vec<(String, String)>,
    pub h_ratios: Vec<f64>,
    pub columns: Vec<ReportColumn>,
    pub checks: Vec<GoldenCheck>,
}

/// Scientific notation with 5 significant digits and a two-digit exponent, as in `3.2150e-03`.
pub fn sci(x: f64) -> String {
    if !x.is_finite() {
        return format!("{x}");
    }
    let s = format!("{x:.4e}");
    let (mantissa, exp) = s.split_once('e').unwrap_or((&s, "0"));
    let e: i32 = exp.parse().unwrap_or(0);
    format!("{mantissa}e{}{:02}", if e < 0 { '-' } else { '+' }, e.abs())
}

pub fn version_string() -> String {
    format!("superclose {}", env!("CARGO_PKG_VERSION"))
}

fn timestamp() -> String {
    let secs = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
    format!("{secs}")
}

impl Report {
    pub fn new(title: impl Into<String>) -> Self {
        Report {
            title: title.into(),
            metadata: vec![
                ("version".into(), version_string()),
                ("unix_time".into(), timestamp()),
            ],
            h_ratios: Vec::new(),
            columns: Vec::new(),
            checks: Vec::new(),
        }
    }

    pub fn with_meta(mut self, key: impl Into<String>, value: impl Into<String>) -> Self {
        self.metadata.push((key.into(), value.into()));
        self
    }

    /// Appends every norm of a study as a column, prefixing labels with `prefix`.
    pub fn add_study(&mut self, prefix: &str, result: &StudyResult) -> Result<()> {
        let ratios: Vec<f64> = result.rows.iter().map(|r| r.h_ratio).collect();
        if self.h_ratios.is_empty() {
            self.h_ratios = ratios;
        } else if self.h_ratios != ratios {
            return invalid("studies in one report must share their levels");
        }
        for (j, norm) in result.norms.iter().enumerate() {
            let label = if prefix.is_empty() {
                norm.label()
            } else {
                format!("{prefix} {}", norm.label())
            };
            self.columns.push(ReportColumn {
                label,
                values: result.values(j),
                orders: result.rows.iter().map(|r| r.orders[j]).collect(),
                predicted: result.predicted[j],
            });
        }
        Ok(())
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    /// Aligned table with values in scientific notation to 5 significant digits.
    pub fn text_table(&self) -> String {
        let mut header = vec!["h0/h".to_string()];
        for c in &self.columns {
            header.push(c.label.clone());
            header.push("order".into());
        }
        let mut cells: Vec<Vec<String>> = vec![header];
        for (i, ratio) in self.h_ratios.iter().enumerate() {
            let mut row = vec![format!("{ratio}")];
            for c in &self.columns {
                row.push(sci(c.values[i]));
                row.push(c.orders[i].map_or("-".into(), |o| format!("{o:.4}")));
            }
            cells.push(row);
        }
        if self.columns.iter().any(|c| c.predicted.is_some()) {
            let mut row = vec!["predicted".to_string()];
            for c in &self.columns {
                row.push(String::new());
                row.push(c.predicted.map_or("-".into(), |p| format!("{p:.4}")));
            }
            cells.push(row);
        }
        let widths: Vec<usize> = (0..cells[0].len())
            .map(|j| cells.iter().map(|r| r[j].chars().count()).max().unwrap_or(0))
            .collect();
        let mut out = format!("{}\n", self.title);
        for row in &cells {
            let line: Vec<String> = row
                .iter()
                .zip(&widths)
                .map(|(c, w)| format!("{c:>w$}", w = *w))
                .collect();
            let _ = writeln!(out, "{}", line.join("  ").trim_end());
        }
        for check in &self.checks {
            let _ = writeln!(
                out,
                "{} {}: computed {}, expected {} ({} tolerance {})",
                if check.passed { "PASS" } else { "FAIL" },
                check.label,
                sci(check.computed),
                sci(check.expected),
                if check.relative { "relative" } else { "absolute" },
                check.tolerance
            );
        }
        out
    }

    /// CSV with columns `level, h_ratio`, then `<label>, <label>_order` per column.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(writer);
        let mut header = vec!["level".to_string(), "h_ratio".to_string()];
        for c in &self.columns {
            header.push(c.label.clone());
            header.push(format!("{}_order", c.label));
        }
        w.write_record(&header)?;
        for (i, ratio) in self.h_ratios.iter().enumerate() {
            let mut rec = vec![i.to_string(), format!("{ratio:.16e}")];
            for c in &self.columns {
                rec.push(format!("{:.16e}", c.values[i]));
                rec.push(c.orders[i].map_or(String::new(), |o| format!("{o:.16e}")));
            }
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_csv_file(&self, path: &std::path::Path) -> Result<()> {
        self.write_csv(std::fs::File::create(path)?)
    }
}

/// Columns read back from a CSV written by [`Report::write_csv`].
pub fn read_csv<R: Read>(reader: R) -> Result<(Vec<f64>, Vec<ReportColumn>)> {
    let mut r = csv::Reader::from_reader(reader);
    let header: Vec<String> = r.headers()?.iter().map(String::from).collect();
    if header.len() < 2 || header[0] != "level" || header[1] != "h_ratio" || header.len() % 2 != 0 {
        return invalid("not a study CSV");
    }
    let mut columns: Vec<ReportColumn> = header[2..]
        .chunks(2)
        .map(|p| ReportColumn {
            label: p[0].clone(),
            values: Vec::new(),
            orders: Vec::new(),
            predicted: None,
        })
        .collect();
    let mut ratios = Vec::new();
    let num = |s: &str| {
        s.parse::<f64>()
            .map_err(|_| Error::InvalidArgument(format!("bad number `{s}` in CSV")))
    };
    for rec in r.records() {
        let rec = rec?;
        ratios.push(num(&rec[1])?);
        for (j, col) in columns.iter_mut().enumerate() {
            col.values.push(num(&rec[2 + 2 * j])?);
            let o = &rec[3 + 2 * j];
            col.orders.push(if o.is_empty() { None } else { Some(num(o)?) });
        }
    }
    Ok((ratios, columns))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Report {
        let mut r = Report::new("sample");
        r.h_ratios = vec![1.0, 2.0];
        r.columns.push(ReportColumn {
            label: "L2".into(),
            values: vec![0.1 + 0.2, 1.0 / 3.0],
            orders: vec![None, Some(std::f64::consts::PI)],
            predicted: Some(2.5),
        });
        r
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let r = sample();
        let mut buf = Vec::new();
        r.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("level,h_ratio,L2,L2_order\n"));
        assert!(!text.contains('\r'));
        let (ratios, cols) = read_csv(buf.as_slice()).unwrap();
        assert_eq!(ratios, r.h_ratios);
        assert_eq!(cols[0].values, r.columns[0].values);
        assert_eq!(cols[0].orders, r.columns[0].orders);
    }

    #[test]
    fn text_table_layout() {
        let t = sample().text_table();
        assert!(t.contains("3.0000e-01"));
        assert_eq!(sci(5.5132e-7), "5.5132e-07");
        assert_eq!(sci(1.0), "1.0000e+00");
        assert!(t.contains("3.1416"));
        assert!(t.contains("predicted"));
        assert_eq!(t.lines().count(), 5);
    }
}
