//! Result tables and their CSV form.
//!
//! A file starts with `#`-prefixed `key=value` metadata lines, then the header
//! `series,x,metric,n_trials,ci_half_width`, then one row per curve point.
//! Floating-point values carry 10 significant digits.

use std::fs;
use std::io::Write;
use std::path::Path;

use ssotfs_core::stats::CurvePoint;

use crate::error::{HarnessError, Result};

pub const HEADER: [&str; 5] = ["series", "x", "metric", "n_trials", "ci_half_width"];

/// Rows of an experiment together with provenance metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultTable {
    /// Ordered `(key, value)` pairs emitted as comment lines.
    pub metadata: Vec<(String, String)>,
    pub rows: Vec<CurvePoint>,
}

impl ResultTable {
    pub fn new(metadata: Vec<(String, String)>, rows: Vec<CurvePoint>) -> Self {
        ResultTable { metadata, rows }
    }

    pub fn meta(&self, key: &str) -> Option<&str> {
        self.metadata.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    /// Rows of one series in table order.
    pub fn series(&self, label: &str) -> Vec<&CurvePoint> {
        self.rows.iter().filter(|r| r.series == label).collect()
    }

    /// Serialises the table.
    pub fn to_csv_string(&self) -> Result<String> {
        let mut out = String::new();
        for (k, v) in &self.metadata {
            out.push_str(&format!("# {k}={v}\n"));
        }
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        w.write_record(HEADER)?;
        for r in &self.rows {
            w.write_record([r.series.clone(), fmt_sig(r.x), fmt_sig(r.metric), r.n_trials.to_string(), fmt_sig(r.ci_half_width)])?;
        }
        let body = w.into_inner().map_err(|e| HarnessError::io("<csv buffer>", e.into_error()))?;
        out.push_str(std::str::from_utf8(&body).expect("csv output is UTF-8"));
        Ok(out)
    }

    /// Parses the output of [`Self::to_csv_string`].
    pub fn from_csv_str(text: &str) -> Result<Self> {
        let metadata = text
            .lines()
            .take_while(|l| l.starts_with('#'))
            .filter_map(|l| l.trim_start_matches('#').trim().split_once('='))
            .map(|(k, v)| (k.to_string(), v.to_string()))
            .collect();
        let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
        let header = rdr.headers()?.clone();
        if header.iter().ne(HEADER.iter().copied()) {
            return Err(HarnessError::validation("csv header", format!("unexpected columns {header:?}")));
        }
        let mut rows = Vec::new();
        for rec in rdr.records() {
            let rec = rec?;
            let num = |i: usize| -> Result<f64> {
                rec[i].parse().map_err(|_| HarnessError::validation(HEADER[i], format!("not a number: {}", &rec[i])))
            };
            rows.push(CurvePoint {
                series: rec[0].to_string(),
                x: num(1)?,
                metric: num(2)?,
                n_trials: rec[3]
                    .parse()
                    .map_err(|_| HarnessError::validation("n_trials", format!("not an integer: {}", &rec[3])))?,
                ci_half_width: num(4)?,
            });
        }
        Ok(ResultTable { metadata, rows })
    }
}

/// Writes the table to `path`.
pub fn emit_csv(table: &ResultTable, path: &Path) -> Result<()> {
    let text = table.to_csv_string()?;
    let mut f = fs::File::create(path).map_err(|e| HarnessError::io(path, e))?;
    f.write_all(text.as_bytes()).map_err(|e| HarnessError::io(path, e))
}

/// `v` with 10 significant digits: positional notation for moderate
/// magnitudes, scientific otherwise; trailing zeros are dropped.
pub fn fmt_sig(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    if !v.is_finite() {
        return format!("{v}");
    }
    let sci = format!("{v:.9e}");
    let (mantissa, exp) = sci.split_once('e').expect("scientific format has an exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..10).contains(&exp) {
        // Re-render positionally from the rounded mantissa so the digits agree.
        let rounded: f64 = sci.parse().expect("valid float");
        let decimals = (9 - exp).max(0) as usize;
        trim_zeros(format!("{rounded:.decimals$}"))
    } else {
        format!("{}e{exp}", trim_zeros(mantissa.to_string()))
    }
}

fn trim_zeros(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn significant_digit_formatting() {
        assert_eq!(fmt_sig(0.0), "0");
        assert_eq!(fmt_sig(1.0), "1");
        assert_eq!(fmt_sig(-2.5), "-2.5");
        assert_eq!(fmt_sig(1.0 / 3.0), "0.3333333333");
        assert_eq!(fmt_sig(123456.789012345), "123456.789");
        assert_eq!(fmt_sig(2.0f64.powi(40)), "1.099511628e12");
        assert_eq!(fmt_sig(1.23456789012e-7), "1.23456789e-7");
        assert_eq!(fmt_sig(0.0001), "0.0001");
        assert_eq!(fmt_sig(9.9999999999), "10");
    }

    #[test]
    fn empty_table_is_header_only() {
        let t = ResultTable::new(vec![], vec![]);
        assert_eq!(t.to_csv_string().unwrap(), "series,x,metric,n_trials,ci_half_width\n");
    }

    #[test]
    fn csv_round_trip() {
        let t = ResultTable::new(
            vec![("kind".into(), "fer".into()), ("seed".into(), "7".into())],
            vec![
                CurvePoint { series: "a,b".into(), x: 1.5, metric: 0.125, n_trials: 1000, ci_half_width: 0.02 },
                CurvePoint { series: "P=3/bound".into(), x: 8.0, metric: 512.0, n_trials: 0, ci_half_width: 0.0 },
            ],
        );
        let s = t.to_csv_string().unwrap();
        let back = ResultTable::from_csv_str(&s).unwrap();
        assert_eq!(back, t);
        assert_eq!(back.to_csv_string().unwrap(), s);
    }
}
