//! Beacon report files for one-shot localization.
//!
//! One report per line as `beacon_x,beacon_y,avg_rssi_dbm,sample_count`.
//! An optional header line starting with `beacon_x`, blank lines and lines
//! starting with `#` are skipped.

use gridloc_core::{Point, RssiReport};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {reason}")]
pub struct ReportParseError {
    pub line: usize,
    pub reason: String,
}

pub fn parse_reports(text: &str) -> Result<Vec<RssiReport>, ReportParseError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let row = raw.trim();
        if row.is_empty() || row.starts_with('#') || (i == 0 && row.starts_with("beacon_x")) {
            continue;
        }
        let err = |reason: String| ReportParseError { line, reason };
        let fields: Vec<&str> = row.split(',').map(str::trim).collect();
        if fields.len() != 4 {
            return Err(err(format!("expected 4 fields, found {}", fields.len())));
        }
        let num = |idx: usize, name: &str| -> Result<f64, ReportParseError> {
            match fields[idx].parse::<f64>() {
                Ok(v) if v.is_finite() => Ok(v),
                _ => Err(err(format!("{name} is not a finite number: {:?}", fields[idx]))),
            }
        };
        let x = num(0, "beacon_x")?;
        let y = num(1, "beacon_y")?;
        let rssi = num(2, "avg_rssi_dbm")?;
        let count: u32 = fields[3]
            .parse()
            .map_err(|_| err(format!("sample_count is not a non-negative integer: {:?}", fields[3])))?;
        out.push(RssiReport::new(Point::new(x, y), rssi, count));
    }
    Ok(out)
}
