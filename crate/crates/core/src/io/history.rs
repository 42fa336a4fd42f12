//! Iteration history as CSV: fixed header, one row per iteration, floats
//! at nine significant digits, LF line endings.

use std::path::Path;

use crate::error::ConfigError;
use crate::optimizer::IterationRecord;

pub const HISTORY_HEADER: &str =
    "iter,compliance,volume_fraction,infill_volume_fraction,max_rel_change";

pub fn history_csv(records: &[IterationRecord]) -> String {
    let mut s = String::with_capacity(64 * (records.len() + 1));
    s.push_str(HISTORY_HEADER);
    s.push('\n');
    for r in records {
        s.push_str(&format!(
            "{},{:.8e},{:.8e},{:.8e},{:.8e}\n",
            r.iter, r.compliance, r.volume_fraction, r.infill_volume_fraction, r.max_rel_change
        ));
    }
    s
}

pub fn write_history_csv(records: &[IterationRecord], path: &Path) -> std::io::Result<()> {
    std::fs::write(path, history_csv(records))
}

/// Reads a file written by [`write_history_csv`]. The CSV does not carry
/// the restoration flag; it reads back as `false`.
pub fn read_history_csv(path: &Path) -> Result<Vec<IterationRecord>, ConfigError> {
    parse_history_csv(&std::fs::read_to_string(path)?)
}

pub fn parse_history_csv(text: &str) -> Result<Vec<IterationRecord>, ConfigError> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h == HISTORY_HEADER => {}
        other => {
            return Err(ConfigError::Syntax {
                line: 1,
                message: format!("expected history header, got `{}`", other.map_or("", |o| o.1)),
            })
        }
    }
    let mut records = Vec::new();
    for (i, row) in lines {
        let line = i + 1;
        let fields: Vec<&str> = row.split(',').collect();
        if fields.len() != 5 {
            return Err(ConfigError::Syntax {
                line,
                message: format!("expected 5 columns, got {}", fields.len()),
            });
        }
        let num = |j: usize| -> Result<f64, ConfigError> {
            fields[j].parse().map_err(|_| ConfigError::Syntax {
                line,
                message: format!("cannot parse `{}` as a number", fields[j]),
            })
        };
        records.push(IterationRecord {
            iter: fields[0].parse().map_err(|_| ConfigError::Syntax {
                line,
                message: format!("cannot parse `{}` as an iteration index", fields[0]),
            })?,
            compliance: num(1)?,
            volume_fraction: num(2)?,
            infill_volume_fraction: num(3)?,
            max_rel_change: num(4)?,
            restoration: false,
        });
    }
    Ok(records)
}
