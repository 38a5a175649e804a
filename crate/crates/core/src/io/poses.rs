//! Pose lists: one pose per line as 12 whitespace-separated values, the
//! row-major `[R | t]` block. Blank lines and `#` comments are skipped.

use std::path::Path;

use super::{write_file, FormatError};
use crate::geometry::Pose;

/// Parses a pose list. Errors carry the 1-based line number as the offset.
pub fn parse(text: &str) -> Result<Vec<Pose>, FormatError> {
    let mut poses = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        let s = line.trim();
        if s.is_empty() || s.starts_with('#') {
            continue;
        }
        let values: Vec<f64> = s
            .split_whitespace()
            .map(|t| t.parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|e| FormatError::invalid(line_no, format!("line {line_no}: {e}")))?;
        let arr: [f64; 12] = values.as_slice().try_into().map_err(|_| {
            FormatError::invalid(line_no, format!("line {line_no}: expected 12 values, got {}", values.len()))
        })?;
        let pose = Pose::from_row_major(&arr).map_err(|e| FormatError::invalid(line_no, format!("line {line_no}: {e}")))?;
        poses.push(pose);
    }
    Ok(poses)
}

pub fn format(poses: &[Pose]) -> String {
    let mut out = String::new();
    for p in poses {
        let line: Vec<String> = p.to_row_major().iter().map(|v| format!("{v:?}")).collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
    out
}

pub fn write(path: impl AsRef<Path>, poses: &[Pose]) -> Result<(), FormatError> {
    write_file(path.as_ref(), format(poses).as_bytes())
}

pub fn read(path: impl AsRef<Path>) -> Result<Vec<Pose>, FormatError> {
    parse(&std::fs::read_to_string(path)?)
}
