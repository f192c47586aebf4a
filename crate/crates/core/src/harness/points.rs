//! Points files: one point per line, in the oracle request line format.

use std::path::Path;

use super::{invalid, HarnessError};
use crate::oracle::{format_request, parse_request};

pub fn parse_points(text: &str) -> Result<Vec<Vec<f64>>, HarnessError> {
    let mut points: Vec<Vec<f64>> = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() || line.trim_start().starts_with('#') {
            continue;
        }
        let point = parse_request(line, points.first().map(Vec::len))
            .map_err(|e| invalid(format!("line {}", i + 1), e.to_string()))?;
        if point.is_empty() {
            continue;
        }
        points.push(point);
    }
    Ok(points)
}

pub fn read_points(path: impl AsRef<Path>) -> Result<Vec<Vec<f64>>, HarnessError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .map_err(|e| HarnessError::Config(format!("cannot read points file {}: {e}", path.display())))?;
    parse_points(&text)
}

pub fn write_points(points: &[Vec<f64>], path: impl AsRef<Path>) -> Result<(), HarnessError> {
    let mut text = String::new();
    for p in points {
        text.push_str(&format_request(p));
        text.push('\n');
    }
    std::fs::write(path, text)?;
    Ok(())
}
