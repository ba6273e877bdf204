//! On-disk formats: IMU logs, capture times, calibration files, flight
//! specs, images, transform sidecars and ground-truth files.

pub mod calib;
pub mod ground_truth;
pub mod images;
pub mod imu_csv;
pub mod sidecar;
pub mod spec_file;

use std::path::Path;

use crate::error::CliError;

/// Formats a float with 17 significant digits, enough to round-trip `f64`
/// exactly.
pub(crate) fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub(crate) fn parse_f64(path: &Path, line: usize, field: &str, s: &str) -> Result<f64, CliError> {
    s.trim()
        .parse::<f64>()
        .map_err(|_| CliError::parse(path, line, format!("invalid number for {field}: {s:?}")))
}

/// Reads the capture-time file: header `t`, one ascending time per line.
pub fn read_captures(path: &Path) -> Result<Vec<f64>, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header.trim() == "t" => {}
        Some((_, header)) => {
            return Err(CliError::parse(
                path,
                1,
                format!("expected header 't', got {header:?}"),
            ))
        }
        None => return Err(CliError::parse(path, 1, "empty capture file")),
    }
    let mut times = Vec::new();
    for (idx, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let t = parse_f64(path, idx + 1, "t", line)?;
        if let Some(&prev) = times.last() {
            if t <= prev {
                return Err(CliError::parse(
                    path,
                    idx + 1,
                    format!("capture times must be strictly increasing ({t} after {prev})"),
                ));
            }
        }
        times.push(t);
    }
    if times.is_empty() {
        return Err(CliError::invalid(path, "no capture times"));
    }
    Ok(times)
}

pub fn write_captures(path: &Path, times: &[f64]) -> Result<(), CliError> {
    let mut out = String::from("t\n");
    for t in times {
        out.push_str(&format!("{t}\n"));
    }
    std::fs::write(path, out).map_err(|e| CliError::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn captures_round_trip_and_reject_disorder() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("captures.csv");
        write_captures(&path, &[0.5, 1.25, 3.0]).unwrap();
        assert_eq!(read_captures(&path).unwrap(), vec![0.5, 1.25, 3.0]);

        std::fs::write(&path, "t\n1.0\n0.5\n").unwrap();
        assert!(matches!(
            read_captures(&path),
            Err(CliError::Parse { line: 3, .. })
        ));
    }
}
