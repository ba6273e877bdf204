//! IMU log CSV: header `t,ax,ay,az,roll,pitch,yaw,alt`, one sample per
//! line, SI units and radians, LF line endings.

use std::path::Path;

use aeromosaic_core::imu::{Attitude, ImuSample};
use nalgebra::Vector3;

use super::parse_f64;
use crate::error::CliError;

const HEADER: &str = "t,ax,ay,az,roll,pitch,yaw,alt";

pub fn read_imu_csv(path: &Path) -> Result<Vec<ImuSample>, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header.trim() == HEADER => {}
        Some((_, header)) => {
            return Err(CliError::parse(
                path,
                1,
                format!("expected header {HEADER:?}, got {header:?}"),
            ))
        }
        None => return Err(CliError::parse(path, 1, "empty IMU log")),
    }

    let mut samples: Vec<ImuSample> = Vec::new();
    for (idx, line) in lines {
        let line_no = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 8 {
            return Err(CliError::parse(
                path,
                line_no,
                format!("expected 8 columns, got {}", fields.len()),
            ));
        }
        let names = ["t", "ax", "ay", "az", "roll", "pitch", "yaw", "alt"];
        let mut values = [0.0f64; 8];
        for (i, (field, name)) in fields.iter().zip(names).enumerate() {
            values[i] = parse_f64(path, line_no, name, field)?;
        }
        if let Some(prev) = samples.last() {
            if values[0] <= prev.t {
                return Err(CliError::parse(
                    path,
                    line_no,
                    format!(
                        "timestamps must be strictly increasing ({} after {})",
                        values[0], prev.t
                    ),
                ));
            }
        }
        let sample = ImuSample::new(
            values[0],
            Vector3::new(values[1], values[2], values[3]),
            Attitude::new(values[4], values[5], values[6]),
            values[7],
        )
        .map_err(|e| CliError::parse(path, line_no, e.to_string()))?;
        samples.push(sample);
    }
    if samples.len() < 2 {
        return Err(CliError::invalid(
            path,
            format!("IMU log needs at least 2 samples, got {}", samples.len()),
        ));
    }
    Ok(samples)
}

pub fn write_imu_csv(path: &Path, samples: &[ImuSample]) -> Result<(), CliError> {
    let mut out = String::with_capacity(samples.len() * 64);
    out.push_str(HEADER);
    out.push('\n');
    for s in samples {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            s.t,
            s.accel_body.x,
            s.accel_body.y,
            s.accel_body.z,
            s.attitude.roll,
            s.attitude.pitch,
            s.attitude.yaw,
            s.altitude
        ));
    }
    std::fs::write(path, out).map_err(|e| CliError::io(path, e))
}
