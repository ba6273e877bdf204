//! Camera calibration file: `key=value` lines with keys fx, fy, cx, cy,
//! skew, width, height. Unknown keys are rejected; skew defaults to zero.

use std::collections::BTreeMap;
use std::path::Path;

use aeromosaic_core::CameraIntrinsics;

use super::parse_f64;
use crate::error::CliError;

const KNOWN: [&str; 7] = ["fx", "fy", "cx", "cy", "skew", "width", "height"];

pub fn read_calibration(path: &Path) -> Result<CameraIntrinsics, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let mut values: BTreeMap<String, f64> = BTreeMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(CliError::parse(
                path,
                line_no,
                format!("expected key=value, got {line:?}"),
            ));
        };
        let key = key.trim();
        if !KNOWN.contains(&key) {
            return Err(CliError::parse(
                path,
                line_no,
                format!("unknown key {key:?}"),
            ));
        }
        if values
            .insert(key.to_string(), parse_f64(path, line_no, key, value)?)
            .is_some()
        {
            return Err(CliError::parse(
                path,
                line_no,
                format!("duplicate key {key:?}"),
            ));
        }
    }
    let get = |key: &str| -> Result<f64, CliError> {
        values
            .get(key)
            .copied()
            .ok_or_else(|| CliError::invalid(path, format!("missing key {key:?}")))
    };
    let (fx, fy, cx, cy) = (get("fx")?, get("fy")?, get("cx")?, get("cy")?);
    let skew = values.get("skew").copied().unwrap_or(0.0);
    let (width, height) = (get("width")?, get("height")?);
    if width <= 0.0 || height <= 0.0 || width.fract() != 0.0 || height.fract() != 0.0 {
        return Err(CliError::invalid(
            path,
            "width and height must be positive integers",
        ));
    }
    CameraIntrinsics::new(fx, fy, cx, cy, skew, width as u32, height as u32)
        .map_err(|e| CliError::invalid(path, e.to_string()))
}

pub fn write_calibration(path: &Path, k: &CameraIntrinsics) -> Result<(), CliError> {
    let text = format!(
        "fx={}\nfy={}\ncx={}\ncy={}\nskew={}\nwidth={}\nheight={}\n",
        k.fx, k.fy, k.cx, k.cy, k.skew, k.width, k.height
    );
    std::fs::write(path, text).map_err(|e| CliError::io(path, e))
}
