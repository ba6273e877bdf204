//! Image loading and saving: 8-bit grayscale PGM (binary P5) and PNG (8-bit
//! gray or RGB), scaled to `[0, 1]` on load and rounded back on save.

use std::path::{Path, PathBuf};

use aeromosaic_core::ImageBuffer;
use image::{DynamicImage, ImageReader};

use crate::error::CliError;

pub fn load_image(path: &Path) -> Result<ImageBuffer, CliError> {
    let dynamic = ImageReader::open(path)
        .map_err(|e| CliError::io(path, e))?
        .decode()
        .map_err(|e| CliError::invalid(path, format!("cannot decode image: {e}")))?;
    let (w, h);
    let (channels, bytes): (usize, Vec<u8>) = match dynamic {
        DynamicImage::ImageLuma8(img) => {
            (w, h) = img.dimensions();
            (1, img.into_raw())
        }
        DynamicImage::ImageRgb8(img) => {
            (w, h) = img.dimensions();
            (3, img.into_raw())
        }
        other => {
            // Normalize uncommon layouts to RGB.
            let img = other.to_rgb8();
            (w, h) = img.dimensions();
            (3, img.into_raw())
        }
    };
    let samples: Vec<f64> = bytes.iter().map(|&b| b as f64 / 255.0).collect();
    ImageBuffer::from_samples(w as usize, h as usize, channels, samples)
        .map_err(|e| CliError::invalid(path, e.to_string()))
}

pub fn save_image(path: &Path, img: &ImageBuffer) -> Result<(), CliError> {
    let bytes: Vec<u8> = img
        .samples()
        .iter()
        .map(|&v| (v.clamp(0.0, 1.0) * 255.0).round() as u8)
        .collect();
    let ext = path
        .extension()
        .and_then(|e| e.to_str())
        .unwrap_or("")
        .to_ascii_lowercase();
    let color = match img.channels() {
        1 => image::ColorType::L8,
        3 => image::ColorType::Rgb8,
        n => return Err(CliError::invalid(path, format!("unsupported channel count {n}"))),
    };
    if ext == "pgm" && img.channels() != 1 {
        return Err(CliError::invalid(
            path,
            "PGM supports grayscale images only",
        ));
    }
    if ext != "png" && ext != "pgm" {
        return Err(CliError::invalid(
            path,
            format!("unsupported image extension {ext:?} (use png or pgm)"),
        ));
    }
    image::save_buffer(
        path,
        &bytes,
        img.width() as u32,
        img.height() as u32,
        color,
    )
    .map_err(|e| CliError::invalid(path, format!("cannot save image: {e}")))
}

/// Frame images in a dataset directory, sorted lexicographically by file
/// name (the order that maps to ascending capture times).
pub fn list_frames(dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    let entries = std::fs::read_dir(dir).map_err(|e| CliError::io(dir, e))?;
    let mut frames: Vec<PathBuf> = Vec::new();
    for entry in entries {
        let entry = entry.map_err(|e| CliError::io(dir, e))?;
        let path = entry.path();
        let ext = path
            .extension()
            .and_then(|e| e.to_str())
            .map(|e| e.to_ascii_lowercase());
        if matches!(ext.as_deref(), Some("png") | Some("pgm")) {
            frames.push(path);
        }
    }
    frames.sort_by_key(|p| p.file_name().map(|n| n.to_owned()));
    if frames.is_empty() {
        return Err(CliError::invalid(dir, "no .png or .pgm frames found"));
    }
    Ok(frames)
}
