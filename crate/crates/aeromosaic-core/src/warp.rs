//! Warping frames into a shared mosaic canvas and blending the overlaps.
//!
//! Resampling is inverse: every canvas pixel inside a frame's mapped
//! footprint is pulled from the source through the inverse homography with
//! bilinear interpolation. Contributions are accumulated with feather
//! weights that fall off linearly toward the source border, so overlapping
//! frames blend without visible seams; [`finalize`] divides the accumulator
//! by the weights.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::Vector3;
use thiserror::Error;

use crate::fmath;
use crate::image::ImageBuffer;
use crate::transform::{map_corners, Homography, TransformError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WarpError {
    #[error("homography is singular")]
    SingularCorrection,
    #[error("mapped corner lies at infinity")]
    PointAtInfinity,
    #[error("frame count {frames} does not match transform count {transforms}")]
    CountMismatch { frames: usize, transforms: usize },
    #[error("image has {image} channels but the canvas has {canvas}")]
    ChannelMismatch { image: usize, canvas: usize },
}

impl From<TransformError> for WarpError {
    fn from(e: TransformError) -> Self {
        match e {
            TransformError::PointAtInfinity => WarpError::PointAtInfinity,
            _ => WarpError::SingularCorrection,
        }
    }
}

/// Default feather margin as a fraction of the smaller frame dimension.
pub const DEFAULT_FEATHER_FRACTION: f64 = 0.1;

/// Accumulation canvas: weighted sample sums plus per-pixel total weight.
///
/// `origin` is the mosaic coordinate of canvas pixel `(0, 0)`; the weight is
/// exactly zero wherever no frame has contributed.
#[derive(Debug, Clone)]
pub struct MosaicCanvas {
    accumulator: ImageBuffer,
    weight: Vec<f64>,
    origin: (i64, i64),
}

impl MosaicCanvas {
    pub fn new(origin: (i64, i64), width: usize, height: usize, channels: usize) -> Self {
        MosaicCanvas {
            accumulator: ImageBuffer::zeros(width, height, channels),
            weight: vec![0.0; width * height],
            origin,
        }
    }

    pub fn width(&self) -> usize {
        self.accumulator.width()
    }

    pub fn height(&self) -> usize {
        self.accumulator.height()
    }

    pub fn channels(&self) -> usize {
        self.accumulator.channels()
    }

    pub fn origin(&self) -> (i64, i64) {
        self.origin
    }

    pub fn weights(&self) -> &[f64] {
        &self.weight
    }

    pub fn weight_at(&self, x: usize, y: usize) -> f64 {
        self.weight[y * self.width() + x]
    }

    /// Sum of all accumulated weights, useful to check that a frame actually
    /// contributed.
    pub fn total_weight(&self) -> f64 {
        self.weight.iter().sum()
    }
}

/// Feather weight of a source-image position: the distance to the image
/// rectangle border normalized by `margin`, clamped to `[0, 1]`. Zero on the
/// border itself, one from `margin` inward. A non-positive margin disables
/// feathering (weight one everywhere inside).
pub fn feather_weight(x: f64, y: f64, width: usize, height: usize, margin: f64) -> f64 {
    if margin <= 0.0 {
        return 1.0;
    }
    let d = (x + 0.5)
        .min(y + 0.5)
        .min(width as f64 - 0.5 - x)
        .min(height as f64 - 0.5 - y);
    (d / margin).clamp(0.0, 1.0)
}

/// Integer bounding box of the union of all mapped frame footprints:
/// `(origin, width, height)`.
pub fn canvas_bounds(
    frame_sizes: &[(u32, u32)],
    transforms: &[Homography],
) -> Result<((i64, i64), usize, usize), WarpError> {
    if frame_sizes.len() != transforms.len() {
        return Err(WarpError::CountMismatch {
            frames: frame_sizes.len(),
            transforms: transforms.len(),
        });
    }
    let mut min_x = f64::INFINITY;
    let mut min_y = f64::INFINITY;
    let mut max_x = f64::NEG_INFINITY;
    let mut max_y = f64::NEG_INFINITY;
    for (&(w, h), t) in frame_sizes.iter().zip(transforms) {
        let corners = map_corners(t, w, h)?;
        for p in &corners.points {
            min_x = min_x.min(p.x);
            min_y = min_y.min(p.y);
            max_x = max_x.max(p.x);
            max_y = max_y.max(p.y);
        }
    }
    let ox = fmath::floor(min_x) as i64;
    let oy = fmath::floor(min_y) as i64;
    let width = (fmath::ceil(max_x) as i64 - ox).max(1) as usize;
    let height = (fmath::ceil(max_y) as i64 - oy).max(1) as usize;
    Ok(((ox, oy), width, height))
}

/// Warps `image` into the canvas through `h` (source pixels to mosaic
/// coordinates) with feather weighting.
///
/// For each canvas pixel inside the mapped footprint the source is sampled
/// at the inverse-mapped position with bilinear interpolation; positions
/// within half a pixel outside the source rectangle still contribute with
/// edge-clamped samples. `feather_fraction` sets the feather margin relative
/// to the smaller source dimension.
pub fn warp_into(
    canvas: &mut MosaicCanvas,
    image: &ImageBuffer,
    h: &Homography,
    feather_fraction: f64,
) -> Result<(), WarpError> {
    if image.channels() != canvas.channels() {
        return Err(WarpError::ChannelMismatch {
            image: image.channels(),
            canvas: canvas.channels(),
        });
    }
    let h_inv = h.inverse().map_err(WarpError::from)?;
    let hi = *h_inv.matrix();
    let (src_w, src_h) = (image.width(), image.height());
    let margin = feather_fraction * src_w.min(src_h) as f64;

    // Bound the loop by the mapped footprint.
    let corners = map_corners(h, src_w as u32, src_h as u32)?;
    let (ox, oy) = canvas.origin;
    let mut x0 = f64::INFINITY;
    let mut y0 = f64::INFINITY;
    let mut x1 = f64::NEG_INFINITY;
    let mut y1 = f64::NEG_INFINITY;
    for p in &corners.points {
        x0 = x0.min(p.x);
        y0 = y0.min(p.y);
        x1 = x1.max(p.x);
        y1 = y1.max(p.y);
    }
    let ix0 = ((fmath::floor(x0) as i64 - 1 - ox).max(0) as usize).min(canvas.width());
    let iy0 = ((fmath::floor(y0) as i64 - 1 - oy).max(0) as usize).min(canvas.height());
    let ix1 = (((fmath::ceil(x1) as i64 + 1 - ox).max(0) as usize) + 1).min(canvas.width());
    let iy1 = (((fmath::ceil(y1) as i64 + 1 - oy).max(0) as usize) + 1).min(canvas.height());

    let channels = canvas.channels();
    let canvas_w = canvas.width();
    for iy in iy0..iy1 {
        for ix in ix0..ix1 {
            let mosaic = Vector3::new((ox + ix as i64) as f64, (oy + iy as i64) as f64, 1.0);
            let q = hi * mosaic;
            if fmath::abs(q.z) < 1e-12 {
                continue;
            }
            let sx = q.x / q.z;
            let sy = q.y / q.z;
            // Half-pixel border: partial pixels at the footprint edge count.
            if sx < -0.5 || sy < -0.5 || sx > src_w as f64 - 0.5 || sy > src_h as f64 - 0.5 {
                continue;
            }
            let w = feather_weight(sx, sy, src_w, src_h, margin);
            if w <= 0.0 {
                continue;
            }
            for c in 0..channels {
                let v = image.sample_bilinear(sx, sy, c);
                let cur = canvas.accumulator.get(ix, iy, c);
                canvas.accumulator.set(ix, iy, c, cur + v * w);
            }
            canvas.weight[iy * canvas_w + ix] += w;
        }
    }
    Ok(())
}

/// Resolves the canvas into an image: accumulated value divided by weight
/// where any frame contributed, zero elsewhere, clamped to `[0, 1]`.
pub fn finalize(canvas: &MosaicCanvas) -> ImageBuffer {
    let mut out = ImageBuffer::zeros(canvas.width(), canvas.height(), canvas.channels());
    for y in 0..canvas.height() {
        for x in 0..canvas.width() {
            let w = canvas.weight[y * canvas.width() + x];
            if w > 0.0 {
                for c in 0..canvas.channels() {
                    let v = canvas.accumulator.get(x, y, c) / w;
                    out.set(x, y, c, v.clamp(0.0, 1.0));
                }
            }
        }
    }
    out
}
