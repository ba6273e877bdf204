//! In-memory image storage shared by the renderer, the feature detector and
//! the warping stage.

use alloc::vec;
use alloc::vec::Vec;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ImageError {
    #[error("sample count {got} does not match {width}x{height}x{channels}")]
    SampleCountMismatch {
        width: usize,
        height: usize,
        channels: usize,
        got: usize,
    },
    #[error("channel count must be 1 or 3, got {0}")]
    BadChannelCount(usize),
    #[error("sample values must be finite and in [0, 1]")]
    SampleOutOfRange,
    #[error("image dimensions must be nonzero")]
    EmptyImage,
}

/// Row-major raster with 1 (gray) or 3 (RGB) channels and samples in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageBuffer {
    width: usize,
    height: usize,
    channels: usize,
    samples: Vec<f64>,
}

impl ImageBuffer {
    /// All-zero (black) image.
    pub fn zeros(width: usize, height: usize, channels: usize) -> Self {
        assert!(channels == 1 || channels == 3, "channels must be 1 or 3");
        assert!(width > 0 && height > 0, "dimensions must be nonzero");
        ImageBuffer {
            width,
            height,
            channels,
            samples: vec![0.0; width * height * channels],
        }
    }

    /// Wraps an existing sample vector, validating shape and range.
    pub fn from_samples(
        width: usize,
        height: usize,
        channels: usize,
        samples: Vec<f64>,
    ) -> Result<Self, ImageError> {
        if channels != 1 && channels != 3 {
            return Err(ImageError::BadChannelCount(channels));
        }
        if width == 0 || height == 0 {
            return Err(ImageError::EmptyImage);
        }
        if samples.len() != width * height * channels {
            return Err(ImageError::SampleCountMismatch {
                width,
                height,
                channels,
                got: samples.len(),
            });
        }
        if !samples.iter().all(|s| s.is_finite() && (0.0..=1.0).contains(s)) {
            return Err(ImageError::SampleOutOfRange);
        }
        Ok(ImageBuffer {
            width,
            height,
            channels,
            samples,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize, ch: usize) -> f64 {
        debug_assert!(x < self.width && y < self.height && ch < self.channels);
        self.samples[(y * self.width + x) * self.channels + ch]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, ch: usize, value: f64) {
        debug_assert!(x < self.width && y < self.height && ch < self.channels);
        self.samples[(y * self.width + x) * self.channels + ch] = value;
    }

    /// Bilinear sample at a fractional pixel position, clamped to the image
    /// rectangle so querying within half a pixel of the border extends the
    /// edge values.
    pub fn sample_bilinear(&self, x: f64, y: f64, ch: usize) -> f64 {
        let x = x.clamp(0.0, (self.width - 1) as f64);
        let y = y.clamp(0.0, (self.height - 1) as f64);
        let x0 = x as usize;
        let y0 = y as usize;
        let x1 = (x0 + 1).min(self.width - 1);
        let y1 = (y0 + 1).min(self.height - 1);
        let fx = x - x0 as f64;
        let fy = y - y0 as f64;
        let v00 = self.get(x0, y0, ch);
        let v10 = self.get(x1, y0, ch);
        let v01 = self.get(x0, y1, ch);
        let v11 = self.get(x1, y1, ch);
        (v00 * (1.0 - fx) + v10 * fx) * (1.0 - fy) + (v01 * (1.0 - fx) + v11 * fx) * fy
    }

    /// Channel-averaged grayscale copy (identity for single-channel images).
    pub fn to_luma(&self) -> ImageBuffer {
        if self.channels == 1 {
            return self.clone();
        }
        let mut out = ImageBuffer::zeros(self.width, self.height, 1);
        for y in 0..self.height {
            for x in 0..self.width {
                let v = (0..self.channels).map(|c| self.get(x, y, c)).sum::<f64>()
                    / self.channels as f64;
                out.set(x, y, 0, v);
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn from_samples_validates_shape_and_range() {
        assert!(ImageBuffer::from_samples(2, 2, 1, vec![0.0; 4]).is_ok());
        assert!(matches!(
            ImageBuffer::from_samples(2, 2, 1, vec![0.0; 5]),
            Err(ImageError::SampleCountMismatch { .. })
        ));
        assert!(matches!(
            ImageBuffer::from_samples(2, 2, 2, vec![0.0; 8]),
            Err(ImageError::BadChannelCount(2))
        ));
        assert!(matches!(
            ImageBuffer::from_samples(2, 2, 1, vec![0.0, 0.5, 1.0, 1.5]),
            Err(ImageError::SampleOutOfRange)
        ));
    }

    #[test]
    fn bilinear_is_exact_at_integer_sites() {
        let img = ImageBuffer::from_samples(2, 2, 1, vec![0.0, 0.25, 0.5, 1.0]).unwrap();
        assert_eq!(img.sample_bilinear(0.0, 0.0, 0), 0.0);
        assert_eq!(img.sample_bilinear(1.0, 0.0, 0), 0.25);
        assert_eq!(img.sample_bilinear(0.0, 1.0, 0), 0.5);
        assert_eq!(img.sample_bilinear(1.0, 1.0, 0), 1.0);
        // Midpoint is the mean of all four.
        assert!((img.sample_bilinear(0.5, 0.5, 0) - 0.4375).abs() < 1e-15);
    }

    #[test]
    fn bilinear_clamps_outside_rectangle() {
        let img = ImageBuffer::from_samples(2, 1, 1, vec![0.2, 0.8]).unwrap();
        assert_eq!(img.sample_bilinear(-0.4, 0.0, 0), 0.2);
        assert_eq!(img.sample_bilinear(1.4, 0.3, 0), 0.8);
    }
}
