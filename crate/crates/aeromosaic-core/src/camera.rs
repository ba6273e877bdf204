//! Pinhole intrinsics and the per-frame correction matrices: altitude
//! rescaling, yaw rotation about the optical axis, and the pitch shear.
//!
//! The correction matrices operate on the camera matrix `K` when projecting
//! world points (`K' = K * A`); [`image_correction_homography`] lifts a
//! correction to the equivalent warp `K * A * K^-1` acting on already
//! projected pixel coordinates.

use nalgebra::{Matrix3, Vector2, Vector3};
use thiserror::Error;

use crate::fmath;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CameraError {
    #[error("scale inputs must be positive (got {0})")]
    DegenerateScale(f64),
    #[error("pitch shear is singular within {0} rad of grazing")]
    ShearSingularity(f64),
    #[error("correction matrix is singular")]
    SingularCorrection,
    #[error("invalid intrinsics: {0}")]
    InvalidIntrinsics(&'static str),
}

/// Pinhole camera matrix parameters, pixel units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraIntrinsics {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub skew: f64,
    pub width: u32,
    pub height: u32,
}

impl CameraIntrinsics {
    pub fn new(
        fx: f64,
        fy: f64,
        cx: f64,
        cy: f64,
        skew: f64,
        width: u32,
        height: u32,
    ) -> Result<Self, CameraError> {
        if ![fx, fy, cx, cy, skew].iter().all(|v| v.is_finite()) {
            return Err(CameraError::InvalidIntrinsics("non-finite parameter"));
        }
        if fx <= 0.0 || fy <= 0.0 {
            return Err(CameraError::InvalidIntrinsics(
                "focal lengths must be positive",
            ));
        }
        if cx < 0.0 || cx > width as f64 || cy < 0.0 || cy > height as f64 {
            return Err(CameraError::InvalidIntrinsics(
                "principal point must lie inside the image",
            ));
        }
        if width == 0 || height == 0 {
            return Err(CameraError::InvalidIntrinsics("zero image dimension"));
        }
        Ok(CameraIntrinsics {
            fx,
            fy,
            cx,
            cy,
            skew,
            width,
            height,
        })
    }

    /// Centered-principal-point intrinsics with square pixels and zero skew.
    pub fn simple(focal: f64, width: u32, height: u32) -> Result<Self, CameraError> {
        CameraIntrinsics::new(
            focal,
            focal,
            width as f64 / 2.0,
            height as f64 / 2.0,
            0.0,
            width,
            height,
        )
    }

    /// The 3x3 camera matrix `[[fx, skew, cx], [0, fy, cy], [0, 0, 1]]`.
    pub fn as_matrix(&self) -> Matrix3<f64> {
        Matrix3::new(
            self.fx, self.skew, self.cx, 0.0, self.fy, self.cy, 0.0, 0.0, 1.0,
        )
    }
}

/// Scale factor between two frames from their altitudes and focal lengths:
/// `(h_next / h_prev) * (f / f_prev)`. With a constant focal length the
/// second ratio is 1.
pub fn scale_factor(h_prev: f64, h_next: f64, f: f64, f_prev: f64) -> Result<f64, CameraError> {
    if h_prev <= 0.0 {
        return Err(CameraError::DegenerateScale(h_prev));
    }
    if f_prev <= 0.0 {
        return Err(CameraError::DegenerateScale(f_prev));
    }
    Ok((h_next / h_prev) * (f / f_prev))
}

/// Rescales intrinsics by `s`, equivalent to `diag(s, s, 1) * K`. Image
/// dimensions scale along with the coordinates (rounded to the nearest
/// pixel) so the principal point stays inside the image.
pub fn rescale_intrinsics(k: &CameraIntrinsics, s: f64) -> Result<CameraIntrinsics, CameraError> {
    if !(s > 0.0) || !s.is_finite() {
        return Err(CameraError::DegenerateScale(s));
    }
    let scale_dim = |d: u32| -> u32 { (fmath::round(d as f64 * s) as u32).max(1) };
    CameraIntrinsics::new(
        k.fx * s,
        k.fy * s,
        k.cx * s,
        k.cy * s,
        k.skew * s,
        scale_dim(k.width),
        scale_dim(k.height),
    )
}

/// Rotation by `delta_yaw` about the optical axis:
/// `[[cos, -sin, 0], [sin, cos, 0], [0, 0, 1]]`.
pub fn yaw_rotation(delta_yaw: f64) -> Matrix3<f64> {
    let (s, c) = (fmath::sin(delta_yaw), fmath::cos(delta_yaw));
    Matrix3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0)
}

/// Margin below pi/2 at which the pitch shear is rejected as singular.
pub const SHEAR_SINGULARITY_MARGIN: f64 = 1e-6;

/// Shear correcting the skew perspective of a pitched camera:
/// `[[1, 0, 0], [tan(mu), 1, 0], [0, 0, 1]]`.
pub fn pitch_shear(mu: f64) -> Result<Matrix3<f64>, CameraError> {
    if !mu.is_finite() || fmath::abs(mu) >= core::f64::consts::FRAC_PI_2 - SHEAR_SINGULARITY_MARGIN
    {
        return Err(CameraError::ShearSingularity(SHEAR_SINGULARITY_MARGIN));
    }
    Ok(Matrix3::new(
        1.0,
        0.0,
        0.0,
        fmath::tan(mu),
        1.0,
        0.0,
        0.0,
        0.0,
        1.0,
    ))
}

/// Lifts a correction `A` (applied to `K` as `K' = K * A`) to the image-space
/// homography `K * A * K^-1` that applies the same correction to already
/// projected pixels.
pub fn image_correction_homography(
    k: &CameraIntrinsics,
    a: &Matrix3<f64>,
) -> Result<Matrix3<f64>, CameraError> {
    let a_inv_exists = fmath::abs(a.determinant()) > 1e-12;
    if !a_inv_exists {
        return Err(CameraError::SingularCorrection);
    }
    let km = k.as_matrix();
    let k_inv = km
        .try_inverse()
        .ok_or(CameraError::SingularCorrection)?;
    Ok(km * a * k_inv)
}

/// Converts a metric ground displacement to the pixel shift seen by a nadir
/// camera at the given altitude: `(fx * dx / altitude, fy * dy / altitude)`.
pub fn metric_to_pixel(
    displacement: &Vector3<f64>,
    altitude: f64,
    k: &CameraIntrinsics,
) -> Result<Vector2<f64>, CameraError> {
    if !(altitude > 0.0) {
        return Err(CameraError::DegenerateScale(altitude));
    }
    Ok(Vector2::new(
        k.fx * displacement.x / altitude,
        k.fy * displacement.y / altitude,
    ))
}
