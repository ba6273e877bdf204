//! Homographies between image frames built from pose pairs.
//!
//! The scene is modeled as the ground plane `z = 0`. Each pose induces a
//! ground-to-image homography `M = K_c * [r1 r2 t]` where `K_c` is the camera
//! matrix with the pitch-shear and yaw-rotation corrections folded in
//! (`K_c = K * S(pitch) * R_z(yaw)`), `r1`/`r2` are the first two columns of
//! the world-to-camera rotation of the nadir-mounted camera (roll only; yaw
//! and pitch live in `K_c`) and `t` encodes the camera center. For a pure yaw
//! change this decomposition is exact: the frame-to-frame map reduces to the
//! conjugated rotation `K * R_z(dyaw) * K^-1`. A pure altitude change
//! reduces to the altitude scale factor.
//!
//! Frame-to-frame maps multiply: the map from frame `a` pixels to frame `b`
//! pixels is `M_b * M_a^-1`, and chains of pairwise maps compose into
//! frame-to-reference maps.

use alloc::vec::Vec;

use nalgebra::{Matrix3, Vector2, Vector3};
use thiserror::Error;

use crate::camera::{pitch_shear, yaw_rotation, CameraError, CameraIntrinsics};
use crate::fmath;
use crate::imu::{Attitude, PoseEstimate};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TransformError {
    #[error("grazing pitch or roll angle")]
    ShearSingularity,
    #[error("matrix is singular or numerically degenerate")]
    SingularCorrection,
    #[error("mapped point lies at infinity")]
    PointAtInfinity,
    #[error("altitude must be positive, got {0}")]
    NonPositiveAltitude(f64),
    #[error("matrix is not a rotation")]
    InvalidRotation,
}

impl From<CameraError> for TransformError {
    fn from(e: CameraError) -> Self {
        match e {
            CameraError::ShearSingularity(_) => TransformError::ShearSingularity,
            _ => TransformError::SingularCorrection,
        }
    }
}

/// Rigid relative motion between two poses: rotation plus a translation
/// expressed in the frame of the earlier pose.
#[derive(Debug, Clone, PartialEq)]
pub struct RigidTransform {
    pub rotation: Matrix3<f64>,
    pub translation: Vector3<f64>,
}

impl RigidTransform {
    /// Validates orthonormality (`|R^T R - I| < 1e-9`, `det R` within `1e-9`
    /// of one).
    pub fn new(rotation: Matrix3<f64>, translation: Vector3<f64>) -> Result<Self, TransformError> {
        let gram = rotation.transpose() * rotation - Matrix3::identity();
        if gram.amax() >= 1e-9 || fmath::abs(rotation.determinant() - 1.0) >= 1e-9 {
            return Err(TransformError::InvalidRotation);
        }
        Ok(RigidTransform {
            rotation,
            translation,
        })
    }

    pub fn identity() -> Self {
        RigidTransform {
            rotation: Matrix3::identity(),
            translation: Vector3::zeros(),
        }
    }

    /// Composes with the relative transform of the following leg, producing
    /// the overall relative transform (`a->b` then `b->c` gives `a->c`).
    pub fn then(&self, next: &RigidTransform) -> RigidTransform {
        RigidTransform {
            rotation: next.rotation * self.rotation,
            translation: self.translation + self.rotation.transpose() * next.translation,
        }
    }
}

/// Invertible 3x3 projective map, normalized so the bottom-right entry is 1
/// whenever its magnitude allows.
#[derive(Debug, Clone, PartialEq)]
pub struct Homography(Matrix3<f64>);

impl Homography {
    pub fn new(m: Matrix3<f64>) -> Result<Self, TransformError> {
        if !m.iter().all(|v| v.is_finite()) {
            return Err(TransformError::SingularCorrection);
        }
        let normalized = if fmath::abs(m[(2, 2)]) > 1e-12 {
            m / m[(2, 2)]
        } else {
            m
        };
        if fmath::abs(normalized.determinant()) <= 1e-12 {
            return Err(TransformError::SingularCorrection);
        }
        Ok(Homography(normalized))
    }

    pub fn identity() -> Self {
        Homography(Matrix3::identity())
    }

    /// Pure pixel translation.
    pub fn translation(dx: f64, dy: f64) -> Self {
        Homography(Matrix3::new(1.0, 0.0, dx, 0.0, 1.0, dy, 0.0, 0.0, 1.0))
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.0
    }

    pub fn inverse(&self) -> Result<Homography, TransformError> {
        let inv = self
            .0
            .try_inverse()
            .ok_or(TransformError::SingularCorrection)?;
        Homography::new(inv)
    }

    /// Maps a pixel coordinate, dehomogenizing the result.
    pub fn map_point(&self, p: &Vector2<f64>) -> Result<Vector2<f64>, TransformError> {
        let q = self.0 * Vector3::new(p.x, p.y, 1.0);
        if fmath::abs(q.z) < 1e-12 {
            return Err(TransformError::PointAtInfinity);
        }
        Ok(Vector2::new(q.x / q.z, q.y / q.z))
    }
}

/// The four image corners after mapping, dehomogenized pixel coordinates in
/// the order top-left, top-right, bottom-right, bottom-left.
#[derive(Debug, Clone, PartialEq)]
pub struct CornerSet {
    pub points: [Vector2<f64>; 4],
}

impl CornerSet {
    /// Mean distance to the matching corners of another set.
    pub fn mean_distance(&self, other: &CornerSet) -> f64 {
        self.points
            .iter()
            .zip(&other.points)
            .map(|(a, b)| (a - b).norm())
            .sum::<f64>()
            / 4.0
    }

    /// Largest distance to the matching corners of another set.
    pub fn max_distance(&self, other: &CornerSet) -> f64 {
        self.points
            .iter()
            .zip(&other.points)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Mean distance of the corners from their centroid; scales linearly
    /// under similarity transforms.
    pub fn spread(&self) -> f64 {
        let centroid = (self.points[0] + self.points[1] + self.points[2] + self.points[3]) / 4.0;
        self.points
            .iter()
            .map(|p| (p - centroid).norm())
            .sum::<f64>()
            / 4.0
    }
}

/// Relative rigid motion from `pose_k` to `pose_k1`: the rotation
/// `C(k1) * C(k)^T` between the two world-to-body attitudes and the position
/// delta expressed in the body frame of `pose_k`.
pub fn relative_rigid(pose_k: &PoseEstimate, pose_k1: &PoseEstimate) -> RigidTransform {
    let c_k = pose_k.attitude.world_to_body();
    let c_k1 = pose_k1.attitude.world_to_body();
    RigidTransform {
        rotation: c_k1 * c_k.transpose(),
        translation: c_k * (pose_k1.position - pose_k.position),
    }
}

/// Options for building frame projections.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ProjectionOptions {
    /// Fold the roll angle into the projection rotation. Disable to treat
    /// poses as roll-free regardless of their roll channel.
    pub include_roll: bool,
}

impl Default for ProjectionOptions {
    fn default() -> Self {
        ProjectionOptions { include_roll: true }
    }
}

/// Camera-to-body rotation of the nadir mount: camera x along body x, camera
/// y reversed, optical axis down. At zero attitude image columns follow
/// world x and image rows run against world y.
fn nadir_mount() -> Matrix3<f64> {
    Matrix3::new(1.0, 0.0, 0.0, 0.0, -1.0, 0.0, 0.0, 0.0, -1.0)
}

/// Ground-plane-to-image homography of the camera at `pose`: maps ground
/// coordinates `(x, y, 1)` in meters to pixel coordinates.
pub fn frame_projection(
    pose: &PoseEstimate,
    k: &CameraIntrinsics,
) -> Result<Homography, TransformError> {
    frame_projection_with(pose, k, &ProjectionOptions::default())
}

pub fn frame_projection_with(
    pose: &PoseEstimate,
    k: &CameraIntrinsics,
    options: &ProjectionOptions,
) -> Result<Homography, TransformError> {
    let altitude = pose.altitude();
    if !(altitude > 0.0) {
        return Err(TransformError::NonPositiveAltitude(altitude));
    }
    let limit = core::f64::consts::FRAC_PI_2 - 1e-6;
    if fmath::abs(pose.attitude.pitch) >= limit || fmath::abs(pose.attitude.roll) >= limit {
        return Err(TransformError::ShearSingularity);
    }

    let k_corrected = k.as_matrix() * pitch_shear(pose.attitude.pitch)? * yaw_rotation(pose.attitude.yaw);

    let roll = if options.include_roll {
        pose.attitude.roll
    } else {
        0.0
    };
    // World-to-camera rotation carrying only roll; yaw and pitch are folded
    // into the corrected camera matrix.
    let cam_to_world = Attitude::new(roll, 0.0, 0.0).body_to_world() * nadir_mount();
    let world_to_cam = cam_to_world.transpose();
    let t = -world_to_cam * pose.position;

    let mut ground = Matrix3::zeros();
    ground.set_column(0, &world_to_cam.column(0).into_owned());
    ground.set_column(1, &world_to_cam.column(1).into_owned());
    ground.set_column(2, &t);

    Homography::new(k_corrected * ground)
}

/// Homography mapping pixels of frame `k` into frame `k1`: `M_k1 * M_k^-1`
/// restricted to the ground plane. Altitude, yaw and pitch corrections are
/// implicit because each projection embeds its pose's corrected intrinsics.
pub fn frame_to_frame(
    pose_k: &PoseEstimate,
    pose_k1: &PoseEstimate,
    k_k: &CameraIntrinsics,
    k_k1: &CameraIntrinsics,
) -> Result<Homography, TransformError> {
    frame_to_frame_with(pose_k, pose_k1, k_k, k_k1, &ProjectionOptions::default())
}

pub fn frame_to_frame_with(
    pose_k: &PoseEstimate,
    pose_k1: &PoseEstimate,
    k_k: &CameraIntrinsics,
    k_k1: &CameraIntrinsics,
    options: &ProjectionOptions,
) -> Result<Homography, TransformError> {
    let m_k = frame_projection_with(pose_k, k_k, options)?;
    let m_k1 = frame_projection_with(pose_k1, k_k1, options)?;
    Homography::new(m_k1.matrix() * m_k.inverse()?.matrix())
}

/// Maps the four corners of a `width x height` image through `h`.
pub fn map_corners(
    h: &Homography,
    width: u32,
    height: u32,
) -> Result<CornerSet, TransformError> {
    let (m, n) = (width as f64, height as f64);
    let corners = [
        Vector2::new(0.0, 0.0),
        Vector2::new(m, 0.0),
        Vector2::new(m, n),
        Vector2::new(0.0, n),
    ];
    let mut points = [Vector2::zeros(); 4];
    for (dst, src) in points.iter_mut().zip(&corners) {
        *dst = h.map_point(src)?;
    }
    Ok(CornerSet { points })
}

/// Ordered product of pairwise homographies. An empty list yields the
/// identity; the maps are multiplied in the given order, so a list of
/// new-to-previous-frame maps composes into the new-to-reference map.
pub fn chain(homographies: &[Homography]) -> Result<Homography, TransformError> {
    if homographies.is_empty() {
        return Ok(Homography::identity());
    }
    if homographies.len() == 1 {
        return Ok(homographies[0].clone());
    }
    let mut product = *homographies[0].matrix();
    for h in &homographies[1..] {
        product *= h.matrix();
    }
    Homography::new(product)
}

/// Frame-to-reference homographies for a pose sequence: entry `i` maps frame
/// `i` pixels into the frame of `poses[0]`.
pub fn to_reference_maps(
    poses: &[PoseEstimate],
    k: &CameraIntrinsics,
    options: &ProjectionOptions,
) -> Result<Vec<Homography>, TransformError> {
    let mut maps = Vec::with_capacity(poses.len());
    for pose in poses {
        maps.push(frame_to_frame_with(pose, &poses[0], k, k, options)?);
    }
    Ok(maps)
}
