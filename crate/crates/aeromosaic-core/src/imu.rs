//! Dead reckoning from a time-stamped IMU log.
//!
//! The accelerometer channel is treated as specific force in the body frame:
//! at rest a level vehicle reads `+g` along its z axis. [`rotate_to_world`]
//! rotates a reading into the world frame (ZYX intrinsic attitude, East-North-Up
//! axes) and removes that rest reading, leaving kinematic acceleration. The
//! acceleration series is then integrated twice (trapezoidal rule on an
//! arbitrary monotone grid, or composite Simpson on a uniform grid) and
//! [`poses_at_captures`] samples the resulting trajectory at the image capture
//! instants. The altimeter channel overrides integrated altitude at those
//! instants, and no bias estimation or zero-velocity updates are applied:
//! drift is measured downstream, not corrected here.

use alloc::vec::Vec;

use nalgebra::{Matrix3, Rotation3, Vector3};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ImuError {
    #[error("at least {needed} samples required, got {got}")]
    InsufficientSamples { needed: usize, got: usize },
    #[error("sample timestamps must be strictly increasing (violated at index {index})")]
    NonMonotoneTime { index: usize },
    #[error("Simpson integration requires an odd sample count, got {got}")]
    SimpsonParity { got: usize },
    #[error("Simpson integration requires a uniform time grid (violated at index {index})")]
    NonUniformGrid { index: usize },
    #[error("input contains non-finite values")]
    NonFiniteInput,
    #[error("altitude must be non-negative, got {0}")]
    NegativeAltitude(f64),
    #[error("capture time {time} lies outside the log span [{start}, {end}]")]
    OutOfRange { time: f64, start: f64, end: f64 },
}

/// Roll/pitch/yaw Euler angles in radians, ZYX intrinsic
/// (`R = Rz(yaw) * Ry(pitch) * Rx(roll)` maps body to world).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Attitude {
    pub roll: f64,
    pub pitch: f64,
    pub yaw: f64,
}

impl Attitude {
    /// New attitude with yaw wrapped into `(-pi, pi]`.
    pub fn new(roll: f64, pitch: f64, yaw: f64) -> Self {
        Attitude {
            roll,
            pitch,
            yaw: wrap_angle(yaw),
        }
    }

    pub fn level() -> Self {
        Attitude {
            roll: 0.0,
            pitch: 0.0,
            yaw: 0.0,
        }
    }

    /// Body-to-world rotation matrix.
    pub fn body_to_world(&self) -> Matrix3<f64> {
        Rotation3::from_euler_angles(self.roll, self.pitch, self.yaw).into_inner()
    }

    /// World-to-body rotation matrix (transpose of [`Self::body_to_world`]).
    pub fn world_to_body(&self) -> Matrix3<f64> {
        self.body_to_world().transpose()
    }

    pub fn is_finite(&self) -> bool {
        self.roll.is_finite() && self.pitch.is_finite() && self.yaw.is_finite()
    }
}

/// Wraps an angle into `(-pi, pi]`.
pub fn wrap_angle(a: f64) -> f64 {
    let two_pi = 2.0 * core::f64::consts::PI;
    let mut x = a % two_pi;
    if x <= -core::f64::consts::PI {
        x += two_pi;
    } else if x > core::f64::consts::PI {
        x -= two_pi;
    }
    x
}

/// One time-stamped inertial record: specific force in the body frame,
/// attitude and altimeter altitude.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImuSample {
    /// Time in seconds. Strictly increasing across a log.
    pub t: f64,
    /// Accelerometer reading (specific force) in the body frame, m/s^2.
    pub accel_body: Vector3<f64>,
    pub attitude: Attitude,
    /// Altimeter altitude in meters, non-negative.
    pub altitude: f64,
}

impl ImuSample {
    pub fn new(
        t: f64,
        accel_body: Vector3<f64>,
        attitude: Attitude,
        altitude: f64,
    ) -> Result<Self, ImuError> {
        if !t.is_finite() || !accel_body.iter().all(|a| a.is_finite()) || !attitude.is_finite() {
            return Err(ImuError::NonFiniteInput);
        }
        if !altitude.is_finite() {
            return Err(ImuError::NonFiniteInput);
        }
        if altitude < 0.0 {
            return Err(ImuError::NegativeAltitude(altitude));
        }
        Ok(ImuSample {
            t,
            accel_body,
            attitude: Attitude::new(attitude.roll, attitude.pitch, attitude.yaw),
            altitude,
        })
    }
}

/// UAV position and attitude at an image capture instant.
///
/// The ground plane is `z = 0`, so altitude is the z component of the
/// position; the constructor enforces this by deriving one from the other.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoseEstimate {
    pub t: f64,
    /// Position in the world frame (ENU), meters.
    pub position: Vector3<f64>,
    pub attitude: Attitude,
}

impl PoseEstimate {
    pub fn new(t: f64, position: Vector3<f64>, attitude: Attitude) -> Self {
        PoseEstimate {
            t,
            position,
            attitude,
        }
    }

    /// Height above the `z = 0` ground plane.
    pub fn altitude(&self) -> f64 {
        self.position.z
    }
}

/// Quadrature rule used for the double integration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum IntegrationMethod {
    #[default]
    Trapezoid,
    Simpson,
}

/// Configuration for [`poses_at_captures`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegrationConfig {
    pub method: IntegrationMethod,
    /// Gravitational acceleration in the world frame. Defaults to
    /// `(0, 0, -9.81)`; the accelerometer rest reading is `-gravity`.
    pub gravity: Vector3<f64>,
}

impl IntegrationConfig {
    pub fn new(method: IntegrationMethod) -> Self {
        IntegrationConfig {
            method,
            gravity: Vector3::new(0.0, 0.0, -9.81),
        }
    }

    /// Overrides the gravity vector. Magnitudes outside `[9.7, 9.9]` m/s^2
    /// are accepted but unusual for terrestrial flight.
    pub fn with_gravity(mut self, gravity: Vector3<f64>) -> Self {
        self.gravity = gravity;
        self
    }
}

impl Default for IntegrationConfig {
    fn default() -> Self {
        IntegrationConfig::new(IntegrationMethod::Trapezoid)
    }
}

fn check_monotone(samples: &[ImuSample]) -> Result<(), ImuError> {
    if samples.len() < 2 {
        return Err(ImuError::InsufficientSamples {
            needed: 2,
            got: samples.len(),
        });
    }
    for (i, w) in samples.windows(2).enumerate() {
        if !(w[1].t > w[0].t) {
            return Err(ImuError::NonMonotoneTime { index: i + 1 });
        }
    }
    Ok(())
}

/// Cumulative trapezoidal integral of `f` over the grid `ts`.
fn trapezoid_series(ts: &[f64], f: &[Vector3<f64>], init: Vector3<f64>) -> Vec<Vector3<f64>> {
    let mut out = Vec::with_capacity(ts.len());
    out.push(init);
    for i in 0..ts.len() - 1 {
        let dt = ts[i + 1] - ts[i];
        let next = out[i] + (f[i] + f[i + 1]) * (0.5 * dt);
        out.push(next);
    }
    out
}

/// Cumulative composite-Simpson integral on a uniform grid with odd length.
///
/// Even indices accumulate full Simpson pairs (exact for cubic integrands);
/// odd indices use the half-pair rule from the same local parabola, which is
/// exact for quadratics.
fn simpson_series(dt: f64, f: &[Vector3<f64>], init: Vector3<f64>) -> Vec<Vector3<f64>> {
    let mut out = Vec::with_capacity(f.len());
    out.push(init);
    let mut k = 0;
    while k + 2 < f.len() {
        let base = out[k];
        let half = base + (f[k] * 5.0 + f[k + 1] * 8.0 - f[k + 2]) * (dt / 12.0);
        let full = base + (f[k] + f[k + 1] * 4.0 + f[k + 2]) * (dt / 3.0);
        out.push(half);
        out.push(full);
        k += 2;
    }
    out
}

/// Double trapezoidal integration of world-frame, gravity-free accelerations.
///
/// Returns `(velocity, position)` series aligned to the sample timestamps.
/// The samples' `accel_body` field must already be expressed in the world
/// frame with gravity removed (see [`rotate_to_world`]).
pub fn integrate_trapezoid(
    samples: &[ImuSample],
    v0: Vector3<f64>,
    x0: Vector3<f64>,
) -> Result<(Vec<Vector3<f64>>, Vec<Vector3<f64>>), ImuError> {
    check_monotone(samples)?;
    let ts: Vec<f64> = samples.iter().map(|s| s.t).collect();
    let accel: Vec<Vector3<f64>> = samples.iter().map(|s| s.accel_body).collect();
    let velocity = trapezoid_series(&ts, &accel, v0);
    let position = trapezoid_series(&ts, &velocity, x0);
    Ok((velocity, position))
}

/// Double composite-Simpson integration; requires an odd sample count and a
/// uniform time grid (relative tolerance `1e-9`).
///
/// Same input convention as [`integrate_trapezoid`].
pub fn integrate_simpson(
    samples: &[ImuSample],
    v0: Vector3<f64>,
    x0: Vector3<f64>,
) -> Result<(Vec<Vector3<f64>>, Vec<Vector3<f64>>), ImuError> {
    check_monotone(samples)?;
    if samples.len() % 2 == 0 {
        return Err(ImuError::SimpsonParity { got: samples.len() });
    }
    let dt = samples[1].t - samples[0].t;
    for (i, w) in samples.windows(2).enumerate() {
        let step = w[1].t - w[0].t;
        if crate::fmath::abs(step - dt) > 1e-9 * crate::fmath::abs(dt) {
            return Err(ImuError::NonUniformGrid { index: i + 1 });
        }
    }
    let accel: Vec<Vector3<f64>> = samples.iter().map(|s| s.accel_body).collect();
    let velocity = simpson_series(dt, &accel, v0);
    let position = simpson_series(dt, &velocity, x0);
    Ok((velocity, position))
}

/// Rotates a body-frame accelerometer reading into the world frame and
/// subtracts `gravity`.
///
/// `gravity` here is the vector to remove from the rotated reading, i.e.
/// the accelerometer rest reading, `(0, 0, +9.81)` for standard gravity; a
/// hovering level vehicle therefore maps to zero.
pub fn rotate_to_world(sample: &ImuSample, gravity: Vector3<f64>) -> Result<Vector3<f64>, ImuError> {
    if !sample.accel_body.iter().all(|a| a.is_finite())
        || !sample.attitude.is_finite()
        || !gravity.iter().all(|g| g.is_finite())
    {
        return Err(ImuError::NonFiniteInput);
    }
    Ok(sample.attitude.body_to_world() * sample.accel_body - gravity)
}

/// Integrates a full IMU log and samples the trajectory at the capture times.
///
/// Positions are interpolated linearly between integration nodes; attitude
/// and altitude are taken from the nearest IMU sample, and the altimeter
/// altitude overrides the integrated z component. The vehicle is assumed at
/// rest at the first log sample; `initial` provides the starting position
/// (standing in for a surveyed take-off point).
pub fn poses_at_captures(
    log: &[ImuSample],
    capture_times: &[f64],
    initial: &PoseEstimate,
    cfg: &IntegrationConfig,
) -> Result<Vec<PoseEstimate>, ImuError> {
    check_monotone(log)?;
    let rest_reading = -cfg.gravity;
    let mut world = Vec::with_capacity(log.len());
    for s in log {
        let accel_world = rotate_to_world(s, rest_reading)?;
        world.push(ImuSample {
            accel_body: accel_world,
            ..*s
        });
    }
    let (_, positions) = match cfg.method {
        IntegrationMethod::Trapezoid => {
            integrate_trapezoid(&world, Vector3::zeros(), initial.position)?
        }
        IntegrationMethod::Simpson => integrate_simpson(&world, Vector3::zeros(), initial.position)?,
    };

    let start = log[0].t;
    let end = log[log.len() - 1].t;
    let mut poses = Vec::with_capacity(capture_times.len());
    for &tc in capture_times {
        if !(tc >= start && tc <= end) {
            return Err(ImuError::OutOfRange {
                time: tc,
                start,
                end,
            });
        }
        // Index of the last sample with t <= tc.
        let idx = log.partition_point(|s| s.t <= tc).saturating_sub(1);
        let pos = if idx + 1 < log.len() {
            let t0 = log[idx].t;
            let t1 = log[idx + 1].t;
            let alpha = (tc - t0) / (t1 - t0);
            positions[idx] * (1.0 - alpha) + positions[idx + 1] * alpha
        } else {
            positions[idx]
        };
        let nearest = if idx + 1 < log.len() && (log[idx + 1].t - tc) < (tc - log[idx].t) {
            &log[idx + 1]
        } else {
            &log[idx]
        };
        poses.push(PoseEstimate::new(
            tc,
            Vector3::new(pos.x, pos.y, nearest.altitude),
            nearest.attitude,
        ));
    }
    Ok(poses)
}
