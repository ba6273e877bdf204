//! Core geometry and sensor-fusion primitives for stitching aerial images
//! captured by a UAV.
//!
//! The crate is organized around the stages of the mosaicking pipeline:
//!
//! - [`imu`]: dead reckoning, double numerical integration of logged
//!   accelerations (trapezoidal or Simpson) into per-capture pose estimates.
//! - [`camera`]: pinhole intrinsics and the per-frame correction matrices
//!   (altitude rescale, yaw rotation, pitch shear).
//! - [`transform`]: frame-to-frame and frame-to-mosaic homographies built
//!   from pose pairs, corner mapping and transform chaining.
//! - [`features`]: the comparison baseline of Harris corners, ZNCC patch
//!   matching, normalized DLT homography estimation and RANSAC filtering.
//! - [`warp`]: inverse warping into a shared canvas with feathered blending.
//! - [`synth`]: a synthetic-scene oracle that renders aerial views of a
//!   planar orthophoto and manufactures IMU logs from analytic trajectories.
//!
//! Everything here is pure computation over in-memory data; file formats and
//! the command-line front-end live in the companion `aeromosaic-cli` crate.
//! The crate is `no_std`-compatible (with `alloc`); disable the default
//! `std` feature for embedded use.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

#[cfg(all(not(feature = "std"), not(feature = "libm")))]
compile_error!("either the `std` or the `libm` feature must be enabled");

pub mod camera;
pub mod features;
mod fmath;
pub mod image;
pub mod imu;
pub mod synth;
pub mod transform;
pub mod warp;

pub use camera::CameraIntrinsics;
pub use image::ImageBuffer;
pub use imu::{ImuSample, IntegrationConfig, IntegrationMethod, PoseEstimate};
pub use transform::Homography;
