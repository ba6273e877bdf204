//! Feature-based stitching baseline: Harris corners, zero-mean normalized
//! cross-correlation matching, normalized-DLT homography estimation and
//! RANSAC outlier rejection.
//!
//! This is the comparison arm of the pipeline. It intentionally stays close
//! to first principles (Harris plus ZNCC patches rather than heavyweight
//! descriptors), which is enough to reproduce the classic failure modes on
//! low-texture and self-similar scenes while giving accurate homographies
//! on distinctive ones.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{Matrix3, SMatrix, Vector2};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::fmath;
use crate::image::ImageBuffer;
use crate::transform::{Homography, TransformError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FeatureError {
    #[error("image must be at least {min} px on each side, got {width}x{height}")]
    ImageTooSmall {
        min: usize,
        width: usize,
        height: usize,
    },
    #[error("patch size must be odd and at least 5, got {0}")]
    BadPatchSize(usize),
    #[error("homography estimation needs at least 4 correspondences, got {0}")]
    InsufficientCorrespondences(usize),
    #[error("point configuration is degenerate (collinear or coincident)")]
    DegenerateConfiguration,
    #[error("no consensus set with at least 4 inliers")]
    NoConsensus,
    #[error("anchor point maps to infinity")]
    PointAtInfinity,
    #[error("anchor and new point lists differ in length ({prev} vs {new})")]
    LengthMismatch { prev: usize, new: usize },
}

/// A detected corner with sub-pixel position and Harris response.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Keypoint {
    pub position: Vector2<f64>,
    pub response: f64,
}

/// A matched point pair: `a` in the first image, `b` in the second, with the
/// ZNCC score in `[-1, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Correspondence {
    pub a: Vector2<f64>,
    pub b: Vector2<f64>,
    pub score: f64,
}

impl Correspondence {
    pub fn new(a: Vector2<f64>, b: Vector2<f64>, score: f64) -> Self {
        Correspondence { a, b, score }
    }
}

/// Harris detector constants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HarrisParams {
    /// Trace weight in `det - kappa * trace^2`.
    pub kappa: f64,
    /// Gaussian window sigma for the structure tensor, pixels.
    pub sigma: f64,
    /// Absolute response floor; local maxima below it are discarded, which
    /// keeps flat and near-flat images from producing spurious corners.
    pub min_response: f64,
}

impl Default for HarrisParams {
    fn default() -> Self {
        HarrisParams {
            kappa: 0.04,
            sigma: 1.5,
            min_response: 1e-6,
        }
    }
}

const MIN_IMAGE_DIM: usize = 16;

fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    let radius = fmath::ceil(3.0 * sigma) as usize;
    let mut kernel = Vec::with_capacity(2 * radius + 1);
    let mut sum = 0.0;
    for i in 0..=2 * radius {
        let d = i as f64 - radius as f64;
        let w = fmath::exp(-d * d / (2.0 * sigma * sigma));
        kernel.push(w);
        sum += w;
    }
    for w in &mut kernel {
        *w /= sum;
    }
    kernel
}

/// Separable convolution with edge clamping.
fn blur(src: &[f64], width: usize, height: usize, kernel: &[f64]) -> Vec<f64> {
    let radius = kernel.len() / 2;
    let mut tmp = vec![0.0; src.len()];
    for y in 0..height {
        for x in 0..width {
            let mut acc = 0.0;
            for (i, w) in kernel.iter().enumerate() {
                let xi = (x as i64 + i as i64 - radius as i64).clamp(0, width as i64 - 1) as usize;
                acc += src[y * width + xi] * w;
            }
            tmp[y * width + x] = acc;
        }
    }
    let mut out = vec![0.0; src.len()];
    for y in 0..height {
        for x in 0..width {
            let mut acc = 0.0;
            for (i, w) in kernel.iter().enumerate() {
                let yi = (y as i64 + i as i64 - radius as i64).clamp(0, height as i64 - 1) as usize;
                acc += tmp[yi * width + x] * w;
            }
            out[y * width + x] = acc;
        }
    }
    out
}

/// Harris corner response map (valid away from the border margin).
fn harris_response(gray: &ImageBuffer, params: &HarrisParams) -> Vec<f64> {
    let (w, h) = (gray.width(), gray.height());
    let mut ixx = vec![0.0; w * h];
    let mut ixy = vec![0.0; w * h];
    let mut iyy = vec![0.0; w * h];
    for y in 1..h - 1 {
        for x in 1..w - 1 {
            let gx = (gray.get(x + 1, y, 0) - gray.get(x - 1, y, 0)) * 0.5;
            let gy = (gray.get(x, y + 1, 0) - gray.get(x, y - 1, 0)) * 0.5;
            let idx = y * w + x;
            ixx[idx] = gx * gx;
            ixy[idx] = gx * gy;
            iyy[idx] = gy * gy;
        }
    }
    let kernel = gaussian_kernel(params.sigma);
    let sxx = blur(&ixx, w, h, &kernel);
    let sxy = blur(&ixy, w, h, &kernel);
    let syy = blur(&iyy, w, h, &kernel);
    let mut response = vec![0.0; w * h];
    for i in 0..w * h {
        let det = sxx[i] * syy[i] - sxy[i] * sxy[i];
        let trace = sxx[i] + syy[i];
        response[i] = det - params.kappa * trace * trace;
    }
    response
}

/// Detects Harris corners with default parameters. Returns up to `max_count`
/// strongest corners, non-maximum suppressed at `min_distance`, sorted by
/// response descending.
pub fn detect_corners(
    image: &ImageBuffer,
    max_count: usize,
    min_distance: f64,
) -> Result<Vec<Keypoint>, FeatureError> {
    detect_corners_with(image, max_count, min_distance, &HarrisParams::default())
}

pub fn detect_corners_with(
    image: &ImageBuffer,
    max_count: usize,
    min_distance: f64,
    params: &HarrisParams,
) -> Result<Vec<Keypoint>, FeatureError> {
    let (w, h) = (image.width(), image.height());
    if w < MIN_IMAGE_DIM || h < MIN_IMAGE_DIM {
        return Err(FeatureError::ImageTooSmall {
            min: MIN_IMAGE_DIM,
            width: w,
            height: h,
        });
    }
    let gray = image.to_luma();
    let response = harris_response(&gray, params);

    // Border margin where gradients and the blur window are valid.
    let margin = fmath::ceil(3.0 * params.sigma) as usize + 1;
    let mut candidates: Vec<Keypoint> = Vec::new();
    for y in margin..h - margin {
        for x in margin..w - margin {
            let r = response[y * w + x];
            if r <= params.min_response {
                continue;
            }
            // 3x3 local maximum; ties break toward the top-left pixel so a
            // flat plateau yields exactly one candidate.
            let mut is_max = true;
            'nms: for dy in -1i64..=1 {
                for dx in -1i64..=1 {
                    if dx == 0 && dy == 0 {
                        continue;
                    }
                    let n = response[(y as i64 + dy) as usize * w + (x as i64 + dx) as usize];
                    let before = dy < 0 || (dy == 0 && dx < 0);
                    if (before && n >= r) || (!before && n > r) {
                        is_max = false;
                        break 'nms;
                    }
                }
            }
            if !is_max {
                continue;
            }
            // Sub-pixel refinement: 1D parabola fit per axis.
            let refine = |prev: f64, center: f64, next: f64| -> f64 {
                let denom = prev - 2.0 * center + next;
                if fmath::abs(denom) < 1e-30 {
                    0.0
                } else {
                    ((prev - next) / (2.0 * denom)).clamp(-0.5, 0.5)
                }
            };
            let dx = refine(
                response[y * w + x - 1],
                r,
                response[y * w + x + 1],
            );
            let dy = refine(
                response[(y - 1) * w + x],
                r,
                response[(y + 1) * w + x],
            );
            candidates.push(Keypoint {
                position: Vector2::new(x as f64 + dx, y as f64 + dy),
                response: r,
            });
        }
    }

    // Strongest first; ties resolved by raster order for determinism.
    candidates.sort_by(|a, b| {
        b.response
            .partial_cmp(&a.response)
            .unwrap()
            .then(a.position.y.partial_cmp(&b.position.y).unwrap())
            .then(a.position.x.partial_cmp(&b.position.x).unwrap())
    });

    let mut accepted: Vec<Keypoint> = Vec::new();
    for kp in candidates {
        if accepted.len() >= max_count {
            break;
        }
        if accepted
            .iter()
            .all(|a| (a.position - kp.position).norm() >= min_distance)
        {
            accepted.push(kp);
        }
    }
    Ok(accepted)
}

/// Extracts a square patch around a sub-pixel center; `None` when it would
/// leave the image.
fn extract_patch(image: &ImageBuffer, center: &Vector2<f64>, patch: usize) -> Option<Vec<f64>> {
    let r = (patch / 2) as f64;
    let (w, h) = (image.width() as f64, image.height() as f64);
    if center.x - r < 0.0 || center.y - r < 0.0 || center.x + r > w - 1.0 || center.y + r > h - 1.0
    {
        return None;
    }
    let mut values = Vec::with_capacity(patch * patch);
    for dy in 0..patch {
        for dx in 0..patch {
            let x = center.x + dx as f64 - r;
            let y = center.y + dy as f64 - r;
            values.push(image.sample_bilinear(x, y, 0));
        }
    }
    Some(values)
}

/// Zero-mean normalized cross-correlation; `None` when either patch has zero
/// variance.
fn zncc(a: &[f64], b: &[f64]) -> Option<f64> {
    let n = a.len() as f64;
    let mean_a = a.iter().sum::<f64>() / n;
    let mean_b = b.iter().sum::<f64>() / n;
    let mut num = 0.0;
    let mut var_a = 0.0;
    let mut var_b = 0.0;
    for (&va, &vb) in a.iter().zip(b) {
        let da = va - mean_a;
        let db = vb - mean_b;
        num += da * db;
        var_a += da * da;
        var_b += db * db;
    }
    if var_a < 1e-12 || var_b < 1e-12 {
        return None;
    }
    Some(num / fmath::sqrt(var_a * var_b))
}

/// Matches keypoints by ZNCC over square patches, keeping mutual-best pairs
/// with score at least `min_score`. An empty result is a valid outcome.
pub fn match_patches(
    kps_a: &[Keypoint],
    image_a: &ImageBuffer,
    kps_b: &[Keypoint],
    image_b: &ImageBuffer,
    patch: usize,
    min_score: f64,
) -> Result<Vec<Correspondence>, FeatureError> {
    if patch < 5 || patch % 2 == 0 {
        return Err(FeatureError::BadPatchSize(patch));
    }
    let gray_a = image_a.to_luma();
    let gray_b = image_b.to_luma();
    let patches_a: Vec<Option<Vec<f64>>> = kps_a
        .iter()
        .map(|k| extract_patch(&gray_a, &k.position, patch))
        .collect();
    let patches_b: Vec<Option<Vec<f64>>> = kps_b
        .iter()
        .map(|k| extract_patch(&gray_b, &k.position, patch))
        .collect();

    // Score matrix with the best candidate per row and per column.
    let mut best_for_a: Vec<Option<(usize, f64)>> = vec![None; kps_a.len()];
    let mut best_for_b: Vec<Option<(usize, f64)>> = vec![None; kps_b.len()];
    for (i, pa) in patches_a.iter().enumerate() {
        let Some(pa) = pa else { continue };
        for (j, pb) in patches_b.iter().enumerate() {
            let Some(pb) = pb else { continue };
            let Some(score) = zncc(pa, pb) else { continue };
            if best_for_a[i].is_none_or(|(_, s)| score > s) {
                best_for_a[i] = Some((j, score));
            }
            if best_for_b[j].is_none_or(|(_, s)| score > s) {
                best_for_b[j] = Some((i, score));
            }
        }
    }

    let mut matches = Vec::new();
    for (i, best) in best_for_a.iter().enumerate() {
        let Some((j, score)) = *best else { continue };
        if score < min_score {
            continue;
        }
        if best_for_b[j].map(|(i2, _)| i2) == Some(i) {
            matches.push(Correspondence::new(
                kps_a[i].position,
                kps_b[j].position,
                score,
            ));
        }
    }
    Ok(matches)
}

/// Similarity normalization of a point set: translate the centroid to the
/// origin and scale the mean distance to sqrt(2).
fn hartley_normalization(points: &[Vector2<f64>]) -> Result<Matrix3<f64>, FeatureError> {
    let n = points.len() as f64;
    let centroid = points.iter().sum::<Vector2<f64>>() / n;
    let mean_dist = points.iter().map(|p| (p - centroid).norm()).sum::<f64>() / n;
    if mean_dist < 1e-12 {
        return Err(FeatureError::DegenerateConfiguration);
    }
    let s = core::f64::consts::SQRT_2 / mean_dist;
    Ok(Matrix3::new(
        s,
        0.0,
        -s * centroid.x,
        0.0,
        s,
        -s * centroid.y,
        0.0,
        0.0,
        1.0,
    ))
}

fn apply_similarity(t: &Matrix3<f64>, p: &Vector2<f64>) -> Vector2<f64> {
    Vector2::new(
        t[(0, 0)] * p.x + t[(0, 2)],
        t[(1, 1)] * p.y + t[(1, 2)],
    )
}

/// Estimates the homography `H` that maps the second points onto the first
/// (`a ~ H * b`) by the normalized direct linear transformation: Hartley
/// normalization of both sets, then the homogeneous least-squares solution
/// of the standard two-rows-per-point design, solved through the smallest
/// eigenvector of the normal matrix, then denormalization.
pub fn estimate_ndlt(correspondences: &[Correspondence]) -> Result<Homography, FeatureError> {
    if correspondences.len() < 4 {
        return Err(FeatureError::InsufficientCorrespondences(
            correspondences.len(),
        ));
    }
    let pts_a: Vec<Vector2<f64>> = correspondences.iter().map(|c| c.a).collect();
    let pts_b: Vec<Vector2<f64>> = correspondences.iter().map(|c| c.b).collect();
    let t_a = hartley_normalization(&pts_a)?;
    let t_b = hartley_normalization(&pts_b)?;

    // Accumulate A^T A over the 2n design rows.
    let mut normal = SMatrix::<f64, 9, 9>::zeros();
    let mut add_row = |row: [f64; 9]| {
        for i in 0..9 {
            for j in i..9 {
                normal[(i, j)] += row[i] * row[j];
            }
        }
    };
    for (pa, pb) in pts_a.iter().zip(&pts_b) {
        let d = apply_similarity(&t_a, pa);
        let s = apply_similarity(&t_b, pb);
        add_row([
            -s.x, -s.y, -1.0, 0.0, 0.0, 0.0, d.x * s.x, d.x * s.y, d.x,
        ]);
        add_row([
            0.0, 0.0, 0.0, -s.x, -s.y, -1.0, d.y * s.x, d.y * s.y, d.y,
        ]);
    }
    for i in 0..9 {
        for j in 0..i {
            normal[(i, j)] = normal[(j, i)];
        }
    }

    let eigen = normal.symmetric_eigen();
    let mut order: [usize; 9] = [0, 1, 2, 3, 4, 5, 6, 7, 8];
    order.sort_by(|&i, &j| eigen.eigenvalues[i].partial_cmp(&eigen.eigenvalues[j]).unwrap());
    let smallest = order[0];
    let second = order[1];
    let largest = order[8];
    // Rank deficiency beyond the single expected null direction marks a
    // degenerate (collinear) configuration.
    let scale = eigen.eigenvalues[largest].max(1e-300);
    if eigen.eigenvalues[second] / scale < 1e-18 {
        return Err(FeatureError::DegenerateConfiguration);
    }
    let h = eigen.eigenvectors.column(smallest);
    let h_norm = Matrix3::new(h[0], h[1], h[2], h[3], h[4], h[5], h[6], h[7], h[8]);

    let t_a_inv = t_a
        .try_inverse()
        .ok_or(FeatureError::DegenerateConfiguration)?;
    let denorm = t_a_inv * h_norm * t_b;
    Homography::new(denorm).map_err(|_| FeatureError::DegenerateConfiguration)
}

/// Anchored estimation against the mosaic frame: lifts the previous-image
/// anchor points through `h_prev` (the previous frame's map into the
/// reference) and estimates the new frame's map directly into the reference
/// frame.
pub fn estimate_anchored(
    prev_points: &[Vector2<f64>],
    new_points: &[Vector2<f64>],
    h_prev: &Homography,
) -> Result<Homography, FeatureError> {
    if prev_points.len() != new_points.len() {
        return Err(FeatureError::LengthMismatch {
            prev: prev_points.len(),
            new: new_points.len(),
        });
    }
    if prev_points.len() < 4 {
        return Err(FeatureError::InsufficientCorrespondences(prev_points.len()));
    }
    let mut correspondences = Vec::with_capacity(prev_points.len());
    for (prev, new) in prev_points.iter().zip(new_points) {
        let anchor = h_prev.map_point(prev).map_err(|e| match e {
            TransformError::PointAtInfinity => FeatureError::PointAtInfinity,
            _ => FeatureError::DegenerateConfiguration,
        })?;
        correspondences.push(Correspondence::new(anchor, *new, 1.0));
    }
    estimate_ndlt(&correspondences)
}

/// Squared symmetric transfer error of a correspondence under `h`.
fn symmetric_transfer_sq(
    c: &Correspondence,
    h: &Homography,
    h_inv: &Homography,
) -> f64 {
    let fwd = match h.map_point(&c.b) {
        Ok(p) => (p - c.a).norm_squared(),
        Err(_) => return f64::INFINITY,
    };
    let bwd = match h_inv.map_point(&c.a) {
        Ok(p) => (p - c.b).norm_squared(),
        Err(_) => return f64::INFINITY,
    };
    fwd + bwd
}

/// RANSAC homography fit: seeded minimal 4-point sampling, symmetric
/// transfer error gating at `threshold` pixels, early exit above 90%
/// inliers, and a final NDLT refit on the best inlier set. Deterministic for
/// a fixed seed.
pub fn ransac_homography(
    correspondences: &[Correspondence],
    threshold: f64,
    max_iters: usize,
    seed: u64,
) -> Result<(Homography, Vec<usize>), FeatureError> {
    let n = correspondences.len();
    if n < 4 {
        return Err(FeatureError::InsufficientCorrespondences(n));
    }
    assert!(threshold > 0.0, "RANSAC threshold must be positive");
    let threshold_sq = threshold * threshold;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best_inliers: Vec<usize> = Vec::new();

    for _ in 0..max_iters {
        // Four distinct indices.
        let mut sample = [0usize; 4];
        let mut filled = 0;
        while filled < 4 {
            let idx = rng.random_range(0..n);
            if !sample[..filled].contains(&idx) {
                sample[filled] = idx;
                filled += 1;
            }
        }
        let minimal: Vec<Correspondence> = sample.iter().map(|&i| correspondences[i]).collect();
        let Ok(h) = estimate_ndlt(&minimal) else {
            continue;
        };
        let Ok(h_inv) = h.inverse() else { continue };
        let inliers: Vec<usize> = (0..n)
            .filter(|&i| symmetric_transfer_sq(&correspondences[i], &h, &h_inv) < threshold_sq)
            .collect();
        if inliers.len() > best_inliers.len() {
            best_inliers = inliers;
            if best_inliers.len() as f64 > 0.9 * n as f64 {
                break;
            }
        }
    }

    if best_inliers.len() < 4 {
        return Err(FeatureError::NoConsensus);
    }
    let subset: Vec<Correspondence> = best_inliers
        .iter()
        .map(|&i| correspondences[i])
        .collect();
    let refit = estimate_ndlt(&subset)?;
    Ok((refit, best_inliers))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn uniform_image(w: usize, h: usize, v: f64) -> ImageBuffer {
        let mut img = ImageBuffer::zeros(w, h, 1);
        for y in 0..h {
            for x in 0..w {
                img.set(x, y, 0, v);
            }
        }
        img
    }

    /// White axis-aligned square on black, square spanning pixel columns
    /// [x0, x1) and rows [y0, y1).
    fn square_image(w: usize, h: usize, x0: usize, y0: usize, x1: usize, y1: usize) -> ImageBuffer {
        let mut img = ImageBuffer::zeros(w, h, 1);
        for y in y0..y1 {
            for x in x0..x1 {
                img.set(x, y, 0, 1.0);
            }
        }
        img
    }

    fn checkerboard(w: usize, h: usize, cell: usize) -> ImageBuffer {
        let mut img = ImageBuffer::zeros(w, h, 1);
        for y in 0..h {
            for x in 0..w {
                if ((x / cell) + (y / cell)) % 2 == 0 {
                    img.set(x, y, 0, 1.0);
                }
            }
        }
        img
    }

    /// Smooth seeded value-noise texture; every patch is locally unique,
    /// unlike the periodic fixtures.
    fn noise_image(w: usize, h: usize, seed: u64) -> ImageBuffer {
        let cell = 6usize;
        let gw = w / cell + 2;
        let gh = h / cell + 2;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let lattice: Vec<f64> = (0..gw * gh).map(|_| rng.random_range(0.0..1.0)).collect();
        let mut img = ImageBuffer::zeros(w, h, 1);
        for y in 0..h {
            for x in 0..w {
                let gx = x as f64 / cell as f64;
                let gy = y as f64 / cell as f64;
                let ix = gx as usize;
                let iy = gy as usize;
                let fx = gx - ix as f64;
                let fy = gy - iy as f64;
                let v00 = lattice[iy * gw + ix];
                let v10 = lattice[iy * gw + ix + 1];
                let v01 = lattice[(iy + 1) * gw + ix];
                let v11 = lattice[(iy + 1) * gw + ix + 1];
                let v = (v00 * (1.0 - fx) + v10 * fx) * (1.0 - fy)
                    + (v01 * (1.0 - fx) + v11 * fx) * fy;
                img.set(x, y, 0, v);
            }
        }
        img
    }

    fn known_homography() -> Homography {
        Homography::new(Matrix3::new(
            1.05, 0.02, 8.0, -0.03, 0.97, -5.0, 3e-5, -1e-5, 1.0,
        ))
        .unwrap()
    }

    fn correspondences_from(
        h: &Homography,
        points_b: &[Vector2<f64>],
    ) -> Vec<Correspondence> {
        points_b
            .iter()
            .map(|b| Correspondence::new(h.map_point(b).unwrap(), *b, 1.0))
            .collect()
    }

    fn grid_points(nx: usize, ny: usize, step: f64) -> Vec<Vector2<f64>> {
        let mut pts = Vec::new();
        for j in 0..ny {
            for i in 0..nx {
                pts.push(Vector2::new(20.0 + i as f64 * step, 15.0 + j as f64 * step));
            }
        }
        pts
    }

    #[test]
    fn flat_image_has_no_corners() {
        let img = uniform_image(64, 64, 0.5);
        let kps = detect_corners(&img, 100, 5.0).unwrap();
        assert!(kps.is_empty());
    }

    #[test]
    fn too_small_image_is_rejected() {
        let img = uniform_image(15, 64, 0.5);
        assert!(matches!(
            detect_corners(&img, 10, 3.0),
            Err(FeatureError::ImageTooSmall { .. })
        ));
    }

    #[test]
    fn square_corners_are_found_within_a_pixel() {
        // Square covering pixels [30, 90) x [40, 100); truth is the extreme
        // white pixel of each corner.
        let img = square_image(128, 144, 30, 40, 90, 100);
        let kps = detect_corners(&img, 10, 10.0).unwrap();
        assert_eq!(kps.len(), 4, "found {kps:?}");
        let truth = [
            Vector2::new(30.0, 40.0),
            Vector2::new(89.0, 40.0),
            Vector2::new(89.0, 99.0),
            Vector2::new(30.0, 99.0),
        ];
        for t in &truth {
            let nearest = kps
                .iter()
                .map(|k| (k.position - t).norm())
                .fold(f64::INFINITY, f64::min);
            assert!(nearest <= 1.0, "corner {t:?} nearest detection {nearest}");
        }
    }

    #[test]
    fn checkerboard_yields_exactly_the_inner_corners() {
        // 8x8 cells of 16 px on a 128x128 image: 7x7 inner corners.
        let img = checkerboard(128, 128, 16);
        let kps = detect_corners(&img, 200, 8.0).unwrap();
        assert_eq!(kps.len(), 49, "got {}", kps.len());
        for k in &kps {
            let gx = k.position.x / 16.0;
            let gy = k.position.y / 16.0;
            let rx = (gx - fmath::round(gx)).abs() * 16.0;
            let ry = (gy - fmath::round(gy)).abs() * 16.0;
            assert!(rx <= 1.0 && ry <= 1.0, "stray corner {:?}", k.position);
        }
    }

    #[test]
    fn detection_commutes_with_quarter_rotation() {
        let img = square_image(128, 128, 30, 46, 84, 92);
        // Rotate 90 degrees clockwise: (x, y) -> (h - 1 - y, x).
        let mut rotated = ImageBuffer::zeros(128, 128, 1);
        for y in 0..128 {
            for x in 0..128 {
                rotated.set(127 - y, x, 0, img.get(x, y, 0));
            }
        }
        let kps = detect_corners(&img, 10, 10.0).unwrap();
        let kps_rot = detect_corners(&rotated, 10, 10.0).unwrap();
        assert_eq!(kps.len(), kps_rot.len());
        for k in &kps {
            let mapped = Vector2::new(127.0 - k.position.y, k.position.x);
            let nearest = kps_rot
                .iter()
                .map(|r| (r.position - mapped).norm())
                .fold(f64::INFINITY, f64::min);
            assert!(nearest <= 1.0, "rotated corner off by {nearest}");
        }
    }

    #[test]
    fn identical_images_match_themselves_perfectly() {
        let img = noise_image(96, 96, 21);
        let kps = detect_corners(&img, 50, 6.0).unwrap();
        assert!(kps.len() >= 4);
        let matches = match_patches(&kps, &img, &kps, &img, 11, 0.8).unwrap();
        assert_eq!(matches.len(), kps.len());
        for m in &matches {
            assert!((m.a - m.b).norm() < 1e-12);
            assert_relative_eq!(m.score, 1.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn translated_copy_matches_at_the_known_offset() {
        let base = noise_image(160, 120, 8);
        // Second image: content translated by +10 px in x.
        let mut shifted = uniform_image(160, 120, 0.0);
        for y in 0..120 {
            for x in 0..150 {
                shifted.set(x + 10, y, 0, base.get(x, y, 0));
            }
        }
        let kps_a = detect_corners(&base, 60, 8.0).unwrap();
        let kps_b = detect_corners(&shifted, 60, 8.0).unwrap();
        let matches = match_patches(&kps_a, &base, &kps_b, &shifted, 11, 0.8).unwrap();
        assert!(matches.len() >= 8, "only {} matches", matches.len());
        for m in &matches {
            let offset = m.b - m.a;
            assert!(
                (offset - Vector2::new(10.0, 0.0)).norm() < 0.5,
                "offset {offset:?}"
            );
        }
    }

    #[test]
    fn periodic_texture_defeats_mutual_best_matching() {
        // Two views of the same checkerboard shifted by half a period: every
        // corner looks like every other corner of the same polarity, so the
        // mutual-best test collapses.
        let img_a = checkerboard(128, 128, 16);
        let mut img_b = ImageBuffer::zeros(128, 128, 1);
        for y in 0..128 {
            for x in 0..128 {
                let sx = (x + 8) % 128;
                let sy = (y + 8) % 128;
                img_b.set(x, y, 0, img_a.get(sx, sy, 0));
            }
        }
        let kps_a = detect_corners(&img_a, 100, 8.0).unwrap();
        let kps_b = detect_corners(&img_b, 100, 8.0).unwrap();
        assert!(kps_a.len() >= 40 && kps_b.len() >= 40);
        let matches = match_patches(&kps_a, &img_a, &kps_b, &img_b, 11, 0.8).unwrap();
        assert!(
            matches.len() < 4,
            "self-similar texture produced {} matches",
            matches.len()
        );
    }

    #[test]
    fn bad_patch_size_is_rejected() {
        let img = uniform_image(32, 32, 0.2);
        assert!(matches!(
            match_patches(&[], &img, &[], &img, 4, 0.5),
            Err(FeatureError::BadPatchSize(4))
        ));
        assert!(matches!(
            match_patches(&[], &img, &[], &img, 3, 0.5),
            Err(FeatureError::BadPatchSize(3))
        ));
    }

    #[test]
    fn ndlt_recovers_a_known_homography_from_four_points() {
        let h = known_homography();
        let pts = [
            Vector2::new(10.0, 12.0),
            Vector2::new(140.0, 20.0),
            Vector2::new(130.0, 110.0),
            Vector2::new(15.0, 100.0),
        ];
        let cs = correspondences_from(&h, &pts);
        let est = estimate_ndlt(&cs).unwrap();
        assert!((est.matrix() - h.matrix()).amax() < 1e-6);
    }

    #[test]
    fn ndlt_recovers_from_many_points() {
        let h = known_homography();
        let cs = correspondences_from(&h, &grid_points(6, 5, 22.0));
        let est = estimate_ndlt(&cs).unwrap();
        assert!((est.matrix() - h.matrix()).amax() < 1e-6);
    }

    #[test]
    fn ndlt_identity_for_coincident_point_sets() {
        let pts = grid_points(3, 2, 30.0);
        let cs: Vec<Correspondence> = pts
            .iter()
            .map(|p| Correspondence::new(*p, *p, 1.0))
            .collect();
        let est = estimate_ndlt(&cs).unwrap();
        assert!((est.matrix() - Matrix3::identity()).amax() < 1e-9);
    }

    #[test]
    fn ndlt_requires_four_points() {
        let cs = vec![
            Correspondence::new(Vector2::new(0.0, 0.0), Vector2::new(0.0, 0.0), 1.0);
            3
        ];
        assert!(matches!(
            estimate_ndlt(&cs),
            Err(FeatureError::InsufficientCorrespondences(3))
        ));
    }

    #[test]
    fn ndlt_rejects_collinear_configurations() {
        let cs: Vec<Correspondence> = (0..6)
            .map(|i| {
                let p = Vector2::new(10.0 + 7.0 * i as f64, 20.0 + 14.0 * i as f64);
                Correspondence::new(p, p, 1.0)
            })
            .collect();
        assert!(matches!(
            estimate_ndlt(&cs),
            Err(FeatureError::DegenerateConfiguration)
        ));
    }

    #[test]
    fn ndlt_is_invariant_to_similarity_transforms() {
        // Transforming either point set by a similarity conjugates the
        // estimate accordingly; Hartley normalization makes this hold tightly.
        let h = known_homography();
        let pts_b = grid_points(5, 4, 25.0);
        let cs = correspondences_from(&h, &pts_b);

        let sim_a = Matrix3::new(2.0, 0.0, 31.0, 0.0, 2.0, -17.0, 0.0, 0.0, 1.0);
        let sim_b = Matrix3::new(0.5, 0.0, -4.0, 0.0, 0.5, 9.0, 0.0, 0.0, 1.0);
        let transformed: Vec<Correspondence> = cs
            .iter()
            .map(|c| {
                Correspondence::new(
                    Vector2::new(
                        sim_a[(0, 0)] * c.a.x + sim_a[(0, 2)],
                        sim_a[(1, 1)] * c.a.y + sim_a[(1, 2)],
                    ),
                    Vector2::new(
                        sim_b[(0, 0)] * c.b.x + sim_b[(0, 2)],
                        sim_b[(1, 1)] * c.b.y + sim_b[(1, 2)],
                    ),
                    1.0,
                )
            })
            .collect();
        let est = estimate_ndlt(&transformed).unwrap();
        let expected = Homography::new(sim_a * h.matrix() * sim_b.try_inverse().unwrap()).unwrap();
        assert!((est.matrix() - expected.matrix()).amax() < 1e-9);
    }

    #[test]
    fn ndlt_beats_exact_minimal_fits_on_noisy_data() {
        let h = known_homography();
        let pts_b = grid_points(6, 5, 20.0);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let cs: Vec<Correspondence> = pts_b
            .iter()
            .map(|b| {
                let a = h.map_point(b).unwrap();
                let na = a + Vector2::new(
                    rng.random_range(-0.5..0.5),
                    rng.random_range(-0.5..0.5),
                );
                Correspondence::new(na, *b, 1.0)
            })
            .collect();
        let cost = |hom: &Homography| -> f64 {
            cs.iter()
                .map(|c| (hom.map_point(&c.b).unwrap() - c.a).norm_squared())
                .sum()
        };
        let est = estimate_ndlt(&cs).unwrap();
        let j_est = cost(&est);
        for chunk in [[0usize, 5, 24, 29], [1, 10, 15, 28], [2, 9, 19, 26]] {
            let minimal: Vec<Correspondence> = chunk.iter().map(|&i| cs[i]).collect();
            let fit = estimate_ndlt(&minimal).unwrap();
            assert!(
                j_est <= cost(&fit) + 1e-12,
                "least-squares fit worse than a minimal fit"
            );
        }
    }

    #[test]
    fn anchored_with_identity_matches_plain_ndlt() {
        let h = known_homography();
        let pts_b = grid_points(4, 3, 30.0);
        let cs = correspondences_from(&h, &pts_b);
        let prev: Vec<Vector2<f64>> = cs.iter().map(|c| c.a).collect();
        let new: Vec<Vector2<f64>> = cs.iter().map(|c| c.b).collect();
        let anchored = estimate_anchored(&prev, &new, &Homography::identity()).unwrap();
        let plain = estimate_ndlt(&cs).unwrap();
        assert!((anchored.matrix() - plain.matrix()).amax() < 1e-12);
    }

    #[test]
    fn anchored_never_loses_to_pairwise_chaining() {
        // Three-frame noiseless chain, comparing the final frame's corner
        // error in the reference frame. Both routes are near-exact here; the
        // statistical advantage under match noise is covered by the
        // acceptance suite over longer chains.
        let h01 = Homography::new(Matrix3::new(
            1.01, 0.01, 12.0, -0.01, 0.99, 4.0, 1e-5, 0.0, 1.0,
        ))
        .unwrap();
        let h12 = Homography::new(Matrix3::new(
            0.98, -0.02, 9.0, 0.015, 1.02, -6.0, 0.0, 1e-5, 1.0,
        ))
        .unwrap();
        let truth_02 = Homography::new(h01.matrix() * h12.matrix()).unwrap();
        let pts2 = grid_points(5, 4, 24.0);
        let pts1: Vec<Vector2<f64>> = pts2.iter().map(|p| h12.map_point(p).unwrap()).collect();
        let pts0: Vec<Vector2<f64>> = pts1.iter().map(|p| h01.map_point(p).unwrap()).collect();

        let corner_err = |est: &Homography| -> f64 {
            let corners = [
                Vector2::new(0.0, 0.0),
                Vector2::new(160.0, 0.0),
                Vector2::new(160.0, 120.0),
                Vector2::new(0.0, 120.0),
            ];
            corners
                .iter()
                .map(|c| {
                    (est.map_point(c).unwrap() - truth_02.map_point(c).unwrap()).norm()
                })
                .sum::<f64>()
                / 4.0
        };

        let cs01: Vec<Correspondence> = pts1
            .iter()
            .zip(&pts0)
            .map(|(p1, p0)| Correspondence::new(*p0, *p1, 1.0))
            .collect();
        let cs12: Vec<Correspondence> = pts2
            .iter()
            .zip(&pts1)
            .map(|(p2, p1)| Correspondence::new(*p1, *p2, 1.0))
            .collect();
        let e01 = estimate_ndlt(&cs01).unwrap();
        let e12 = estimate_ndlt(&cs12).unwrap();
        let chained = Homography::new(e01.matrix() * e12.matrix()).unwrap();
        let anchored = estimate_anchored(&pts1, &pts2, &e01).unwrap();

        let (err_anchored, err_chained) = (corner_err(&anchored), corner_err(&chained));
        assert!(
            err_anchored <= err_chained + 1e-9,
            "anchored {err_anchored} vs chained {err_chained}"
        );
    }

    #[test]
    fn ransac_keeps_everything_on_clean_data() {
        let h = known_homography();
        let cs = correspondences_from(&h, &grid_points(5, 4, 25.0));
        let (est, inliers) = ransac_homography(&cs, 2.0, 500, 42).unwrap();
        assert_eq!(inliers.len(), cs.len());
        assert!((est.matrix() - h.matrix()).amax() < 1e-6);
    }

    #[test]
    fn ransac_rejects_gross_outliers() {
        let h = known_homography();
        let mut cs = correspondences_from(&h, &grid_points(10, 7, 14.0));
        let n_inliers = cs.len();
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for _ in 0..30 {
            cs.push(Correspondence::new(
                Vector2::new(rng.random_range(0.0..300.0), rng.random_range(0.0..300.0)),
                Vector2::new(rng.random_range(0.0..300.0), rng.random_range(0.0..300.0)),
                0.9,
            ));
        }
        let (est, inliers) = ransac_homography(&cs, 2.0, 1000, 5).unwrap();
        let recall = inliers.iter().filter(|&&i| i < n_inliers).count() as f64
            / n_inliers as f64;
        assert!(recall >= 0.95, "recall {recall}");
        assert!(
            inliers.iter().all(|&i| i < n_inliers),
            "outlier admitted: {inliers:?}"
        );
        assert!((est.matrix() - h.matrix()).amax() < 1e-6);
    }

    #[test]
    fn ransac_is_deterministic_per_seed() {
        let h = known_homography();
        let mut cs = correspondences_from(&h, &grid_points(6, 4, 20.0));
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..10 {
            cs.push(Correspondence::new(
                Vector2::new(rng.random_range(0.0..200.0), rng.random_range(0.0..200.0)),
                Vector2::new(rng.random_range(0.0..200.0), rng.random_range(0.0..200.0)),
                0.9,
            ));
        }
        let (h1, in1) = ransac_homography(&cs, 2.0, 300, 1234).unwrap();
        let (h2, in2) = ransac_homography(&cs, 2.0, 300, 1234).unwrap();
        assert_eq!(h1.matrix(), h2.matrix());
        assert_eq!(in1, in2);
    }

    #[test]
    fn ransac_minimal_set_with_degenerate_outlier_has_no_consensus() {
        // Three exact inliers plus an outlier placed to make the source
        // points collinear: the single possible minimal sample cannot fit.
        let h = known_homography();
        let pts = [
            Vector2::new(10.0, 10.0),
            Vector2::new(50.0, 50.0),
            Vector2::new(90.0, 90.0),
        ];
        let mut cs = correspondences_from(&h, &pts);
        cs.push(Correspondence::new(
            Vector2::new(400.0, -250.0),
            Vector2::new(130.0, 130.0),
            0.9,
        ));
        assert!(matches!(
            ransac_homography(&cs, 2.0, 50, 7),
            Err(FeatureError::NoConsensus)
        ));
    }

    #[test]
    fn ransac_needs_four_correspondences() {
        assert!(matches!(
            ransac_homography(&[], 2.0, 10, 0),
            Err(FeatureError::InsufficientCorrespondences(0))
        ));
    }
}
