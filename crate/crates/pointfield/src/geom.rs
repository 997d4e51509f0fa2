//! Camera models, rays, and rigid transforms shared by every other module.
//!
//! Conventions, used everywhere in this crate:
//! - right-handed world frame with +z up,
//! - a camera looks along +z of its own frame, +x maps to image u (columns),
//!   +y maps to image v (rows),
//! - poses are camera-to-world,
//! - continuous pixel coordinates span `[0, width) x [0, height)`; the center
//!   of the pixel with integer index `(i, j)` is `(i + 0.5, j + 0.5)`.

use nalgebra::{Matrix3, Matrix4, Vector2, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum GeomError {
    #[error("pixel ({0}, {1}) outside image bounds {2}x{3}")]
    PixelOutOfBounds(f64, f64, u32, u32),
    #[error("point at or behind the camera plane (depth {0})")]
    BehindCamera(f64),
    #[error("depth must be positive and finite, got {0}")]
    InvalidDepth(f64),
    #[error("zero-length vector")]
    ZeroLengthVector,
    #[error("rotation matrix is not orthonormal with det +1")]
    NotARotation,
    #[error("invalid camera intrinsics: {0}")]
    BadIntrinsics(String),
}

/// Pinhole intrinsics, distortion-free. Focal lengths and principal point in
/// pixels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraIntrinsics {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: u32,
    pub height: u32,
}

impl CameraIntrinsics {
    pub fn new(fx: f64, fy: f64, cx: f64, cy: f64, width: u32, height: u32) -> Result<Self, GeomError> {
        let intr = Self { fx, fy, cx, cy, width, height };
        intr.validate()?;
        Ok(intr)
    }

    pub fn validate(&self) -> Result<(), GeomError> {
        if !(self.fx > 0.0 && self.fy > 0.0) {
            return Err(GeomError::BadIntrinsics(format!("fx/fy must be positive, got {}/{}", self.fx, self.fy)));
        }
        if self.width < 8 || self.height < 8 {
            return Err(GeomError::BadIntrinsics(format!("image size {}x{} below minimum 8x8", self.width, self.height)));
        }
        if !(0.0 <= self.cx && self.cx < self.width as f64 && 0.0 <= self.cy && self.cy < self.height as f64) {
            return Err(GeomError::BadIntrinsics(format!("principal point ({}, {}) outside image", self.cx, self.cy)));
        }
        Ok(())
    }

    /// Symmetric intrinsics from a horizontal field of view.
    pub fn from_fov(width: u32, height: u32, horizontal_fov_rad: f64) -> Result<Self, GeomError> {
        let fx = width as f64 / (2.0 * (horizontal_fov_rad / 2.0).tan());
        Self::new(fx, fx, width as f64 / 2.0, height as f64 / 2.0, width, height)
    }

    pub fn contains(&self, pixel: Vector2<f64>) -> bool {
        pixel.x >= 0.0 && pixel.x < self.width as f64 && pixel.y >= 0.0 && pixel.y < self.height as f64
    }

    /// Intrinsics for the same camera at `1/factor` resolution. Exact under
    /// area-average downsampling: output pixel centers map back onto the
    /// corresponding full-resolution block centers.
    pub fn downscaled(&self, factor: u32) -> Result<Self, GeomError> {
        let f = factor as f64;
        Self::new(
            self.fx / f,
            self.fy / f,
            self.cx / f,
            self.cy / f,
            self.width / factor,
            self.height / factor,
        )
    }
}

/// Rigid camera-to-world transform. `rotation` columns are the camera axes
/// expressed in world coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RigidPose {
    pub rotation: Matrix3<f64>,
    pub translation: Vector3<f64>,
}

const ORTHONORMAL_TOL: f64 = 1e-9;

impl RigidPose {
    pub fn new(rotation: Matrix3<f64>, translation: Vector3<f64>) -> Result<Self, GeomError> {
        if !is_rotation(&rotation, ORTHONORMAL_TOL) {
            return Err(GeomError::NotARotation);
        }
        Ok(Self { rotation, translation })
    }

    pub fn identity() -> Self {
        Self { rotation: Matrix3::identity(), translation: Vector3::zeros() }
    }

    /// Camera forward axis (+z of the camera frame) in world coordinates.
    pub fn forward(&self) -> Vector3<f64> {
        self.rotation.column(2).into()
    }

    pub fn world_to_camera(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.rotation.transpose() * (p - self.translation)
    }

    pub fn camera_to_world(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * p + self.translation
    }

    /// Row-major 4x4 homogeneous matrix, the on-disk pose representation.
    pub fn to_matrix4(&self) -> Matrix4<f64> {
        let mut m = Matrix4::identity();
        m.fixed_view_mut::<3, 3>(0, 0).copy_from(&self.rotation);
        m.fixed_view_mut::<3, 1>(0, 3).copy_from(&self.translation);
        m
    }

    pub fn from_matrix4(m: &Matrix4<f64>) -> Result<Self, GeomError> {
        let rotation: Matrix3<f64> = m.fixed_view::<3, 3>(0, 0).into();
        let translation: Vector3<f64> = m.fixed_view::<3, 1>(0, 3).into();
        Self::new(rotation, translation)
    }

    /// Flattened row-major 16-element form used in JSON files.
    pub fn to_rows(&self) -> [[f64; 4]; 4] {
        let m = self.to_matrix4();
        let mut rows = [[0.0; 4]; 4];
        for (r, row) in rows.iter_mut().enumerate() {
            for (c, v) in row.iter_mut().enumerate() {
                *v = m[(r, c)];
            }
        }
        rows
    }

    pub fn from_rows(rows: &[[f64; 4]; 4]) -> Result<Self, GeomError> {
        let mut m = Matrix4::identity();
        for (r, row) in rows.iter().enumerate() {
            for (c, v) in row.iter().enumerate() {
                m[(r, c)] = *v;
            }
        }
        Self::from_matrix4(&m)
    }
}

pub fn is_rotation(m: &Matrix3<f64>, tol: f64) -> bool {
    let gram = m.transpose() * m;
    let mut max_dev: f64 = 0.0;
    for r in 0..3 {
        for c in 0..3 {
            let expected = if r == c { 1.0 } else { 0.0 };
            max_dev = max_dev.max((gram[(r, c)] - expected).abs());
        }
    }
    max_dev <= tol && (m.determinant() - 1.0).abs() <= tol
}

/// A world-frame ray with unit direction and a sampling window along it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ray {
    pub origin: Vector3<f64>,
    pub dir: Vector3<f64>,
    pub t_near: f64,
    pub t_far: f64,
}

impl Ray {
    pub fn new(origin: Vector3<f64>, dir: Vector3<f64>, t_near: f64, t_far: f64) -> Result<Self, GeomError> {
        let norm = dir.norm();
        if norm == 0.0 || !norm.is_finite() {
            return Err(GeomError::ZeroLengthVector);
        }
        assert!(t_near >= 0.0 && t_near < t_far, "ray bounds must satisfy 0 <= t_near < t_far");
        Ok(Self { origin, dir: dir / norm, t_near, t_far })
    }

    pub fn at(&self, t: f64) -> Vector3<f64> {
        self.origin + self.dir * t
    }
}

/// A posed pinhole camera: the unit every view-dependent operation works with.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Camera {
    pub intrinsics: CameraIntrinsics,
    pub pose: RigidPose,
}

impl Camera {
    pub fn new(intrinsics: CameraIntrinsics, pose: RigidPose) -> Self {
        Self { intrinsics, pose }
    }

    /// World-frame ray through a continuous pixel coordinate.
    pub fn ray_for_pixel(&self, pixel: Vector2<f64>, bounds: (f64, f64)) -> Result<Ray, GeomError> {
        if !self.intrinsics.contains(pixel) {
            return Err(GeomError::PixelOutOfBounds(pixel.x, pixel.y, self.intrinsics.width, self.intrinsics.height));
        }
        let dir_cam = Vector3::new(
            (pixel.x - self.intrinsics.cx) / self.intrinsics.fx,
            (pixel.y - self.intrinsics.cy) / self.intrinsics.fy,
            1.0,
        );
        let dir_world = self.pose.rotation * dir_cam;
        Ray::new(self.pose.translation, dir_world, bounds.0, bounds.1)
    }

    /// Ray through the center of the pixel with integer index `(ix, iy)`.
    pub fn ray_for_pixel_index(&self, ix: u32, iy: u32, bounds: (f64, f64)) -> Result<Ray, GeomError> {
        self.ray_for_pixel(Vector2::new(ix as f64 + 0.5, iy as f64 + 0.5), bounds)
    }

    /// Project a world point. The returned pixel may lie outside the image;
    /// depth is the distance along the camera forward axis.
    pub fn project(&self, point: &Vector3<f64>) -> Result<(Vector2<f64>, f64), GeomError> {
        let p = self.pose.world_to_camera(point);
        if p.z <= 0.0 || !p.z.is_finite() {
            return Err(GeomError::BehindCamera(p.z));
        }
        let pixel = Vector2::new(
            self.intrinsics.fx * p.x / p.z + self.intrinsics.cx,
            self.intrinsics.fy * p.y / p.z + self.intrinsics.cy,
        );
        Ok((pixel, p.z))
    }

    /// Inverse of [`Camera::project`]: pixel plus forward-axis depth back to a
    /// world point.
    pub fn unproject(&self, pixel: Vector2<f64>, depth: f64) -> Result<Vector3<f64>, GeomError> {
        if !(depth > 0.0) || !depth.is_finite() {
            return Err(GeomError::InvalidDepth(depth));
        }
        let p_cam = Vector3::new(
            (pixel.x - self.intrinsics.cx) / self.intrinsics.fx * depth,
            (pixel.y - self.intrinsics.cy) / self.intrinsics.fy * depth,
            depth,
        );
        Ok(self.pose.camera_to_world(&p_cam))
    }
}

/// Minimal-angle rotation taking the direction of `a` onto the direction of
/// `b`. For antipodal inputs the rotation axis is `a` crossed with the world
/// axis least aligned with `a`, which makes the 180-degree case deterministic.
pub fn rotation_between(a: &Vector3<f64>, b: &Vector3<f64>) -> Result<Matrix3<f64>, GeomError> {
    let na = a.norm();
    let nb = b.norm();
    if na == 0.0 || nb == 0.0 || !na.is_finite() || !nb.is_finite() {
        return Err(GeomError::ZeroLengthVector);
    }
    let ah = a / na;
    let bh = b / nb;
    let cross = ah.cross(&bh);
    let sin = cross.norm();
    let cos = ah.dot(&bh);
    if sin < 1e-12 {
        if cos > 0.0 {
            return Ok(Matrix3::identity());
        }
        // Antipodal: rotate pi about a deterministic perpendicular axis.
        let mut least = 0;
        let mut least_val = ah.x.abs();
        for (i, v) in [ah.y.abs(), ah.z.abs()].iter().enumerate() {
            if *v < least_val {
                least_val = *v;
                least = i + 1;
            }
        }
        let mut e = Vector3::zeros();
        e[least] = 1.0;
        let axis = ah.cross(&e).normalize();
        return Ok(rodrigues(&axis, std::f64::consts::PI));
    }
    let axis = cross / sin;
    let angle = sin.atan2(cos);
    Ok(rodrigues(&axis, angle))
}

/// Rotation of `angle` radians about a unit `axis`.
pub fn rodrigues(axis: &Vector3<f64>, angle: f64) -> Matrix3<f64> {
    let k = skew(axis);
    Matrix3::identity() + k * angle.sin() + k * k * (1.0 - angle.cos())
}

fn skew(v: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::new(0.0, -v.z, v.y, v.z, 0.0, -v.x, -v.y, v.x, 0.0)
}

/// Camera-to-world pose at `eye` with the forward axis pointing at `target`.
/// The image +y axis points world-downward where possible so renders come out
/// upright.
pub fn look_at(eye: Vector3<f64>, target: Vector3<f64>) -> Result<RigidPose, GeomError> {
    let forward = target - eye;
    let norm = forward.norm();
    if norm == 0.0 {
        return Err(GeomError::ZeroLengthVector);
    }
    let z = forward / norm;
    let up = Vector3::new(0.0, 0.0, 1.0);
    let mut x = z.cross(&up);
    if x.norm() < 1e-9 {
        // Looking straight up/down: fall back to world +x as the image x axis.
        x = Vector3::new(1.0, 0.0, 0.0);
    }
    let x = x.normalize();
    let y = z.cross(&x);
    let rotation = Matrix3::from_columns(&[x, y, z]);
    RigidPose::new(rotation, eye)
}

/// Deterministic spiral of `n` look-at poses on the upper hemisphere of the
/// given radius around `center`. Consecutive poses advance azimuth by
/// `2*pi/n` while elevation sweeps the given range, so a single winding acts
/// as one evenly spaced ring. `n == 1` yields a single top-down pose.
pub fn hemisphere_poses(
    n: usize,
    radius: f64,
    center: Vector3<f64>,
    elevation_range_rad: (f64, f64),
) -> Vec<RigidPose> {
    assert!(n >= 1, "need at least one pose");
    assert!(radius > 0.0, "radius must be positive");
    if n == 1 {
        let eye = center + Vector3::new(0.0, 0.0, radius);
        return vec![look_at(eye, center).expect("radius > 0 guarantees a valid look-at")];
    }
    let (lo, hi) = elevation_range_rad;
    let mut poses = Vec::with_capacity(n);
    for i in 0..n {
        let azimuth = i as f64 * std::f64::consts::TAU / n as f64;
        // Sweep elevation high-to-low so view 0 is the most top-down one.
        let frac = (i as f64 + 0.5) / n as f64;
        let elevation = hi - frac * (hi - lo);
        let eye = center
            + radius
                * Vector3::new(
                    elevation.cos() * azimuth.cos(),
                    elevation.cos() * azimuth.sin(),
                    elevation.sin(),
                );
        poses.push(look_at(eye, center).expect("radius > 0 guarantees a valid look-at"));
    }
    poses
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::SmallRng;
    use rand::{Rng, SeedableRng};

    fn test_intrinsics() -> CameraIntrinsics {
        CameraIntrinsics::new(520.0, 520.0, 320.0, 180.0, 640, 360).unwrap()
    }

    fn random_pose(rng: &mut impl Rng) -> RigidPose {
        let axis = Vector3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)).normalize();
        let angle = rng.gen_range(-3.0..3.0);
        RigidPose::new(
            rodrigues(&axis, angle),
            Vector3::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)),
        )
        .unwrap()
    }

    #[test]
    fn principal_point_ray_is_forward() {
        let cam = Camera::new(test_intrinsics(), RigidPose::identity());
        let ray = cam.ray_for_pixel(Vector2::new(320.0, 180.0), (0.1, 10.0)).unwrap();
        assert!((ray.dir - Vector3::new(0.0, 0.0, 1.0)).norm() < 1e-12);
    }

    #[test]
    fn one_focal_length_off_axis_is_45_degrees() {
        // Principal point at cx=320 with fx=300 keeps cx+fx inside the image.
        let intr = CameraIntrinsics::new(300.0, 300.0, 320.0, 180.0, 640, 360).unwrap();
        let cam = Camera::new(intr, RigidPose::identity());
        let ray = cam.ray_for_pixel(Vector2::new(620.0, 180.0), (0.1, 10.0)).unwrap();
        let expected = Vector3::new(1.0, 0.0, 1.0).normalize();
        assert!((ray.dir - expected).norm() < 1e-12);
    }

    #[test]
    fn out_of_bounds_pixel_rejected() {
        let cam = Camera::new(test_intrinsics(), RigidPose::identity());
        assert!(matches!(
            cam.ray_for_pixel(Vector2::new(640.0, 10.0), (0.1, 10.0)),
            Err(GeomError::PixelOutOfBounds(..))
        ));
    }

    #[test]
    fn forward_point_projects_to_principal_point() {
        let cam = Camera::new(test_intrinsics(), RigidPose::identity());
        let (pixel, depth) = cam.project(&Vector3::new(0.0, 0.0, 1.0)).unwrap();
        assert!((pixel - Vector2::new(320.0, 180.0)).norm() < 1e-12);
        assert!((depth - 1.0).abs() < 1e-12);
    }

    #[test]
    fn behind_camera_rejected() {
        let cam = Camera::new(test_intrinsics(), RigidPose::identity());
        assert!(matches!(cam.project(&Vector3::new(0.0, 0.0, -1.0)), Err(GeomError::BehindCamera(_))));
        assert!(matches!(cam.unproject(Vector2::new(1.0, 1.0), 0.0), Err(GeomError::InvalidDepth(_))));
    }

    #[test]
    fn ray_project_round_trip() {
        let mut rng = SmallRng::seed_from_u64(11);
        for _ in 0..100 {
            let cam = Camera::new(test_intrinsics(), random_pose(&mut rng));
            let pixel = Vector2::new(rng.gen_range(0.0..640.0), rng.gen_range(0.0..360.0));
            let ray = cam.ray_for_pixel(pixel, (0.01, 100.0)).unwrap();
            let (reproj, _) = cam.project(&ray.at(2.0)).unwrap();
            assert!((reproj - pixel).norm() < 1e-6, "round trip error {}", (reproj - pixel).norm());
        }
    }

    #[test]
    fn project_unproject_round_trip() {
        let mut rng = SmallRng::seed_from_u64(12);
        let mut max_err: f64 = 0.0;
        for _ in 0..100 {
            let cam = Camera::new(test_intrinsics(), random_pose(&mut rng));
            let p_cam = Vector3::new(rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5), rng.gen_range(0.2..5.0));
            let p = cam.pose.camera_to_world(&p_cam);
            let (pixel, depth) = cam.project(&p).unwrap();
            let back = cam.unproject(pixel, depth).unwrap();
            max_err = max_err.max((back - p).norm());
        }
        assert!(max_err < 1e-9, "max round-trip error {max_err}");
    }

    /// Independent quaternion oracle for rotation_between.
    fn quaternion_rotation(a: &Vector3<f64>, b: &Vector3<f64>) -> Matrix3<f64> {
        let ah = a.normalize();
        let bh = b.normalize();
        let w = 1.0 + ah.dot(&bh);
        let v = ah.cross(&bh);
        let norm = (w * w + v.norm_squared()).sqrt();
        let (w, x, y, z) = (w / norm, v.x / norm, v.y / norm, v.z / norm);
        Matrix3::new(
            1.0 - 2.0 * (y * y + z * z),
            2.0 * (x * y - w * z),
            2.0 * (x * z + w * y),
            2.0 * (x * y + w * z),
            1.0 - 2.0 * (x * x + z * z),
            2.0 * (y * z - w * x),
            2.0 * (x * z - w * y),
            2.0 * (y * z + w * x),
            1.0 - 2.0 * (x * x + y * y),
        )
    }

    #[test]
    fn rotation_between_identity_and_antipodal() {
        let a = Vector3::new(0.3, -0.2, 0.9);
        let r = rotation_between(&a, &a).unwrap();
        assert!((r - Matrix3::identity()).norm() < 1e-12);

        let r = rotation_between(&a, &(-a)).unwrap();
        assert!(is_rotation(&r, 1e-9));
        assert!((r * a.normalize() + a.normalize()).norm() < 1e-9);
    }

    #[test]
    fn rotation_between_matches_quaternion_oracle() {
        let mut rng = SmallRng::seed_from_u64(13);
        for _ in 0..200 {
            let a = Vector3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            let b = Vector3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            if a.norm() < 1e-3 || b.norm() < 1e-3 || a.normalize().dot(&b.normalize()) < -0.999 {
                continue;
            }
            let r = rotation_between(&a, &b).unwrap();
            assert!(is_rotation(&r, 1e-9));
            assert!((r * a.normalize() - b.normalize()).norm() < 1e-9);
            assert!((r - quaternion_rotation(&a, &b)).norm() < 1e-8);
            // Rotation angle equals the angle between the inputs.
            let angle = ((r.trace() - 1.0) / 2.0).clamp(-1.0, 1.0).acos();
            let expected = a.normalize().dot(&b.normalize()).clamp(-1.0, 1.0).acos();
            assert!((angle - expected).abs() < 1e-9);
        }
    }

    #[test]
    fn rotation_between_rejects_zero_input() {
        assert!(rotation_between(&Vector3::zeros(), &Vector3::x()).is_err());
    }

    #[test]
    fn hemisphere_single_pose_is_top_down() {
        let center = Vector3::new(0.1, 0.2, 0.0);
        let poses = hemisphere_poses(1, 0.8, center, (0.4, 1.2));
        assert_eq!(poses.len(), 1);
        let eye = poses[0].translation;
        assert!((eye - (center + Vector3::new(0.0, 0.0, 0.8))).norm() < 1e-12);
        assert!((poses[0].forward() - Vector3::new(0.0, 0.0, -1.0)).norm() < 1e-12);
    }

    #[test]
    fn hemisphere_poses_face_center() {
        let center = Vector3::new(0.0, 0.0, 0.1);
        for pose in hemisphere_poses(8, 1.0, center, (0.4, 1.1)) {
            let to_center = (center - pose.translation).normalize();
            assert!((pose.forward() - to_center).norm() < 1e-9);
            assert!(is_rotation(&pose.rotation, 1e-9));
        }
    }

    #[test]
    fn hemisphere_azimuth_spacing_is_uniform() {
        let n = 16;
        let poses = hemisphere_poses(n, 1.0, Vector3::zeros(), (0.3, 1.0));
        let azimuths: Vec<f64> = poses.iter().map(|p| p.translation.y.atan2(p.translation.x)).collect();
        for i in 1..n {
            let mut delta = azimuths[i] - azimuths[i - 1];
            while delta < 0.0 {
                delta += std::f64::consts::TAU;
            }
            assert!((delta - std::f64::consts::TAU / n as f64).abs() < 1e-9, "spacing {delta}");
        }
    }

    #[test]
    fn rays_for_distinct_pixels_differ() {
        let cam = Camera::new(test_intrinsics(), RigidPose::identity());
        let r1 = cam.ray_for_pixel_index(10, 20, (0.1, 5.0)).unwrap();
        let r2 = cam.ray_for_pixel_index(11, 20, (0.1, 5.0)).unwrap();
        assert!((r1.dir - r2.dir).norm() > 0.0);
        assert!((r1.dir.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn pose_matrix_round_trip() {
        let mut rng = SmallRng::seed_from_u64(14);
        let pose = random_pose(&mut rng);
        let rows = pose.to_rows();
        let back = RigidPose::from_rows(&rows).unwrap();
        assert!((back.rotation - pose.rotation).norm() < 1e-12);
        assert!((back.translation - pose.translation).norm() < 1e-12);
    }
}
