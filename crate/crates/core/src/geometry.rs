//! Pinhole projection and multi-view triangulation.
//!
//! A [`CameraModel`] is a calibrated camera given by its 3x4 projection
//! matrix and image bounds. [`triangulate`] recovers a 3D point from two or
//! more pixel observations by a direct-linear-transform solve, optionally
//! refined with Gauss-Newton on the sum of squared reprojection errors.

use alloc::vec::Vec;
use core::fmt;

use nalgebra::{Matrix3, Matrix4, SMatrix, Vector3};
use rand::Rng;

pub type Point3 = nalgebra::Point3<f64>;
pub type Vec3 = Vector3<f64>;
pub type CameraId = u32;
pub type ProjectionMatrix = SMatrix<f64, 3, 4>;

/// Continuous pixel coordinates. May lie outside the image bounds; bounds
/// checks are a caller decision.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pixel {
    pub u: f64,
    pub v: f64,
}

impl Pixel {
    pub fn new(u: f64, v: f64) -> Self {
        Pixel { u, v }
    }

    /// Euclidean distance in pixels.
    pub fn distance(&self, other: &Pixel) -> f64 {
        libm::hypot(self.u - other.u, self.v - other.v)
    }
}

/// A per-camera 2D detection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PixelObservation {
    pub camera_id: CameraId,
    pub pixel: Pixel,
    /// Monotone frame tag.
    pub frame: u64,
}

/// Numeric tolerances for projection and triangulation.
#[derive(Debug, Clone, Copy)]
pub struct Tolerances {
    /// |w3| below this signals a point on the principal plane.
    pub depth_epsilon: f64,
    /// |X4| of the homogeneous solution below this signals a point at
    /// infinity (parallel rays).
    pub homogeneous_epsilon: f64,
    /// Gauss-Newton stops when the step norm drops below this (meters).
    pub step_epsilon: f64,
    /// Maximum Gauss-Newton iterations.
    pub max_refine_iters: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            depth_epsilon: 1e-9,
            homogeneous_epsilon: 1e-12,
            step_epsilon: 1e-10,
            max_refine_iters: 10,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CameraError {
    /// Leading 3x3 block of P is rank deficient; the camera center is not
    /// well defined.
    SingularProjection { id: CameraId },
    EmptyImage { id: CameraId },
    NonFinite { id: CameraId },
}

impl fmt::Display for CameraError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CameraError::SingularProjection { id } => {
                write!(f, "camera {id}: leading 3x3 block of P is singular")
            }
            CameraError::EmptyImage { id } => {
                write!(f, "camera {id}: image dimensions must be positive")
            }
            CameraError::NonFinite { id } => {
                write!(f, "camera {id}: projection matrix has non-finite entries")
            }
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for CameraError {}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProjectionError {
    /// The point lies on the camera's principal plane (|w3| ~ 0).
    DepthDegenerate,
    /// The point projects with negative depth.
    BehindCamera,
}

impl fmt::Display for ProjectionError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProjectionError::DepthDegenerate => write!(f, "point on the principal plane"),
            ProjectionError::BehindCamera => write!(f, "point projects behind the camera"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for ProjectionError {}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TriangulationError {
    TooFewObservations { got: usize },
    /// Parallel rays or coincident camera centers.
    DegenerateGeometry,
    NonFinite,
}

impl fmt::Display for TriangulationError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TriangulationError::TooFewObservations { got } => {
                write!(f, "triangulation needs at least 2 observations, got {got}")
            }
            TriangulationError::DegenerateGeometry => write!(f, "degenerate geometry"),
            TriangulationError::NonFinite => write!(f, "non-finite triangulation result"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for TriangulationError {}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RigError {
    TooFewCameras { got: usize },
    InvalidWorkspace,
}

impl fmt::Display for RigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RigError::TooFewCameras { got } => {
                write!(f, "synthetic rig needs at least 2 cameras, got {got}")
            }
            RigError::InvalidWorkspace => write!(f, "workspace box has non-positive extent"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for RigError {}

/// A calibrated camera: 3x4 projection matrix plus image bounds.
#[derive(Debug, Clone, PartialEq)]
pub struct CameraModel {
    pub id: CameraId,
    p: ProjectionMatrix,
    pub width: u32,
    pub height: u32,
    center: Point3,
    depth_sign: f64,
}

impl CameraModel {
    pub fn new(
        id: CameraId,
        p: ProjectionMatrix,
        width: u32,
        height: u32,
    ) -> Result<Self, CameraError> {
        if width == 0 || height == 0 {
            return Err(CameraError::EmptyImage { id });
        }
        if p.iter().any(|x| !x.is_finite()) {
            return Err(CameraError::NonFinite { id });
        }
        let m: Matrix3<f64> = p.fixed_view::<3, 3>(0, 0).into_owned();
        let det = m.determinant();
        let scale = m.norm();
        if libm::fabs(det) <= 1e-12 * scale * scale * scale {
            return Err(CameraError::SingularProjection { id });
        }
        let m_inv = m.try_inverse().ok_or(CameraError::SingularProjection { id })?;
        let center = Point3::from(-(m_inv * p.fixed_view::<3, 1>(0, 3)));
        // Sign convention: depth_sign * w3 > 0 for points in front of the
        // camera, invariant under scaling P by any nonzero lambda.
        let depth_sign = if det > 0.0 { 1.0 } else { -1.0 };
        Ok(CameraModel {
            id,
            p,
            width,
            height,
            center,
            depth_sign,
        })
    }

    pub fn projection(&self) -> &ProjectionMatrix {
        &self.p
    }

    /// Camera center in world coordinates.
    pub fn center(&self) -> Point3 {
        self.center
    }

    /// Projects a world point to continuous pixel coordinates.
    pub fn project(&self, x: &Point3) -> Result<Pixel, ProjectionError> {
        self.project_with(x, &Tolerances::default())
    }

    pub fn project_with(&self, x: &Point3, tol: &Tolerances) -> Result<Pixel, ProjectionError> {
        let w = self.p * x.to_homogeneous();
        if libm::fabs(w.z) < tol.depth_epsilon {
            return Err(ProjectionError::DepthDegenerate);
        }
        if self.depth_sign * w.z < 0.0 {
            return Err(ProjectionError::BehindCamera);
        }
        Ok(Pixel::new(w.x / w.z, w.y / w.z))
    }

    /// True when the pixel lies inside the image bounds.
    pub fn in_bounds(&self, px: &Pixel) -> bool {
        px.u >= 0.0 && px.u < self.width as f64 && px.v >= 0.0 && px.v < self.height as f64
    }
}

/// Per-observation Euclidean pixel distance between the observation and the
/// projection of `x`. A projection failure is reported as infinite error.
pub fn reprojection_errors(x: &Point3, obs: &[(Pixel, &CameraModel)]) -> Vec<f64> {
    obs.iter()
        .map(|(px, cam)| match cam.project(x) {
            Ok(p) => p.distance(px),
            Err(_) => f64::INFINITY,
        })
        .collect()
}

fn reprojection_cost(x: &Point3, obs: &[(Pixel, &CameraModel)], tol: &Tolerances) -> f64 {
    let xh = x.to_homogeneous();
    let mut cost = 0.0;
    for (px, cam) in obs {
        let w = cam.p * xh;
        if libm::fabs(w.z) < tol.depth_epsilon {
            return f64::INFINITY;
        }
        let du = px.u - w.x / w.z;
        let dv = px.v - w.y / w.z;
        cost += du * du + dv * dv;
    }
    cost
}

/// Recovers the 3D point that minimizes pixel reprojection error.
///
/// The linear stage stacks two DLT rows per camera and takes the smallest
/// eigenvector of the normal matrix. With `refine`, Gauss-Newton is run on
/// the sum of squared reprojection errors starting from the linear
/// solution; the refined point never has a larger cost than the start.
pub fn triangulate(obs: &[(Pixel, &CameraModel)], refine: bool) -> Result<Point3, TriangulationError> {
    triangulate_with(obs, refine, &Tolerances::default())
}

pub fn triangulate_with(
    obs: &[(Pixel, &CameraModel)],
    refine: bool,
    tol: &Tolerances,
) -> Result<Point3, TriangulationError> {
    if obs.len() < 2 {
        return Err(TriangulationError::TooFewObservations { got: obs.len() });
    }
    for i in 0..obs.len() {
        for j in (i + 1)..obs.len() {
            if (obs[i].1.center() - obs[j].1.center()).norm() < 1e-9 {
                return Err(TriangulationError::DegenerateGeometry);
            }
        }
    }

    let mut ata = Matrix4::<f64>::zeros();
    for (px, cam) in obs {
        let p = &cam.p;
        let rows = [px.u * p.row(2) - p.row(0), px.v * p.row(2) - p.row(1)];
        for r in rows {
            let n = r.norm();
            if n > 0.0 {
                let rn = r / n;
                ata += rn.transpose() * rn;
            }
        }
    }

    let eig = ata.symmetric_eigen();
    let mut min_idx = 0;
    for k in 1..4 {
        if eig.eigenvalues[k] < eig.eigenvalues[min_idx] {
            min_idx = k;
        }
    }
    let h = eig.eigenvectors.column(min_idx);
    if libm::fabs(h[3]) < tol.homogeneous_epsilon {
        return Err(TriangulationError::DegenerateGeometry);
    }
    let x = Point3::new(h[0] / h[3], h[1] / h[3], h[2] / h[3]);
    if !x.coords.iter().all(|c| c.is_finite()) {
        return Err(TriangulationError::NonFinite);
    }
    if refine {
        Ok(refine_gauss_newton(x, obs, tol))
    } else {
        Ok(x)
    }
}

fn refine_gauss_newton(start: Point3, obs: &[(Pixel, &CameraModel)], tol: &Tolerances) -> Point3 {
    let mut best = start;
    let mut best_cost = reprojection_cost(&start, obs, tol);
    let mut cur = start;
    for _ in 0..tol.max_refine_iters {
        let mut jtj = Matrix3::<f64>::zeros();
        let mut jtr = Vector3::<f64>::zeros();
        let mut usable = true;
        for (px, cam) in obs {
            let w = cam.p * cur.to_homogeneous();
            if libm::fabs(w.z) < tol.depth_epsilon {
                usable = false;
                break;
            }
            let inv = 1.0 / w.z;
            let u = w.x * inv;
            let v = w.y * inv;
            let m = cam.p.fixed_view::<3, 3>(0, 0);
            let ju = (m.row(0) - u * m.row(2)) * inv;
            let jv = (m.row(1) - v * m.row(2)) * inv;
            jtj += ju.transpose() * ju + jv.transpose() * jv;
            jtr += ju.transpose() * (px.u - u) + jv.transpose() * (px.v - v);
        }
        if !usable {
            break;
        }
        let step = match jtj.cholesky() {
            Some(chol) => chol.solve(&jtr),
            None => break,
        };
        cur += step;
        let cost = reprojection_cost(&cur, obs, tol);
        if cost.is_finite() && cost < best_cost {
            best = cur;
            best_cost = cost;
        } else {
            break;
        }
        if step.norm() < tol.step_epsilon {
            break;
        }
    }
    best
}

/// Axis-aligned workspace box in meters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aabb {
    pub min: Point3,
    pub max: Point3,
}

impl Aabb {
    pub fn new(min: Point3, max: Point3) -> Self {
        Aabb { min, max }
    }

    pub fn center(&self) -> Point3 {
        Point3::from((self.min.coords + self.max.coords) * 0.5)
    }

    pub fn diagonal(&self) -> f64 {
        (self.max - self.min).norm()
    }

    pub fn corners(&self) -> [Point3; 8] {
        let (a, b) = (self.min, self.max);
        [
            Point3::new(a.x, a.y, a.z),
            Point3::new(b.x, a.y, a.z),
            Point3::new(a.x, b.y, a.z),
            Point3::new(b.x, b.y, a.z),
            Point3::new(a.x, a.y, b.z),
            Point3::new(b.x, a.y, b.z),
            Point3::new(a.x, b.y, b.z),
            Point3::new(b.x, b.y, b.z),
        ]
    }

    pub fn contains(&self, p: &Point3) -> bool {
        (0..3).all(|i| p[i] >= self.min[i] && p[i] <= self.max[i])
    }

    /// Uniform sample inside the box.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Point3 {
        Point3::new(
            rng.gen_range(self.min.x..self.max.x),
            rng.gen_range(self.min.y..self.max.y),
            rng.gen_range(self.min.z..self.max.z),
        )
    }
}

/// Places `c` cameras evenly on a horizontal circle above the workspace
/// (radius 1.5x the box diagonal, 2 m above the box top), each looking at
/// the workspace center. The shared focal length makes the workspace span
/// about 60% of the image. Deterministic for fixed inputs.
pub fn synthetic_rig(
    c: usize,
    workspace: &Aabb,
    image_size: (u32, u32),
) -> Result<Vec<CameraModel>, RigError> {
    if c < 2 {
        return Err(RigError::TooFewCameras { got: c });
    }
    let diag = workspace.diagonal();
    if diag.is_nan() || diag <= 0.0 || (0..3).any(|i| workspace.max[i] <= workspace.min[i]) {
        return Err(RigError::InvalidWorkspace);
    }
    let (w, h) = image_size;
    let target = workspace.center();
    let ring_radius = 1.5 * diag;
    let ring_z = workspace.max.z + 2.0;

    let mut cams = Vec::with_capacity(c);
    for i in 0..c {
        let theta = 2.0 * core::f64::consts::PI * i as f64 / c as f64;
        let center = Point3::new(
            target.x + ring_radius * libm::cos(theta),
            target.y + ring_radius * libm::sin(theta),
            ring_z,
        );
        let dist = (target - center).norm();
        // Half-diagonal of the box maps to 60% of the half image extent.
        let focal = 0.6 * (w.min(h) as f64 / 2.0) * dist / (diag / 2.0);
        let r = look_at(&center, &target);
        let k = Matrix3::new(
            focal,
            0.0,
            w as f64 / 2.0,
            0.0,
            focal,
            h as f64 / 2.0,
            0.0,
            0.0,
            1.0,
        );
        let mut rt = ProjectionMatrix::zeros();
        rt.fixed_view_mut::<3, 3>(0, 0).copy_from(&r);
        rt.fixed_view_mut::<3, 1>(0, 3)
            .copy_from(&(-(r * center.coords)));
        let p = k * rt;
        let cam = CameraModel::new(i as CameraId, p, w, h).expect("rig camera is well formed");
        cams.push(cam);
    }
    Ok(cams)
}

/// Rotation whose third row (principal axis) points from `eye` to `target`.
fn look_at(eye: &Point3, target: &Point3) -> Matrix3<f64> {
    let z = (target - eye).normalize();
    let up = Vector3::z();
    let mut x = up.cross(&z);
    if x.norm() < 1e-12 {
        x = Vector3::y().cross(&z);
    }
    let x = x.normalize();
    let y = z.cross(&x);
    Matrix3::from_rows(&[x.transpose(), y.transpose(), z.transpose()])
}
