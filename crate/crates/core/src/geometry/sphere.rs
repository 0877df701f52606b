use serde::{Deserialize, Serialize};

use super::camera::{add, dot, mat_vec, norm, scale, squared_distance, sub, CameraView, Mat3, Vec3};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SceneSphere {
    pub center: Vec3,
    pub radius: f64,
}

impl SceneSphere {
    pub fn new(center: Vec3, radius: f64) -> Result<Self> {
        if !(radius > 0.0) || !radius.is_finite() || center.iter().any(|c| !c.is_finite()) {
            return Err(Error::param(format!("invalid sphere radius {radius}")));
        }
        Ok(Self { center, radius })
    }

    pub fn transformed(&self, q: &Mat3, shift: Vec3) -> Self {
        Self {
            center: add(mat_vec(q, self.center), shift),
            radius: self.radius,
        }
    }
}

/// Overrides for [`estimate_scene_sphere_with`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct SphereConfig {
    pub center: Option<Vec3>,
    pub radius: Option<f64>,
    /// Fraction of the median mid-depth spread used as radius.
    pub radius_scale: Option<f64>,
}

pub const DEFAULT_RADIUS_SCALE: f64 = 0.75;
pub const MIN_SPHERE_RADIUS: f64 = 1e-3;

pub fn estimate_scene_sphere(views: &[CameraView]) -> Result<SceneSphere> {
    estimate_scene_sphere_with(views, &SphereConfig::default())
}

/// Center: mean of each camera's mid-depth point `o + axis * (near + far) / 2`.
/// Radius: `radius_scale` times the median distance from that center to the
/// mid-depth points, but no less than half the median `far - near` depth
/// extent (forward-facing rigs have nearly coincident mid-depth points), and
/// never below [`MIN_SPHERE_RADIUS`].
pub fn estimate_scene_sphere_with(views: &[CameraView], cfg: &SphereConfig) -> Result<SceneSphere> {
    if views.len() < 2 {
        return Err(Error::param(format!(
            "sphere estimation needs at least 2 views, got {}",
            views.len()
        )));
    }
    let mids: Vec<Vec3> = views
        .iter()
        .map(|v| add(v.center(), scale(v.optical_axis(), 0.5 * (v.near + v.far))))
        .collect();
    let center = cfg.center.unwrap_or_else(|| {
        let sum = mids.iter().fold([0.0; 3], |acc, m| add(acc, *m));
        scale(sum, 1.0 / mids.len() as f64)
    });
    let radius = match cfg.radius {
        Some(r) => r,
        None => {
            let spread = median(mids.iter().map(|m| norm(sub(*m, center))).collect());
            let extent = median(views.iter().map(|v| v.far - v.near).collect());
            (cfg.radius_scale.unwrap_or(DEFAULT_RADIUS_SCALE) * spread)
                .max(0.5 * extent)
                .max(MIN_SPHERE_RADIUS)
        }
    };
    SceneSphere::new(center, radius)
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Ray/sphere hit points of one view.
#[derive(Debug, Clone, PartialEq)]
pub struct IntersectionSet {
    pub view_id: usize,
    pub points: Vec<Vec3>,
}

pub const DEFAULT_RAY_GRID: usize = 16;

/// Nearest forward hit of the ray `origin + t * dir` (`dir` unit length);
/// from inside the sphere this is the single exit point.
pub fn intersect_ray(origin: Vec3, dir: Vec3, sphere: &SceneSphere) -> Option<Vec3> {
    let oc = sub(origin, sphere.center);
    let b = dot(oc, dir);
    let c = dot(oc, oc) - sphere.radius * sphere.radius;
    let disc = b * b - c;
    if disc < 0.0 {
        return None;
    }
    let root = disc.sqrt();
    let t_near = -b - root;
    let t_far = -b + root;
    let t = if t_near > 0.0 {
        t_near
    } else if t_far > 0.0 {
        t_far
    } else {
        return None;
    };
    Some(add(origin, scale(dir, t)))
}

/// Casts `grid x grid` rays through uniformly spaced pixel centers
/// `((k + 0.5) W / grid, (l + 0.5) H / grid)` and keeps the near hits.
pub fn shoot_intersections(view: &CameraView, sphere: &SceneSphere, grid: usize) -> Result<IntersectionSet> {
    if grid < 2 {
        return Err(Error::param(format!("ray grid {grid} must be at least 2")));
    }
    let (w, h) = (f64::from(view.width), f64::from(view.height));
    let mut points = Vec::with_capacity(grid * grid);
    for l in 0..grid {
        let v = (l as f64 + 0.5) * h / grid as f64;
        for k in 0..grid {
            let u = (k as f64 + 0.5) * w / grid as f64;
            if let Some(p) = intersect_ray(view.center(), view.ray_direction(u, v), sphere) {
                points.push(p);
            }
        }
    }
    Ok(IntersectionSet {
        view_id: view.id,
        points,
    })
}

/// Largest `| |p - c| - r |` over a set, relative to `r`.
pub fn max_surface_residual(set: &IntersectionSet, sphere: &SceneSphere) -> f64 {
    set.points
        .iter()
        .map(|p| (squared_distance(*p, sphere.center).sqrt() - sphere.radius).abs() / sphere.radius)
        .fold(0.0, f64::max)
}
