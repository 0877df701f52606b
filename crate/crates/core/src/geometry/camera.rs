use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Vec3 = [f64; 3];
pub type Mat3 = [[f64; 3]; 3];

#[inline]
pub fn add(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

#[inline]
pub fn sub(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

#[inline]
pub fn scale(a: Vec3, s: f64) -> Vec3 {
    [a[0] * s, a[1] * s, a[2] * s]
}

#[inline]
pub fn dot(a: Vec3, b: Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[inline]
pub fn norm(a: Vec3) -> f64 {
    dot(a, a).sqrt()
}

#[inline]
pub fn squared_distance(a: Vec3, b: Vec3) -> f64 {
    let d = sub(a, b);
    d[0] * d[0] + d[1] * d[1] + d[2] * d[2]
}

pub fn normalize(a: Vec3) -> Vec3 {
    scale(a, 1.0 / norm(a))
}

pub fn cross(a: Vec3, b: Vec3) -> Vec3 {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

pub fn mat_vec(m: &Mat3, v: Vec3) -> Vec3 {
    [dot(m[0], v), dot(m[1], v), dot(m[2], v)]
}

pub fn mat_mul(a: &Mat3, b: &Mat3) -> Mat3 {
    let mut out = [[0.0; 3]; 3];
    for (r, row) in out.iter_mut().enumerate() {
        for (c, v) in row.iter_mut().enumerate() {
            *v = (0..3).map(|k| a[r][k] * b[k][c]).sum();
        }
    }
    out
}

/// Rotation about a unit axis (Rodrigues).
pub fn axis_angle(axis: Vec3, angle_rad: f64) -> Mat3 {
    let [x, y, z] = normalize(axis);
    let (s, c) = angle_rad.sin_cos();
    let t = 1.0 - c;
    [
        [t * x * x + c, t * x * y - s * z, t * x * z + s * y],
        [t * x * y + s * z, t * y * y + c, t * y * z - s * x],
        [t * x * z - s * y, t * y * z + s * x, t * z * z + c],
    ]
}

/// Pinhole camera in the x-right, y-down, z-forward convention.
///
/// `rotation` maps camera-frame directions to world directions; `translation`
/// is the camera center in world coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct CameraView {
    pub id: usize,
    pub image_path: PathBuf,
    pub width: u32,
    pub height: u32,
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub rotation: Mat3,
    pub translation: Vec3,
    pub near: f64,
    pub far: f64,
}

const ORTHONORMAL_TOLERANCE: f64 = 1e-6;

impl CameraView {
    pub fn validate(&self) -> Result<()> {
        let r = &self.rotation;
        for a in 0..3 {
            for b in 0..3 {
                let expect = if a == b { 1.0 } else { 0.0 };
                if (dot(r[a], r[b]) - expect).abs() > ORTHONORMAL_TOLERANCE {
                    return Err(Error::param(format!(
                        "view {}: rotation is not orthonormal",
                        self.id
                    )));
                }
            }
        }
        if !(self.fx > 0.0 && self.fy > 0.0) {
            return Err(Error::param(format!("view {}: focal lengths must be positive", self.id)));
        }
        if !(self.near < self.far) {
            return Err(Error::param(format!("view {}: near must be below far", self.id)));
        }
        if self.width == 0 || self.height == 0 {
            return Err(Error::param(format!("view {}: empty image size", self.id)));
        }
        Ok(())
    }

    pub fn center(&self) -> Vec3 {
        self.translation
    }

    /// World-space unit optical axis.
    pub fn optical_axis(&self) -> Vec3 {
        normalize(mat_vec(&self.rotation, [0.0, 0.0, 1.0]))
    }

    /// World-space unit direction of the ray through pixel coordinates `(u, v)`.
    pub fn ray_direction(&self, u: f64, v: f64) -> Vec3 {
        let d = [(u - self.cx) / self.fx, (v - self.cy) / self.fy, 1.0];
        normalize(mat_vec(&self.rotation, d))
    }

    /// Applies the rigid motion `x -> q x + shift` to the camera.
    pub fn transformed(&self, q: &Mat3, shift: Vec3) -> Self {
        Self {
            rotation: mat_mul(q, &self.rotation),
            translation: add(mat_vec(q, self.translation), shift),
            ..self.clone()
        }
    }
}

/// On-disk camera record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CameraRecord {
    pub id: usize,
    pub file: String,
    pub width: u32,
    pub height: u32,
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    /// Row-major world-from-camera rotation.
    #[serde(rename = "R")]
    pub r: [f64; 9],
    pub t: [f64; 3],
    pub near: f64,
    pub far: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneFile {
    pub views: Vec<CameraRecord>,
}

impl From<&CameraView> for CameraRecord {
    fn from(v: &CameraView) -> Self {
        let m = &v.rotation;
        Self {
            id: v.id,
            file: v.image_path.to_string_lossy().into_owned(),
            width: v.width,
            height: v.height,
            fx: v.fx,
            fy: v.fy,
            cx: v.cx,
            cy: v.cy,
            r: [
                m[0][0], m[0][1], m[0][2], m[1][0], m[1][1], m[1][2], m[2][0], m[2][1], m[2][2],
            ],
            t: v.translation,
            near: v.near,
            far: v.far,
        }
    }
}

impl CameraRecord {
    pub fn to_view(&self) -> Result<CameraView> {
        let r = &self.r;
        let view = CameraView {
            id: self.id,
            image_path: PathBuf::from(&self.file),
            width: self.width,
            height: self.height,
            fx: self.fx,
            fy: self.fy,
            cx: self.cx,
            cy: self.cy,
            rotation: [[r[0], r[1], r[2]], [r[3], r[4], r[5]], [r[6], r[7], r[8]]],
            translation: self.t,
            near: self.near,
            far: self.far,
        };
        view.validate()?;
        Ok(view)
    }
}

impl SceneFile {
    pub fn from_views(views: &[CameraView]) -> Self {
        Self {
            views: views.iter().map(CameraRecord::from).collect(),
        }
    }

    /// Validated views with duplicate ids rejected.
    pub fn to_views(&self) -> Result<Vec<CameraView>> {
        let views = self
            .views
            .iter()
            .map(CameraRecord::to_view)
            .collect::<Result<Vec<_>>>()?;
        let mut ids: Vec<usize> = views.iter().map(|v| v.id).collect();
        ids.sort_unstable();
        if ids.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::param("duplicate view ids in scene"));
        }
        Ok(views)
    }

    pub fn parse(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::format("camera file", e))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scene serializes")
    }
}

/// Reads a scene file; relative image paths are resolved against its directory.
pub fn load_scene(path: impl AsRef<Path>) -> Result<Vec<CameraView>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut views = SceneFile::parse(&text)?.to_views()?;
    let base = path.parent().unwrap_or(Path::new(""));
    for v in &mut views {
        if v.image_path.is_relative() {
            v.image_path = base.join(&v.image_path);
        }
    }
    Ok(views)
}

/// Orthonormal world-from-camera rotation for a camera at `eye` looking at
/// `target`, image rows pointing along `-up`.
pub fn look_at(eye: Vec3, target: Vec3, up: Vec3) -> Mat3 {
    let z = normalize(sub(target, eye));
    let x = normalize(cross(z, up));
    let y = cross(z, x);
    // columns are the camera axes in world coordinates
    [[x[0], y[0], z[0]], [x[1], y[1], z[1]], [x[2], y[2], z[2]]]
}
