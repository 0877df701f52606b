//! Conversion from the LLFF `poses_bounds` layout to camera records.
//!
//! Each view is a row of 17 little-endian `f64`s: a row-major 3x5 matrix
//! `[R | t | (h, w, f)]` whose rotation columns are the camera's
//! (down, right, backwards) axes in world space, followed by the near and
//! far depth bounds. The file may carry a `.npy` header or be raw.

use std::path::Path;

use super::camera::{CameraView, SceneFile};
use crate::error::{Error, Result};

pub const LLFF_ROW_LEN: usize = 17;
const NPY_MAGIC: &[u8] = b"\x93NUMPY";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LlffPose {
    /// Row-major 3x5 matrix.
    pub matrix: [[f64; 5]; 3],
    pub near: f64,
    pub far: f64,
}

impl LlffPose {
    pub fn from_row(row: &[f64]) -> Self {
        let mut matrix = [[0.0; 5]; 3];
        for (r, m) in matrix.iter_mut().enumerate() {
            m.copy_from_slice(&row[r * 5..r * 5 + 5]);
        }
        Self {
            matrix,
            near: row[15],
            far: row[16],
        }
    }

    pub fn to_row(&self) -> [f64; LLFF_ROW_LEN] {
        let mut row = [0.0; LLFF_ROW_LEN];
        for r in 0..3 {
            row[r * 5..r * 5 + 5].copy_from_slice(&self.matrix[r]);
        }
        row[15] = self.near;
        row[16] = self.far;
        row
    }

    /// Pinhole view in the x-right, y-down, z-forward convention, principal
    /// point at the image center.
    pub fn to_view(&self, id: usize, file: impl Into<std::path::PathBuf>) -> Result<CameraView> {
        let m = &self.matrix;
        let col = |c: usize| [m[0][c], m[1][c], m[2][c]];
        let (down, right, back) = (col(0), col(1), col(2));
        let (h, w, f) = (m[0][4], m[1][4], m[2][4]);
        if !(h >= 1.0 && w >= 1.0) {
            return Err(Error::format("poses_bounds", format!("view {id}: image size {h}x{w}")));
        }
        let axes = [right, down, back.map(|v| -v)];
        let mut rotation = [[0.0; 3]; 3];
        for (c, axis) in axes.iter().enumerate() {
            for r in 0..3 {
                rotation[r][c] = axis[r];
            }
        }
        let view = CameraView {
            id,
            image_path: file.into(),
            width: w.round() as u32,
            height: h.round() as u32,
            fx: f,
            fy: f,
            cx: w / 2.0,
            cy: h / 2.0,
            rotation,
            translation: col(3),
            near: self.near,
            far: self.far,
        };
        view.validate()?;
        Ok(view)
    }
}

/// Parses raw or `.npy`-wrapped `poses_bounds` bytes.
pub fn parse_poses_bounds(bytes: &[u8]) -> Result<Vec<LlffPose>> {
    let body = if bytes.starts_with(NPY_MAGIC) {
        strip_npy_header(bytes)?
    } else {
        bytes
    };
    let row_bytes = LLFF_ROW_LEN * 8;
    if body.is_empty() || body.len() % row_bytes != 0 {
        return Err(Error::format(
            "poses_bounds",
            format!("{} bytes is not a whole number of {LLFF_ROW_LEN}-value rows", body.len()),
        ));
    }
    let values: Vec<f64> = body
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect();
    Ok(values.chunks_exact(LLFF_ROW_LEN).map(LlffPose::from_row).collect())
}

fn strip_npy_header(bytes: &[u8]) -> Result<&[u8]> {
    let bad = |m: &str| Error::format("npy header", m);
    let major = *bytes.get(6).ok_or_else(|| bad("truncated"))?;
    let (len, start) = match major {
        1 => {
            let b = bytes.get(8..10).ok_or_else(|| bad("truncated"))?;
            (u16::from_le_bytes([b[0], b[1]]) as usize, 10)
        }
        2 | 3 => {
            let b = bytes.get(8..12).ok_or_else(|| bad("truncated"))?;
            (u32::from_le_bytes([b[0], b[1], b[2], b[3]]) as usize, 12)
        }
        v => return Err(bad(&format!("unsupported version {v}"))),
    };
    let header = bytes.get(start..start + len).ok_or_else(|| bad("truncated"))?;
    let header = String::from_utf8_lossy(header);
    if !header.contains("'descr': '<f8'") {
        return Err(bad("expected little-endian float64 data"));
    }
    if header.contains("'fortran_order': True") {
        return Err(bad("fortran-ordered arrays are not supported"));
    }
    if !header.contains(&format!(", {LLFF_ROW_LEN})")) {
        return Err(bad(&format!("expected shape (N, {LLFF_ROW_LEN})")));
    }
    Ok(&bytes[start + len..])
}

/// Serializes poses as a version-1 `.npy` array of shape `(N, 17)`.
pub fn encode_poses_bounds(poses: &[LlffPose]) -> Vec<u8> {
    let mut header = format!(
        "{{'descr': '<f8', 'fortran_order': False, 'shape': ({}, {LLFF_ROW_LEN}), }}",
        poses.len()
    );
    // magic + version + len field + header + '\n' must be a multiple of 64
    while (10 + header.len() + 1) % 64 != 0 {
        header.push(' ');
    }
    header.push('\n');
    let mut out = Vec::with_capacity(10 + header.len() + poses.len() * LLFF_ROW_LEN * 8);
    out.extend_from_slice(NPY_MAGIC);
    out.extend_from_slice(&[1, 0]);
    out.extend_from_slice(&(header.len() as u16).to_le_bytes());
    out.extend_from_slice(header.as_bytes());
    for p in poses {
        for v in p.to_row() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

/// Converts a `poses_bounds` file into a scene document. Image names come
/// from the sorted PNG files of `images_dir` when given, else `NNN.png`.
pub fn convert_poses_file(input: &Path, images_dir: Option<&Path>) -> Result<SceneFile> {
    let bytes = std::fs::read(input).map_err(|e| Error::io(input, e))?;
    let poses = parse_poses_bounds(&bytes)?;
    let names: Vec<String> = match images_dir {
        Some(dir) => {
            let names = crate::dataset::list_pngs(dir)?
                .into_iter()
                .map(|p| {
                    let rel = p.strip_prefix(dir.parent().unwrap_or(Path::new(""))).unwrap_or(&p);
                    rel.to_string_lossy().into_owned()
                })
                .collect::<Vec<_>>();
            if names.len() != poses.len() {
                return Err(Error::param(format!(
                    "{} poses but {} images in {}",
                    poses.len(),
                    names.len(),
                    dir.display()
                )));
            }
            names
        }
        None => (0..poses.len()).map(|i| format!("{i:03}.png")).collect(),
    };
    let views = poses
        .iter()
        .zip(names)
        .enumerate()
        .map(|(i, (p, name))| p.to_view(i, name))
        .collect::<Result<Vec<_>>>()?;
    Ok(SceneFile::from_views(&views))
}
