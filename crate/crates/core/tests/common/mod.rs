#![allow(dead_code)]

use std::path::{Path, PathBuf};

use nds_core::geometry::{look_at, CameraView, SceneFile, SceneSphere, Vec3};
use nds_core::ImagePlane;

pub const FIXTURES: [&str; 3] = ["astronaut", "coffee", "chelsea"];

pub fn fixture_path(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(format!("{name}.png"))
}

pub fn fixture(name: &str) -> ImagePlane {
    ImagePlane::load_png(fixture_path(name)).unwrap()
}

/// Deterministic pseudo-random image.
pub fn noise_image(h: usize, w: usize, seed: u64) -> ImagePlane {
    let mut s = seed;
    ImagePlane::from_fn(h, w, |_, _, _| {
        s = nds_core::rng::mix64(s.wrapping_add(0x9E37));
        (s >> 11) as f64 / (1u64 << 53) as f64
    })
    .unwrap()
}

/// Smooth image with edges and texture, values well inside (0, 1).
pub fn textured(h: usize, w: usize, phase: f64) -> ImagePlane {
    ImagePlane::from_fn(h, w, |i, j, c| {
        let (y, x) = (i as f64, j as f64);
        let base = 0.5 + 0.25 * ((x * 0.13 + phase).sin() * (y * 0.09 + c as f64).cos());
        let edge = if (i / 16 + j / 16) % 2 == 0 { 0.1 } else { -0.1 };
        base + edge
    })
    .unwrap()
}

pub fn camera(id: usize, eye: Vec3, target: Vec3, near: f64, far: f64) -> CameraView {
    CameraView {
        id,
        image_path: format!("{id:03}.png").into(),
        width: 64,
        height: 48,
        fx: 40.0,
        fy: 40.0,
        cx: 32.0,
        cy: 24.0,
        rotation: look_at(eye, target, [0.0, 1.0, 0.0]),
        translation: eye,
        near,
        far,
    }
}

/// `n` cameras evenly spaced on a horizontal circle of radius 4 around the
/// origin, all looking at the origin.
pub fn ring_rig(n: usize) -> Vec<CameraView> {
    (0..n)
        .map(|k| {
            let a = k as f64 * std::f64::consts::TAU / n as f64;
            camera(k, [4.0 * a.cos(), 0.0, 4.0 * a.sin()], [0.0; 3], 3.0, 5.0)
        })
        .collect()
}

pub fn unit_sphere() -> SceneSphere {
    SceneSphere::new([0.0; 3], 1.0).unwrap()
}

/// Forward-facing rig: cameras on a small grid in the z=0 plane looking
/// down -z with slight toe-in, scene content 3-8 units away.
pub fn forward_facing_rig(n: usize) -> Vec<CameraView> {
    (0..n)
        .map(|k| {
            let x = (k % 5) as f64 * 0.3 - 0.6;
            let y = (k / 5) as f64 * 0.2 - 0.2;
            camera(k, [x, y, 0.0], [x * 0.2, y * 0.2, -5.0], 3.0, 8.0)
        })
        .collect()
}

/// Writes `views` as a scene file plus a `h x w` PNG per view.
pub fn write_scene(dir: &Path, views: &[CameraView], h: usize, w: usize) -> PathBuf {
    std::fs::create_dir_all(dir).unwrap();
    for (k, v) in views.iter().enumerate() {
        textured(h, w, k as f64 * 0.7)
            .save_png(dir.join(&v.image_path))
            .unwrap();
    }
    let path = dir.join("cameras.json");
    std::fs::write(&path, SceneFile::from_views(views).to_json()).unwrap();
    path
}

/// `clips` clip directories of `frames` PNG frames each.
pub fn write_video_dir(dir: &Path, clips: usize, frames: usize, h: usize, w: usize) {
    for c in 0..clips {
        let clip = dir.join(format!("{c:05}"));
        std::fs::create_dir_all(&clip).unwrap();
        for f in 0..frames {
            textured(h, w, c as f64 + f as f64 * 0.3)
                .save_png(clip.join(format!("im{}.png", f + 1)))
                .unwrap();
        }
    }
}

/// Every regular file under `dir` with its bytes, sorted by relative path.
pub fn tree_bytes(dir: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    let mut out: Vec<_> = walkdir(dir)
        .into_iter()
        .map(|p| (p.strip_prefix(dir).unwrap().to_path_buf(), std::fs::read(&p).unwrap()))
        .collect();
    out.sort();
    out
}

fn walkdir(dir: &Path) -> Vec<PathBuf> {
    let mut out = Vec::new();
    for e in std::fs::read_dir(dir).unwrap() {
        let p = e.unwrap().path();
        if p.is_dir() {
            out.extend(walkdir(&p));
        } else {
            out.push(p);
        }
    }
    out
}
